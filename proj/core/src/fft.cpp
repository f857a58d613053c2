#include "dldmf/fft.hpp"

#include <cmath>

#include "dldmf/errors.hpp"

namespace dldmf {

SpectralWorkspace::SpectralWorkspace(int size) : n(size) {
  if (!is_pow2(n)) throw ConfigError("spectral workspace: grid size must be a power of two");
  bitrev.resize(n);
  int log2n = 0;
  while ((1 << log2n) < n) ++log2n;
  for (int i = 0; i < n; ++i) {
    int r = 0;
    for (int b = 0; b < log2n; ++b)
      if (i & (1 << b)) r |= 1 << (log2n - 1 - b);
    bitrev[i] = r;
  }
  roots.resize(n / 2);
  for (int k = 0; k < n / 2; ++k) {
    const double ang = -2.0 * 3.141592653589793238462643383280 * k / n;
    roots[k] = {std::cos(ang), std::sin(ang)};
  }
  modes.resize(n);
}

void SpectralWorkspace::fft(std::complex<double>* a) const {
  for (int i = 0; i < n; ++i)
    if (bitrev[i] > i) std::swap(a[i], a[bitrev[i]]);
  for (int len = 2; len <= n; len <<= 1) {
    const int stride = n / len;
    for (int i = 0; i < n; i += len) {
      for (int j = 0; j < len / 2; ++j) {
        const std::complex<double> w = roots[static_cast<std::size_t>(j) * stride];
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
      }
    }
  }
}

void SpectralWorkspace::ifft(std::complex<double>* a) const {
  // conjugate trick: ifft(a) = conj(fft(conj(a))) / n
  for (int i = 0; i < n; ++i) a[i] = std::conj(a[i]);
  fft(a);
  const double inv = 1.0 / n;
  for (int i = 0; i < n; ++i) a[i] = std::conj(a[i]) * inv;
}

}  // namespace dldmf
