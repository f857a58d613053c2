#pragma once

#include <complex>
#include <vector>

namespace dldmf {

// Radix-2 iterative FFT for the small fixed grid sizes of the reference
// solver. Forward uses the e^{-i...} convention; inverse scales by 1/n.
struct SpectralWorkspace {
  int n = 0;
  std::vector<int> bitrev;
  std::vector<std::complex<double>> roots;  // e^{-2 pi i k / n}, k in [0, n/2)
  std::vector<std::complex<double>> modes;

  explicit SpectralWorkspace(int n);

  static bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

  // k in {-n/2, ..., n/2 - 1} for bin j.
  int wavenumber(int j) const { return j < n / 2 ? j : j - n; }

  void fft(std::complex<double>* a) const;
  void ifft(std::complex<double>* a) const;
};

}  // namespace dldmf
