#include "dldmf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "dldmf/errors.hpp"

namespace dldmf {

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

namespace {
constexpr char kMagic[6] = {'D', 'L', 'D', 'M', 'F', '\x01'};

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::istream& is, const char* what) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  if (!is) throw CheckpointError(std::string("checkpoint: truncated ") + what);
  return v;
}
}  // namespace

void write_tensors(const std::filesystem::path& path, std::span<const NamedTensor> tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError("checkpoint: cannot open " + path.string() + " for writing");
  os.write(kMagic, sizeof(kMagic));
  for (const auto& t : tensors) {
    write_u32(os, static_cast<std::uint32_t>(t.name.size()));
    os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    write_u32(os, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) write_u32(os, d);
    if (t.data.size() != t.element_count())
      throw CheckpointError("checkpoint: tensor " + t.name + " has inconsistent element count");
    os.write(reinterpret_cast<const char*>(t.data.data()),
             static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  }
  if (!os) throw CheckpointError("checkpoint: write to " + path.string() + " failed");
}

std::vector<NamedTensor> read_tensors(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("checkpoint: cannot open " + path.string());
  char magic[sizeof(kMagic)];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError("checkpoint: bad magic header in " + path.string() +
                          " (expected DLDMF\\x01)");

  std::vector<NamedTensor> tensors;
  while (true) {
    std::uint32_t name_len = 0;
    is.read(reinterpret_cast<char*>(&name_len), 4);
    if (is.eof()) break;
    if (!is) throw CheckpointError("checkpoint: truncated name length");
    NamedTensor t;
    t.name.resize(name_len);
    is.read(t.name.data(), name_len);
    if (!is) throw CheckpointError("checkpoint: truncated tensor name");
    const std::uint32_t rank = read_u32(is, "rank");
    if (rank > 8) throw CheckpointError("checkpoint: implausible rank for tensor " + t.name);
    t.dims.resize(rank);
    for (auto& d : t.dims) d = read_u32(is, "dims");
    t.data.resize(t.element_count());
    is.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!is)
      throw CheckpointError("checkpoint: truncated tensor data for " + t.name);
    tensors.push_back(std::move(t));
  }
  return tensors;
}

}  // namespace dldmf
