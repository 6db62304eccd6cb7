#include "snapshot.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace edp {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put(std::vector<unsigned char>& out, T value) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(b), std::end(b));
  out.insert(out.end(), std::begin(b), std::end(b));
}

template <class T>
T get(const std::vector<unsigned char>& in, std::size_t& pos) {
  if (in.size() - pos < sizeof(T)) throw Error(ErrorKind::corrupt_file, "snapshot truncated");
  unsigned char b[sizeof(T)];
  std::memcpy(b, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(b), std::end(b));
  pos += sizeof(T);
  T value;
  std::memcpy(&value, b, sizeof(T));
  return value;
}

}  // namespace

std::vector<unsigned char> encode_snapshot(const Grid& grid, const State& u) {
  const std::size_t comps = static_cast<std::size_t>(grid.dim()) + 1;
  if (u.comps.size() != comps) throw Error(ErrorKind::shape_mismatch, "snapshot: state has wrong component count");
  std::vector<unsigned char> out;
  out.reserve(kSnapshotHeaderBytes + comps * grid.num_points() * sizeof(double));
  for (char c : {'E', 'D', 'P', 'F'}) out.push_back(static_cast<unsigned char>(c));
  put<std::uint32_t>(out, kSnapshotVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.dim()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.n()));
  put<double>(out, grid.half_length());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(comps));
  for (const auto& f : u.comps) {
    if (f.size() != grid.num_points()) throw Error(ErrorKind::shape_mismatch, "snapshot: field size mismatch");
    for (double x : f) put<double>(out, x);
  }
  return out;
}

State decode_snapshot(const std::vector<unsigned char>& bytes, SnapshotHeader* header) {
  if (bytes.size() < kSnapshotHeaderBytes) throw Error(ErrorKind::corrupt_file, "snapshot shorter than its header");
  if (std::memcmp(bytes.data(), "EDPF", 4) != 0) throw Error(ErrorKind::corrupt_file, "snapshot: bad magic");
  std::size_t pos = 4;
  SnapshotHeader h;
  h.version = get<std::uint32_t>(bytes, pos);
  h.dim = get<std::uint32_t>(bytes, pos);
  h.n = get<std::uint32_t>(bytes, pos);
  h.L = get<double>(bytes, pos);
  h.components = get<std::uint32_t>(bytes, pos);
  if (h.version != kSnapshotVersion) throw Error(ErrorKind::corrupt_file, "snapshot: unsupported version");
  if (h.dim < 1 || h.dim > 3 || h.n < 1 || h.n > (1u << 16) || h.components != h.dim + 1)
    throw Error(ErrorKind::corrupt_file, "snapshot: inconsistent header");
  std::size_t points = 1;
  for (std::uint32_t i = 0; i < h.dim; ++i) points *= h.n;
  if ((bytes.size() - pos) / sizeof(double) != points * h.components || (bytes.size() - pos) % sizeof(double) != 0)
    throw Error(ErrorKind::corrupt_file, "snapshot: payload size does not match header");
  State u;
  u.comps.assign(h.components, RealField(points));
  for (auto& f : u.comps)
    for (auto& x : f) x = get<double>(bytes, pos);
  if (header) *header = h;
  return u;
}

void write_snapshot(const Grid& grid, const State& u, const std::string& path) {
  const auto bytes = encode_snapshot(grid, u);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::io, "cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(ErrorKind::io, "write failed: " + path);
}

State read_snapshot(const std::string& path, SnapshotHeader* header) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::io, "cannot open " + path);
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_snapshot(bytes, header);
}

State read_snapshot(const std::string& path, const Grid& grid) {
  SnapshotHeader h;
  State u = read_snapshot(path, &h);
  if (h.dim != static_cast<std::uint32_t>(grid.dim()) || h.n != static_cast<std::uint32_t>(grid.n()) ||
      h.L != grid.half_length())
    throw Error(ErrorKind::shape_mismatch, "snapshot grid does not match the configured grid");
  return u;
}

}  // namespace edp
