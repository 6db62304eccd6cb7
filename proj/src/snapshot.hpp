#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grid.hpp"

namespace edp {

inline constexpr std::uint32_t kSnapshotVersion = 1;
inline constexpr std::size_t kSnapshotHeaderBytes = 28;

struct SnapshotHeader {
  std::uint32_t version = kSnapshotVersion;
  std::uint32_t dim = 0;
  std::uint32_t n = 0;
  double L = 0.0;
  std::uint32_t components = 0;
};

/// Layout: "EDPF", version, dim, n (u32 LE), L (f64 LE), component count
/// (u32 LE), then the components (a, v_1, ..., v_dim) as f64 LE in grid
/// storage order (row-major, last axis fastest).
std::vector<unsigned char> encode_snapshot(const Grid& grid, const State& u);
State decode_snapshot(const std::vector<unsigned char>& bytes, SnapshotHeader* header = nullptr);

void write_snapshot(const Grid& grid, const State& u, const std::string& path);
/// Throws corrupt_file on a bad magic, version or truncated payload.
State read_snapshot(const std::string& path, SnapshotHeader* header = nullptr);
/// As read_snapshot, and additionally requires the header to match the grid
/// (shape_mismatch otherwise).
State read_snapshot(const std::string& path, const Grid& grid);

}  // namespace edp
