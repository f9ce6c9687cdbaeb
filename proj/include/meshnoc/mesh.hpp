#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "meshnoc/config.hpp"
#include "meshnoc/errors.hpp"
#include "meshnoc/stats.hpp"

namespace meshnoc {

// Position of a PE in the core grid.
struct GridCoord {
  int row = 0;
  int col = 0;
  friend bool operator==(const GridCoord&, const GridCoord&) = default;
};

// Row-major linear PE id for a grid coordinate.
inline int pe_of(GridCoord c, const DeviceConfig& cfg) {
  if (c.row < 0 || c.row >= cfg.rows || c.col < 0 || c.col >= cfg.cols) {
    throw ArenaFault(-1, 0, 0,
                     "grid coordinate (" + std::to_string(c.row) + "," + std::to_string(c.col) +
                         ") outside " + std::to_string(cfg.rows) + "x" + std::to_string(cfg.cols) +
                         " grid");
  }
  return c.row * cfg.cols + c.col;
}

// Inverse of pe_of.
inline GridCoord coord_of(int pe, const DeviceConfig& cfg) {
  if (pe < 0 || pe >= cfg.pe_count()) {
    throw ArenaFault(pe, 0, 0,
                     "PE id " + std::to_string(pe) + " outside [0, " +
                         std::to_string(cfg.pe_count()) + ")");
  }
  return GridCoord{pe / cfg.cols, pe % cfg.cols};
}

// Manhattan distance on the mesh. The mesh has no torus links, so a
// logical wrap-around shift is routed across the whole row or column.
inline int hop_distance(int a, int b, const DeviceConfig& cfg) {
  const GridCoord ca = coord_of(a, cfg);
  const GridCoord cb = coord_of(b, cfg);
  return std::abs(ca.row - cb.row) + std::abs(ca.col - cb.col);
}

// The simulated machine's memory: one fixed-size local arena per PE
// (symmetric heap at the base, private region above it) and a single
// off-chip global store. All arenas are zeroed at construction.
class Device {
 public:
  explicit Device(DeviceConfig cfg = {}) : cfg_(cfg) {
    cfg_.validate();
    local_.assign(static_cast<std::size_t>(cfg_.pe_count()),
                  std::vector<std::byte>(cfg_.local_mem_bytes, std::byte{0}));
    global_.assign(cfg_.global_mem_bytes, std::byte{0});
  }

  const DeviceConfig& config() const { return cfg_; }
  int pe_count() const { return cfg_.pe_count(); }

  // Bounds- and alignment-checked window into a PE's local arena.
  std::span<std::byte> local_range(int pe, std::uint64_t offset, std::uint64_t span) {
    check_local(pe, offset, span);
    return {local_[static_cast<std::size_t>(pe)].data() + offset, span};
  }
  std::span<const std::byte> local_range(int pe, std::uint64_t offset, std::uint64_t span) const {
    check_local(pe, offset, span);
    return {local_[static_cast<std::size_t>(pe)].data() + offset, span};
  }

  // Whole-arena view, for inspection and snapshots.
  std::span<const std::byte> local_bytes(int pe) const {
    check_pe(pe);
    return {local_[static_cast<std::size_t>(pe)].data(), local_[static_cast<std::size_t>(pe)].size()};
  }

  std::span<std::byte> global_range(std::uint64_t offset, std::uint64_t span) {
    check_global(offset, span);
    return {global_.data() + offset, span};
  }
  std::span<const std::byte> global_range(std::uint64_t offset, std::uint64_t span) const {
    check_global(offset, span);
    return {global_.data() + offset, span};
  }

  // Zero every arena and the global store.
  void reset() {
    for (auto& arena : local_) std::memset(arena.data(), 0, arena.size());
    std::memset(global_.data(), 0, global_.size());
  }

 private:
  void check_pe(int pe) const {
    if (pe < 0 || pe >= cfg_.pe_count()) {
      throw ArenaFault(pe, 0, 0, "PE id " + std::to_string(pe) + " outside [0, " +
                                     std::to_string(cfg_.pe_count()) + ")");
    }
  }
  void check_local(int pe, std::uint64_t offset, std::uint64_t span) const {
    check_pe(pe);
    if (offset % kWordBytes != 0 || span % kWordBytes != 0) {
      throw AlignmentError("local access at offset " + std::to_string(offset) + " span " +
                           std::to_string(span) + " is not word-aligned");
    }
    if (offset > cfg_.local_mem_bytes || span > cfg_.local_mem_bytes - offset) {
      throw ArenaFault(pe, offset, span,
                       "PE " + std::to_string(pe) + ": local access [" + std::to_string(offset) +
                           ", " + std::to_string(offset + span) + ") outside arena of " +
                           std::to_string(cfg_.local_mem_bytes) + " B");
    }
  }
  void check_global(std::uint64_t offset, std::uint64_t span) const {
    if (offset % kWordBytes != 0 || span % kWordBytes != 0) {
      throw AlignmentError("global access at offset " + std::to_string(offset) + " span " +
                           std::to_string(span) + " is not word-aligned");
    }
    if (offset > cfg_.global_mem_bytes || span > cfg_.global_mem_bytes - offset) {
      throw ArenaFault(-1, offset, span,
                       "global access [" + std::to_string(offset) + ", " +
                           std::to_string(offset + span) + ") outside store of " +
                           std::to_string(cfg_.global_mem_bytes) + " B");
    }
  }

  DeviceConfig cfg_;
  std::vector<std::vector<std::byte>> local_;
  std::vector<std::byte> global_;
};

// Counted transfers between a caller-provided buffer and a PE arena.
inline void local_write(Device& dev, int pe, std::uint64_t offset, std::span<const std::byte> data,
                        TrafficStats& stats) {
  auto dst = dev.local_range(pe, offset, data.size());
  std::memcpy(dst.data(), data.data(), data.size());
  stats.local_words += data.size() / kWordBytes;
}

inline void local_read(const Device& dev, int pe, std::uint64_t offset, std::span<std::byte> out,
                       TrafficStats& stats) {
  auto src = dev.local_range(pe, offset, out.size());
  std::memcpy(out.data(), src.data(), out.size());
  stats.local_words += out.size() / kWordBytes;
}

}  // namespace meshnoc
