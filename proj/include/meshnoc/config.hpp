#pragma once

#include <cstdint>
#include <string>

#include "meshnoc/errors.hpp"

namespace meshnoc {

// One 4-byte single-precision word is the transfer and accounting unit.
inline constexpr std::uint32_t kWordBytes = 4;

// The simulated machine. Defaults model a 16-core part: a 4x4 core grid,
// 32 KB of local memory per core, and 32 MB of shared off-chip memory.
struct DeviceConfig {
  int rows = 4;
  int cols = 4;
  std::uint32_t local_mem_bytes = 32768;
  std::uint32_t sym_heap_bytes = 24576;
  std::uint64_t global_mem_bytes = 33554432;

  int pe_count() const { return rows * cols; }

  void validate() const {
    if (rows < 1 || cols < 1) {
      throw ValidationError("device grid must be at least 1x1, got " + std::to_string(rows) +
                            "x" + std::to_string(cols));
    }
    if (sym_heap_bytes > local_mem_bytes) {
      throw ValidationError("symmetric heap (" + std::to_string(sym_heap_bytes) +
                            " B) exceeds local memory (" + std::to_string(local_mem_bytes) +
                            " B)");
    }
    if (local_mem_bytes % kWordBytes != 0 || sym_heap_bytes % kWordBytes != 0 ||
        global_mem_bytes % kWordBytes != 0) {
      throw ValidationError("memory sizes must be multiples of the word size");
    }
  }
};

}  // namespace meshnoc
