#pragma once

#include <bit>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "meshnoc/stats.hpp"

namespace meshnoc {

// A region of the global store owned by the host.
struct BufferHandle {
  std::uint64_t id = 0;
  std::uint64_t base = 0;
  std::uint64_t size = 0;  // bytes
};

enum class ArgKind { Buffer, Word };

// One kernel argument: a global-memory buffer or a 4-byte scalar word.
struct Arg {
  ArgKind kind = ArgKind::Word;
  BufferHandle buffer{};
  std::uint32_t word = 0;

  static Arg make_buffer(BufferHandle h) {
    Arg a;
    a.kind = ArgKind::Buffer;
    a.buffer = h;
    return a;
  }
  static Arg make_word(std::uint32_t bits) {
    Arg a;
    a.kind = ArgKind::Word;
    a.word = bits;
    return a;
  }
  static Arg make_word(float value) { return make_word(std::bit_cast<std::uint32_t>(value)); }
};

class KernelContext;

using KernelFn = std::function<void(KernelContext&)>;

// A registered device function plus the argument kinds it expects.
struct KernelDescriptor {
  std::string name;
  KernelFn entry;
  std::vector<ArgKind> arity;
};

// Result of one enqueue: the bound call, aggregate counters, and the
// per-PE breakdown they sum from.
struct LaunchRecord {
  std::string kernel;
  int work_items = 0;
  std::vector<Arg> args;
  TrafficStats stats;                  // aggregate over PEs
  std::vector<TrafficStats> per_pe;
  std::uint64_t barrier_events = 0;    // collective barrier_all completions
};

}  // namespace meshnoc
