#pragma once

#include <cstdint>

namespace meshnoc {

// Traffic and work counters. Kept both per PE and as the aggregate
// (element-wise sum over PEs) of a launch.
struct TrafficStats {
  std::uint64_t flops = 0;
  std::uint64_t global_read_words = 0;
  std::uint64_t global_write_words = 0;
  std::uint64_t remote_words = 0;      // words moved by put/get
  std::uint64_t remote_word_hops = 0;  // words x mesh hops for put/get
  std::uint64_t local_words = 0;       // words moved by explicit local read/write
  std::uint64_t barriers = 0;          // barrier_all calls
  std::uint64_t rounds = 0;            // algorithm rounds noted by the kernel

  std::uint64_t global_words() const { return global_read_words + global_write_words; }

  TrafficStats& operator+=(const TrafficStats& o) {
    flops += o.flops;
    global_read_words += o.global_read_words;
    global_write_words += o.global_write_words;
    remote_words += o.remote_words;
    remote_word_hops += o.remote_word_hops;
    local_words += o.local_words;
    barriers += o.barriers;
    rounds += o.rounds;
    return *this;
  }

  friend bool operator==(const TrafficStats&, const TrafficStats&) = default;
};

}  // namespace meshnoc
