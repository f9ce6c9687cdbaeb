#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace meshnoc {

// Base of every error thrown by the simulator and runtime layers.
struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Access outside a memory arena. pe is -1 for the global store.
struct ArenaFault : SimError {
  int pe;
  std::uint64_t offset;
  std::uint64_t span;
  ArenaFault(int pe_, std::uint64_t offset_, std::uint64_t span_, const std::string& what_)
      : SimError(what_), pe(pe_), offset(offset_), span(span_) {}
};

// Offset or size that is not a whole number of words.
struct AlignmentError : SimError {
  using SimError::SimError;
};

// Arena, buffer or symmetric-heap exhaustion.
struct AllocationError : SimError {
  std::uint64_t requested;
  std::uint64_t available;
  AllocationError(std::uint64_t requested_, std::uint64_t available_, const std::string& what_)
      : SimError(what_), requested(requested_), available(available_) {}
};

// Launch asked for more work-items than the device has cores.
struct LaunchRejection : SimError {
  using SimError::SimError;
};

struct UnknownKernelError : SimError {
  using SimError::SimError;
};

// Argument list does not match the registered kernel arity.
struct SignatureError : SimError {
  using SimError::SimError;
};

// PEs disagreed on a collective call (op kind or allocation size).
struct CollectiveMismatchError : SimError {
  using SimError::SimError;
};

// Two sources staged overlapping remote writes in the same epoch.
struct WriteRaceError : SimError {
  int target;
  int src_a;
  int src_b;
  std::uint32_t offset;
  WriteRaceError(int target_, int src_a_, int src_b_, std::uint32_t offset_,
                 const std::string& what_)
      : SimError(what_), target(target_), src_a(src_a_), src_b(src_b_), offset(offset_) {}
};

// Some PE returned while the rest wait at a collective it will never reach.
struct DeadlockError : SimError {
  std::vector<int> missing;
  DeadlockError(std::vector<int> missing_, const std::string& what_)
      : SimError(what_), missing(std::move(missing_)) {}
};

// Invalid configuration or cost parameters.
struct ValidationError : SimError {
  using SimError::SimError;
};

// Cost-model calibration could not produce usable parameters.
struct CalibrationError : SimError {
  using SimError::SimError;
};

// Benchmark runs could not be paired for a speedup report.
struct PairingError : SimError {
  using SimError::SimError;
};

}  // namespace meshnoc
