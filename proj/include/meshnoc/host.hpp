#pragma once

#include <cstring>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "meshnoc/shmem.hpp"

namespace meshnoc {

// Host-side offload runtime: owns the device, manages global-memory
// buffers with a monotonic bump allocator, keeps the kernel registry,
// and enqueues kernels over a work-group of PEs.
class HostRuntime {
 public:
  explicit HostRuntime(DeviceConfig cfg = {}) : dev_(cfg) {}

  Device& device() { return dev_; }
  const Device& device() const { return dev_; }

  // Allocates a zeroed, non-overlapping region of global memory.
  BufferHandle create_buffer(std::uint64_t size_bytes) {
    if (size_bytes == 0 || size_bytes % kWordBytes != 0) {
      throw AlignmentError("buffer size " + std::to_string(size_bytes) +
                           " must be a positive multiple of the word size");
    }
    const std::uint64_t available = dev_.config().global_mem_bytes - next_base_;
    if (size_bytes > available) {
      throw AllocationError(size_bytes, available,
                            "global memory exhausted: requested " + std::to_string(size_bytes) +
                                " B, available " + std::to_string(available) + " B");
    }
    BufferHandle h{next_id_++, next_base_, size_bytes};
    next_base_ += size_bytes;
    std::memset(dev_.global_range(h.base, h.size).data(), 0, h.size);
    return h;
  }

  // Host staging transfers. These happen outside the modeled kernel time
  // and do not touch the device traffic counters.
  void write_buffer(const BufferHandle& buf, std::uint64_t offset, std::span<const float> data) {
    auto dst = buffer_range(buf, offset, data.size() * kWordBytes);
    std::memcpy(dst.data(), data.data(), data.size() * kWordBytes);
  }

  std::vector<float> read_buffer(const BufferHandle& buf, std::uint64_t offset,
                                 std::size_t nwords) const {
    auto src = buffer_range(buf, offset, nwords * kWordBytes);
    std::vector<float> out(nwords);
    std::memcpy(out.data(), src.data(), nwords * kWordBytes);
    return out;
  }

  void register_kernel(KernelDescriptor desc) {
    if (kernels_.count(desc.name) != 0) {
      throw ValidationError("kernel '" + desc.name + "' is already registered");
    }
    kernels_.emplace(desc.name, std::move(desc));
  }

  bool has_kernel(const std::string& name) const { return kernels_.count(name) != 0; }

  // Runs a registered kernel once per PE id in [0, work_items) as one
  // synchronized phase-parallel job. The per-launch SHMEM context (heap,
  // epochs, staged puts) is created here and torn down on return, so no
  // SHMEM state survives between enqueues.
  LaunchRecord enqueue_kernel(const std::string& name, int work_items, std::vector<Arg> args) {
    auto it = kernels_.find(name);
    if (it == kernels_.end()) {
      throw UnknownKernelError("no kernel named '" + name + "' is registered");
    }
    if (work_items < 1 || work_items > dev_.pe_count()) {
      throw LaunchRejection("work_items " + std::to_string(work_items) +
                            " rejected: the work-group size is constrained to the number of "
                            "physical cores (1.." +
                            std::to_string(dev_.pe_count()) + ")");
    }
    const auto& arity = it->second.arity;
    if (args.size() != arity.size()) {
      throw SignatureError("kernel '" + name + "' expects " + std::to_string(arity.size()) +
                           " arguments, got " + std::to_string(args.size()));
    }
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i].kind != arity[i]) {
        throw SignatureError("kernel '" + name + "': argument " + std::to_string(i) +
                             " has the wrong kind");
      }
    }
    LaunchEngine engine(dev_, it->second, std::move(args), work_items, sched_, trace_);
    return engine.run();
  }

  void set_schedule(Schedule s) { sched_ = s; }
  Schedule schedule() const { return sched_; }

  // Optional call-trace sink; records accumulate across launches.
  void set_trace(TraceLog* sink) { trace_ = sink; }

  // Whole-device reset: drops all buffers and zeroes every arena.
  void reset_device() {
    next_base_ = 0;
    next_id_ = 1;
    dev_.reset();
  }

  std::uint64_t global_bytes_in_use() const { return next_base_; }

 private:
  std::span<std::byte> buffer_range(const BufferHandle& buf, std::uint64_t offset,
                                    std::uint64_t nbytes) {
    if (offset % kWordBytes != 0) {
      throw AlignmentError("buffer offset " + std::to_string(offset) + " is not word-aligned");
    }
    if (offset > buf.size || nbytes > buf.size - offset) {
      throw ArenaFault(-1, offset, nbytes,
                       "buffer " + std::to_string(buf.id) + ": range [" + std::to_string(offset) +
                           ", " + std::to_string(offset + nbytes) + ") outside buffer of " +
                           std::to_string(buf.size) + " B");
    }
    return dev_.global_range(buf.base + offset, nbytes);
  }
  std::span<const std::byte> buffer_range(const BufferHandle& buf, std::uint64_t offset,
                                          std::uint64_t nbytes) const {
    return const_cast<HostRuntime*>(this)->buffer_range(buf, offset, nbytes);
  }

  Device dev_;
  std::uint64_t next_base_ = 0;
  std::uint64_t next_id_ = 1;
  std::map<std::string, KernelDescriptor> kernels_;
  Schedule sched_ = Schedule::Ascending;
  TraceLog* trace_ = nullptr;
};

}  // namespace meshnoc
