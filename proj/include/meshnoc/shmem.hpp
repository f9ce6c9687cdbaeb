#pragma once

#include <algorithm>
#include <condition_variable>
#include <cstring>
#include <exception>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "meshnoc/mesh.hpp"
#include "meshnoc/offload.hpp"
#include "meshnoc/trace.hpp"

namespace meshnoc {

// A symmetric-heap offset, valid at the same address on every PE.
struct SymAddr {
  std::uint32_t offset = 0;
};

// Order in which PEs are stepped between collectives. Results are
// schedule-independent by construction; varying the schedule is how the
// tests demonstrate that.
enum class Schedule { Ascending, Descending, EvenOdd };

inline std::vector<int> schedule_order(Schedule s, int n) {
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(n));
  switch (s) {
    case Schedule::Ascending:
      for (int i = 0; i < n; ++i) order.push_back(i);
      break;
    case Schedule::Descending:
      for (int i = n - 1; i >= 0; --i) order.push_back(i);
      break;
    case Schedule::EvenOdd:
      for (int i = 0; i < n; i += 2) order.push_back(i);
      for (int i = 1; i < n; i += 2) order.push_back(i);
      break;
  }
  return order;
}

class KernelContext;

// Runs one kernel launch over work_items PEs as a phase-parallel job.
//
// Each PE body runs on its own thread, but only one PE executes at a time:
// a turnstile hands turns out in schedule order, and a PE keeps its turn
// until it blocks on a collective (barrier_all, shm_alloc) or returns.
// Remote puts are staged per epoch and committed at the barrier in
// (source PE, issue order); get reads the heap snapshot taken at the last
// commit point. That makes every observable result independent of the
// schedule, and makes write races and missing-barrier deadlocks exact,
// detectable errors instead of nondeterminism.
class LaunchEngine {
 public:
  LaunchEngine(Device& dev, const KernelDescriptor& kernel, std::vector<Arg> args, int work_items,
               Schedule sched, TraceLog* trace)
      : dev_(dev),
        kernel_(kernel),
        args_(std::move(args)),
        np_(work_items),
        trace_(trace),
        order_(schedule_order(sched, work_items)),
        stats_(static_cast<std::size_t>(work_items)),
        pe_trace_(static_cast<std::size_t>(work_items)),
        st_(static_cast<std::size_t>(work_items), St::Idle),
        alloc_req_(static_cast<std::size_t>(work_items), 0),
        alloc_result_(static_cast<std::size_t>(work_items), 0) {}

  LaunchRecord run();

 private:
  friend class KernelContext;

  enum class St { Idle, Running, AtBarrier, AtAlloc, Finished };

  // Internal unwind marker used to pull blocked PEs out of a failed launch.
  struct Aborted {};

  struct StagedPut {
    int src;
    int dst;
    std::uint32_t offset;
    std::vector<std::byte> payload;
    std::uint64_t seq;
  };

  void pe_main(int pe);

  // --- ops invoked by the running PE through its KernelContext ---
  SymAddr op_shm_alloc(int pe, std::uint32_t nbytes);
  void op_put(int pe, SymAddr dest, std::uint32_t src_offset, std::uint32_t nwords, int target);
  void op_get(int pe, std::uint32_t dest_offset, SymAddr src, std::uint32_t nwords, int source);
  void op_barrier(int pe);
  void op_global_read(int pe, const BufferHandle& buf, std::uint64_t buf_offset,
                      std::uint32_t local_offset, std::uint32_t nwords);
  void op_global_write(int pe, const BufferHandle& buf, std::uint64_t buf_offset,
                       std::uint32_t local_offset, std::uint32_t nwords);

  void check_launch_pe(int pe, const char* role) const;
  void check_heap_range(int pe, std::uint32_t offset, std::uint64_t nbytes) const;
  void check_buffer_range(const BufferHandle& buf, std::uint64_t offset, std::uint64_t nbytes) const;

  // --- turnstile (all require m_) ---
  void wait_for_turn(std::unique_lock<std::mutex>& lk, int pe);
  void advance_locked();
  void resolve_phase_locked();
  void resume_all_locked();
  void commit_barrier_locked();
  void resolve_alloc_locked();
  void fail_locked(std::exception_ptr e);
  void snapshot_heaps();

  Device& dev_;
  const KernelDescriptor& kernel_;
  std::vector<Arg> args_;
  int np_;
  TraceLog* trace_;
  std::vector<int> order_;

  // Engine state is only ever mutated by the single running PE (or by the
  // last arriver while resolving a collective); the turnstile mutex makes
  // those mutations visible across turn handoffs.
  std::uint64_t epoch_ = 0;
  std::uint32_t heap_top_ = 0;
  std::uint64_t put_seq_ = 0;
  std::uint64_t barrier_events_ = 0;
  std::vector<StagedPut> staged_;
  std::vector<std::vector<std::byte>> committed_heap_;
  std::vector<TrafficStats> stats_;
  std::vector<std::vector<TraceRecord>> pe_trace_;

  std::mutex m_;
  std::condition_variable cv_;
  std::vector<St> st_;
  std::vector<std::uint32_t> alloc_req_;
  std::vector<std::uint32_t> alloc_result_;
  std::size_t cursor_ = 0;
  bool aborting_ = false;
  std::exception_ptr error_;
};

// One PE's view of a running kernel: its identity, the bound arguments,
// its local arena, the global store, and the PGAS operations.
class KernelContext {
 public:
  KernelContext(LaunchEngine& eng, int pe) : eng_(eng), pe_(pe) {}

  int my_pe() const { return pe_; }
  int n_pes() const { return eng_.np_; }
  const DeviceConfig& device_config() const { return eng_.dev_.config(); }

  std::size_t arg_count() const { return eng_.args_.size(); }
  BufferHandle arg_buffer(std::size_t i) const {
    const Arg& a = arg_at(i);
    if (a.kind != ArgKind::Buffer) {
      throw SignatureError("argument " + std::to_string(i) + " of kernel '" + eng_.kernel_.name +
                           "' is not a buffer");
    }
    return a.buffer;
  }
  std::uint32_t arg_word(std::size_t i) const {
    const Arg& a = arg_at(i);
    if (a.kind != ArgKind::Word) {
      throw SignatureError("argument " + std::to_string(i) + " of kernel '" + eng_.kernel_.name +
                           "' is not a scalar word");
    }
    return a.word;
  }
  float arg_word_f32(std::size_t i) const { return std::bit_cast<float>(arg_word(i)); }

  // Off-chip transfers between a global buffer and this PE's arena.
  void global_read(const BufferHandle& buf, std::uint64_t buf_offset, std::uint32_t local_offset,
                   std::uint32_t nwords) {
    eng_.op_global_read(pe_, buf, buf_offset, local_offset, nwords);
  }
  void global_write(const BufferHandle& buf, std::uint64_t buf_offset, std::uint32_t local_offset,
                    std::uint32_t nwords) {
    eng_.op_global_write(pe_, buf, buf_offset, local_offset, nwords);
  }

  // Counted accesses to this PE's own arena.
  void local_write(std::uint32_t offset, std::span<const std::byte> data) {
    meshnoc::local_write(eng_.dev_, pe_, offset, data, eng_.stats_[pe_idx()]);
  }
  void local_read(std::uint32_t offset, std::span<std::byte> out) {
    meshnoc::local_read(eng_.dev_, pe_, offset, out, eng_.stats_[pe_idx()]);
  }
  void local_write_f32(std::uint32_t offset, float value) {
    const auto bits = std::bit_cast<std::uint32_t>(value);
    std::byte b[kWordBytes];
    std::memcpy(b, &bits, kWordBytes);
    local_write(offset, b);
  }
  float local_read_f32(std::uint32_t offset) {
    std::byte b[kWordBytes];
    local_read(offset, b);
    float v;
    std::memcpy(&v, b, kWordBytes);
    return v;
  }

  // Uncounted word view into this PE's arena, for in-place compute.
  std::span<float> local_f32(std::uint32_t offset, std::uint32_t nwords) {
    auto bytes = eng_.dev_.local_range(pe_, offset, std::uint64_t{nwords} * kWordBytes);
    return {reinterpret_cast<float*>(bytes.data()), nwords};
  }

  SymAddr shm_alloc(std::uint32_t nbytes) { return eng_.op_shm_alloc(pe_, nbytes); }
  void put(SymAddr dest, std::uint32_t src_offset, std::uint32_t nwords, int target_pe) {
    eng_.op_put(pe_, dest, src_offset, nwords, target_pe);
  }
  void get(std::uint32_t dest_offset, SymAddr src, std::uint32_t nwords, int source_pe) {
    eng_.op_get(pe_, dest_offset, src, nwords, source_pe);
  }
  void barrier_all() { eng_.op_barrier(pe_); }

  void count_flops(std::uint64_t n) { eng_.stats_[pe_idx()].flops += n; }
  void note_round() { eng_.stats_[pe_idx()].rounds += 1; }

 private:
  std::size_t pe_idx() const { return static_cast<std::size_t>(pe_); }
  const Arg& arg_at(std::size_t i) const {
    if (i >= eng_.args_.size()) {
      throw SignatureError("kernel '" + eng_.kernel_.name + "' has no argument " +
                           std::to_string(i));
    }
    return eng_.args_[i];
  }

  LaunchEngine& eng_;
  int pe_;
};

// ---------------------------------------------------------------------------
// LaunchEngine implementation
// ---------------------------------------------------------------------------

inline LaunchRecord LaunchEngine::run() {
  committed_heap_.assign(static_cast<std::size_t>(np_),
                         std::vector<std::byte>(dev_.config().sym_heap_bytes));
  snapshot_heaps();

  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(np_));
  for (int pe = 0; pe < np_; ++pe) {
    threads.emplace_back(&LaunchEngine::pe_main, this, pe);
  }
  {
    std::unique_lock<std::mutex> lk(m_);
    advance_locked();
  }
  for (auto& t : threads) t.join();
  if (error_) std::rethrow_exception(error_);

  LaunchRecord rec;
  rec.kernel = kernel_.name;
  rec.work_items = np_;
  rec.args = args_;
  rec.per_pe = stats_;
  rec.barrier_events = barrier_events_;
  for (const auto& s : stats_) rec.stats += s;

  if (trace_) {
    const std::size_t first = trace_->records.size();
    for (const auto& per_pe : pe_trace_) {
      trace_->records.insert(trace_->records.end(), per_pe.begin(), per_pe.end());
    }
    // Group by epoch; stability keeps PE id then issue order within an epoch.
    std::stable_sort(trace_->records.begin() + static_cast<std::ptrdiff_t>(first),
                     trace_->records.end(),
                     [](const TraceRecord& a, const TraceRecord& b) { return a.epoch < b.epoch; });
  }
  return rec;
}

inline void LaunchEngine::pe_main(int pe) {
  try {
    {
      std::unique_lock<std::mutex> lk(m_);
      wait_for_turn(lk, pe);
    }
    KernelContext ctx(*this, pe);
    kernel_.entry(ctx);
    std::unique_lock<std::mutex> lk(m_);
    st_[static_cast<std::size_t>(pe)] = St::Finished;
    advance_locked();
  } catch (const Aborted&) {
    std::unique_lock<std::mutex> lk(m_);
    st_[static_cast<std::size_t>(pe)] = St::Finished;
    cv_.notify_all();
  } catch (...) {
    std::unique_lock<std::mutex> lk(m_);
    fail_locked(std::current_exception());
    st_[static_cast<std::size_t>(pe)] = St::Finished;
  }
}

inline void LaunchEngine::wait_for_turn(std::unique_lock<std::mutex>& lk, int pe) {
  cv_.wait(lk, [&] { return st_[static_cast<std::size_t>(pe)] == St::Running || aborting_; });
  if (aborting_) throw Aborted{};
}

inline void LaunchEngine::advance_locked() {
  while (cursor_ < order_.size() && st_[static_cast<std::size_t>(order_[cursor_])] != St::Idle) {
    ++cursor_;
  }
  if (cursor_ < order_.size()) {
    st_[static_cast<std::size_t>(order_[cursor_])] = St::Running;
    cv_.notify_all();
    return;
  }
  resolve_phase_locked();
}

inline void LaunchEngine::resolve_phase_locked() {
  std::vector<int> finished;
  int at_barrier = 0;
  int at_alloc = 0;
  for (int pe = 0; pe < np_; ++pe) {
    switch (st_[static_cast<std::size_t>(pe)]) {
      case St::Finished: finished.push_back(pe); break;
      case St::AtBarrier: ++at_barrier; break;
      case St::AtAlloc: ++at_alloc; break;
      default: break;
    }
  }
  if (static_cast<int>(finished.size()) == np_) {
    return;  // launch complete
  }
  if (!finished.empty()) {
    std::string names;
    for (int pe : finished) names += (names.empty() ? "" : ", ") + std::to_string(pe);
    fail_locked(std::make_exception_ptr(DeadlockError(
        finished, "deadlock: PE(s) " + names +
                      " returned without reaching the collective the other PEs wait at")));
    return;
  }
  if (at_barrier > 0 && at_alloc > 0) {
    fail_locked(std::make_exception_ptr(CollectiveMismatchError(
        "collective mismatch: some PEs wait at barrier_all while others wait at shm_alloc")));
    return;
  }
  if (at_alloc == np_) {
    resolve_alloc_locked();
    return;
  }
  commit_barrier_locked();
}

inline void LaunchEngine::resume_all_locked() {
  for (auto& s : st_) {
    if (s == St::AtBarrier || s == St::AtAlloc) s = St::Idle;
  }
  cursor_ = 0;
  advance_locked();
}

inline void LaunchEngine::commit_barrier_locked() {
  std::stable_sort(staged_.begin(), staged_.end(), [](const StagedPut& a, const StagedPut& b) {
    return a.src != b.src ? a.src < b.src : a.seq < b.seq;
  });
  for (const auto& sp : staged_) {
    auto dst = dev_.local_range(sp.dst, sp.offset, sp.payload.size());
    std::memcpy(dst.data(), sp.payload.data(), sp.payload.size());
  }
  staged_.clear();
  epoch_ += 1;
  barrier_events_ += 1;
  snapshot_heaps();
  resume_all_locked();
}

inline void LaunchEngine::resolve_alloc_locked() {
  const std::uint32_t size = alloc_req_[0];
  for (int pe = 1; pe < np_; ++pe) {
    if (alloc_req_[static_cast<std::size_t>(pe)] != size) {
      fail_locked(std::make_exception_ptr(CollectiveMismatchError(
          "collective mismatch: shm_alloc sizes differ (PE 0 requested " + std::to_string(size) +
          " B, PE " + std::to_string(pe) + " requested " +
          std::to_string(alloc_req_[static_cast<std::size_t>(pe)]) + " B)")));
      return;
    }
  }
  const std::uint32_t remaining = dev_.config().sym_heap_bytes - heap_top_;
  if (size > remaining) {
    fail_locked(std::make_exception_ptr(
        AllocationError(size, remaining,
                        "symmetric heap exhausted: requested " + std::to_string(size) +
                            " B, remaining " + std::to_string(remaining) + " B")));
    return;
  }
  const std::uint32_t base = heap_top_;
  heap_top_ += size;
  for (int pe = 0; pe < np_; ++pe) {
    if (size > 0) {
      auto live = dev_.local_range(pe, base, size);
      std::memset(live.data(), 0, size);
      std::memset(committed_heap_[static_cast<std::size_t>(pe)].data() + base, 0, size);
    }
    alloc_result_[static_cast<std::size_t>(pe)] = base;
  }
  resume_all_locked();
}

inline void LaunchEngine::fail_locked(std::exception_ptr e) {
  if (!aborting_) {
    error_ = e;
    aborting_ = true;
  }
  cv_.notify_all();
}

inline void LaunchEngine::snapshot_heaps() {
  const std::uint32_t heap_bytes = dev_.config().sym_heap_bytes;
  for (int pe = 0; pe < np_; ++pe) {
    std::memcpy(committed_heap_[static_cast<std::size_t>(pe)].data(), dev_.local_bytes(pe).data(),
                heap_bytes);
  }
}

// ---------------------------------------------------------------------------
// PE-side operations
// ---------------------------------------------------------------------------

inline void LaunchEngine::check_launch_pe(int pe, const char* role) const {
  if (pe < 0 || pe >= np_) {
    throw ArenaFault(pe, 0, 0,
                     std::string(role) + " PE " + std::to_string(pe) + " outside launch of " +
                         std::to_string(np_) + " PEs");
  }
}

inline void LaunchEngine::check_heap_range(int pe, std::uint32_t offset,
                                           std::uint64_t nbytes) const {
  if (offset % kWordBytes != 0) {
    throw AlignmentError("symmetric address " + std::to_string(offset) + " is not word-aligned");
  }
  const std::uint32_t heap = dev_.config().sym_heap_bytes;
  if (offset > heap || nbytes > heap - offset) {
    throw ArenaFault(pe, offset, nbytes,
                     "PE " + std::to_string(pe) + ": symmetric range [" + std::to_string(offset) +
                         ", " + std::to_string(offset + nbytes) + ") outside heap of " +
                         std::to_string(heap) + " B");
  }
}

inline void LaunchEngine::check_buffer_range(const BufferHandle& buf, std::uint64_t offset,
                                             std::uint64_t nbytes) const {
  if (offset % kWordBytes != 0) {
    throw AlignmentError("buffer offset " + std::to_string(offset) + " is not word-aligned");
  }
  if (offset > buf.size || nbytes > buf.size - offset) {
    throw ArenaFault(-1, offset, nbytes,
                     "buffer " + std::to_string(buf.id) + ": range [" + std::to_string(offset) +
                         ", " + std::to_string(offset + nbytes) + ") outside buffer of " +
                         std::to_string(buf.size) + " B");
  }
}

inline SymAddr LaunchEngine::op_shm_alloc(int pe, std::uint32_t nbytes) {
  if (nbytes % kWordBytes != 0) {
    throw AlignmentError("shm_alloc size " + std::to_string(nbytes) +
                         " is not a multiple of the word size");
  }
  std::unique_lock<std::mutex> lk(m_);
  alloc_req_[static_cast<std::size_t>(pe)] = nbytes;
  st_[static_cast<std::size_t>(pe)] = St::AtAlloc;
  advance_locked();
  wait_for_turn(lk, pe);
  return SymAddr{alloc_result_[static_cast<std::size_t>(pe)]};
}

inline void LaunchEngine::op_put(int pe, SymAddr dest, std::uint32_t src_offset,
                                 std::uint32_t nwords, int target) {
  check_launch_pe(target, "put target");
  const std::uint64_t nbytes = std::uint64_t{nwords} * kWordBytes;
  check_heap_range(target, dest.offset, nbytes);
  auto src = dev_.local_range(pe, src_offset, nbytes);

  TrafficStats& s = stats_[static_cast<std::size_t>(pe)];
  s.remote_words += nwords;
  s.remote_word_hops += std::uint64_t{nwords} *
                        static_cast<std::uint64_t>(hop_distance(pe, target, dev_.config()));
  pe_trace_[static_cast<std::size_t>(pe)].push_back(
      TraceRecord{epoch_, TraceOp::Put, pe, target, dest.offset, nwords});
  if (nwords == 0) return;

  const std::uint32_t lo = dest.offset;
  const std::uint32_t hi = dest.offset + static_cast<std::uint32_t>(nbytes);
  for (const auto& other : staged_) {
    if (other.dst != target || other.src == pe) continue;
    const std::uint32_t olo = other.offset;
    const std::uint32_t ohi = other.offset + static_cast<std::uint32_t>(other.payload.size());
    if (lo < ohi && olo < hi) {
      const int a = std::min(other.src, pe);
      const int b = std::max(other.src, pe);
      throw WriteRaceError(target, a, b, std::max(lo, olo),
                           "write race on PE " + std::to_string(target) + " at offset " +
                               std::to_string(std::max(lo, olo)) + ": PEs " + std::to_string(a) +
                               " and " + std::to_string(b) +
                               " staged overlapping puts in the same epoch");
    }
  }
  staged_.push_back(StagedPut{pe, target, dest.offset,
                              std::vector<std::byte>(src.begin(), src.end()), put_seq_++});
}

inline void LaunchEngine::op_get(int pe, std::uint32_t dest_offset, SymAddr src,
                                 std::uint32_t nwords, int source) {
  check_launch_pe(source, "get source");
  const std::uint64_t nbytes = std::uint64_t{nwords} * kWordBytes;
  check_heap_range(source, src.offset, nbytes);
  auto dst = dev_.local_range(pe, dest_offset, nbytes);
  if (nwords > 0) {
    std::memcpy(dst.data(), committed_heap_[static_cast<std::size_t>(source)].data() + src.offset,
                nbytes);
  }
  TrafficStats& s = stats_[static_cast<std::size_t>(pe)];
  s.remote_words += nwords;
  s.remote_word_hops += std::uint64_t{nwords} *
                        static_cast<std::uint64_t>(hop_distance(pe, source, dev_.config()));
  pe_trace_[static_cast<std::size_t>(pe)].push_back(
      TraceRecord{epoch_, TraceOp::Get, source, pe, src.offset, nwords});
}

inline void LaunchEngine::op_barrier(int pe) {
  stats_[static_cast<std::size_t>(pe)].barriers += 1;
  pe_trace_[static_cast<std::size_t>(pe)].push_back(
      TraceRecord{epoch_, TraceOp::Barrier, pe, pe, 0, 0});
  std::unique_lock<std::mutex> lk(m_);
  st_[static_cast<std::size_t>(pe)] = St::AtBarrier;
  advance_locked();
  wait_for_turn(lk, pe);
}

inline void LaunchEngine::op_global_read(int pe, const BufferHandle& buf, std::uint64_t buf_offset,
                                         std::uint32_t local_offset, std::uint32_t nwords) {
  const std::uint64_t nbytes = std::uint64_t{nwords} * kWordBytes;
  check_buffer_range(buf, buf_offset, nbytes);
  auto src = dev_.global_range(buf.base + buf_offset, nbytes);
  auto dst = dev_.local_range(pe, local_offset, nbytes);
  if (nwords > 0) std::memcpy(dst.data(), src.data(), nbytes);
  stats_[static_cast<std::size_t>(pe)].global_read_words += nwords;
}

inline void LaunchEngine::op_global_write(int pe, const BufferHandle& buf, std::uint64_t buf_offset,
                                          std::uint32_t local_offset, std::uint32_t nwords) {
  const std::uint64_t nbytes = std::uint64_t{nwords} * kWordBytes;
  check_buffer_range(buf, buf_offset, nbytes);
  auto dst = dev_.global_range(buf.base + buf_offset, nbytes);
  auto src = dev_.local_range(pe, local_offset, nbytes);
  if (nwords > 0) std::memcpy(dst.data(), src.data(), nbytes);
  stats_[static_cast<std::size_t>(pe)].global_write_words += nwords;
}

}  // namespace meshnoc
