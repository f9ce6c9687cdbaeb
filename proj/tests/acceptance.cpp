// Acceptance suite: runs every gate criterion and prints one line each.
// Exit status is the number of failed criteria.

#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"

using namespace meshnoc;
using testsupport::oracle_matmul;
using testsupport::run_cannon;
using testsupport::seeded_inputs;
using testsupport::worst_rel_err;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& what) {
  if (!cond) throw Failure(what);
}

template <typename T, typename U>
void require_eq(const T& got, const U& want, const std::string& what) {
  if (!(got == static_cast<T>(want))) {
    std::ostringstream os;
    os << what << ": got " << got << ", want " << want;
    throw Failure(os.str());
  }
}

struct KernelRun {
  int n, p;
  std::string mode;
  TrafficStats stats;
  std::vector<TrafficStats> per_pe;
  std::uint64_t barrier_events;
};

constexpr std::pair<int, int> kCases[] = {{4, 1}, {4, 2}, {8, 2}, {16, 4},
                                          {32, 4}, {64, 4}, {128, 4}};
constexpr std::uint64_t kSeed = 42;

// ---------------------------------------------------------------------------

// Criterion 1: both kernels match the independent host oracle within 1e-4
// per-element relative error on every (n, p) case.
std::string criterion_correctness(std::vector<KernelRun>& runs) {
  HostRuntime rt;
  cannon::register_kernels(rt);
  double worst = 0.0;
  for (const auto& [n, p] : kCases) {
    const auto [a, b] = seeded_inputs(n, kSeed);
    const auto expected = oracle_matmul(a, b, n);
    for (const char* kernel : {cannon::kReferenceKernel, cannon::kHybridKernel}) {
      const auto run = run_cannon(rt, kernel, n, p, a, b);
      const double err = worst_rel_err(run.c, expected);
      worst = std::max(worst, err);
      std::ostringstream what;
      what << kernel << " n=" << n << " p=" << p << " rel err " << err;
      require(err <= 1e-4, what.str() + " exceeds 1e-4");
      runs.push_back({n, p,
                      kernel == cannon::kReferenceKernel ? kModeReference : kModeHybrid,
                      run.record.stats, run.record.per_pe, run.record.barrier_events});
    }
  }
  std::ostringstream os;
  os << "both kernels match the naive oracle on 7 (n,p) cases, worst rel err " << worst;
  return os.str();
}

// Criterion 2: exact traffic identities, asserted with no tolerance.
std::string criterion_traffic(const std::vector<KernelRun>& runs) {
  require(!runs.empty(), "no runs recorded");
  for (const auto& run : runs) {
    const std::uint64_t nn = static_cast<std::uint64_t>(run.n) * run.n;
    const std::string tag = run.mode + " n=" + std::to_string(run.n) +
                            " p=" + std::to_string(run.p);
    require_eq(run.stats.flops, 2 * nn * static_cast<std::uint64_t>(run.n), tag + " flops");
    require_eq(run.stats.global_write_words, nn, tag + " global writes");
    if (run.mode == kModeReference) {
      require_eq(run.stats.global_read_words, 2 * static_cast<std::uint64_t>(run.p) * nn,
                 tag + " global reads");
      require_eq(run.stats.remote_words, 0, tag + " remote words");
    } else {
      require_eq(run.stats.global_read_words, 2 * nn, tag + " global reads");
      require_eq(run.stats.remote_words, 2 * nn * static_cast<std::uint64_t>(run.p - 1),
                 tag + " remote put words");
      require_eq(run.barrier_events,
                 static_cast<std::uint64_t>(run.p - 1 + cannon::kHybridSetupBarriers),
                 tag + " barrier events");
    }
    TrafficStats sum;
    for (const auto& s : run.per_pe) sum += s;
    require(sum == run.stats, tag + ": aggregate is not the per-PE sum");
  }
  return "reference reads 2pn^2, hybrid reads 2n^2 and puts 2n^2(p-1), both flop 2n^3";
}

// Criterion 3: two-point calibration reproduces the measured table.
std::string criterion_calibration(const std::vector<KernelRun>& runs) {
  auto stats_of = [&runs](const std::string& mode, int n) -> const KernelRun& {
    for (const auto& run : runs) {
      if (run.mode == mode && run.n == n && run.p == 4) return run;
    }
    throw Failure("missing " + mode + " run for n=" + std::to_string(n));
  };

  const CostParams fitted =
      calibrate(CostParams{},
                CalibrationPoint{128, 4, stats_of(kModeReference, 128).stats, 794.0},
                CalibrationPoint{32, 4, stats_of(kModeReference, 32).stats, 218.0});

  // (a) fit points within 0.1%
  const double fit128 =
      mflops_for(128, estimate_time(stats_of(kModeReference, 128).stats, fitted, 4));
  const double fit32 =
      mflops_for(32, estimate_time(stats_of(kModeReference, 32).stats, fitted, 4));
  require(std::abs(fit128 / 794.0 - 1.0) <= 1e-3,
          "fit point 128 off target: " + std::to_string(fit128));
  require(std::abs(fit32 / 218.0 - 1.0) <= 1e-3,
          "fit point 32 off target: " + std::to_string(fit32));

  // (b) held-out 64x64 prediction within +-25% of 424 MFLOPS
  const double pred64 =
      mflops_for(64, estimate_time(stats_of(kModeReference, 64).stats, fitted, 4));
  require(std::abs(pred64 / 424.0 - 1.0) <= 0.25,
          "held-out 64x64 prediction off: " + std::to_string(pred64));

  // (c) modeled speedup in [1.8, 2.8] at every size
  std::vector<RunResult> pairs;
  for (int n : {32, 64, 128}) {
    pairs.push_back({kModeReference, n, 4, stats_of(kModeReference, n).stats});
    pairs.push_back({kModeHybrid, n, 4, stats_of(kModeHybrid, n).stats});
  }
  std::ostringstream speedups;
  for (const auto& row : report(pairs, fitted)) {
    if (row.mode != kModeHybrid) continue;
    require(row.speedup >= 1.8 && row.speedup <= 2.8,
            "speedup at n=" + std::to_string(row.n) + " out of [1.8, 2.8]: " +
                std::to_string(row.speedup));
    speedups << " " << row.n << ":" << std::fixed << std::setprecision(2) << row.speedup;
  }

  std::ostringstream os;
  os << "fits 794/218 (got " << std::fixed << std::setprecision(1) << fit128 << "/" << fit32
     << "), holds out 424 (got " << pred64 << "), speedups" << speedups.str();
  return os.str();
}

// Criterion 4: SHMEM semantics.
std::string criterion_shmem() {
  // (a) symmetric offsets, checked exhaustively for each launch
  {
    HostRuntime rt;
    const auto out = rt.create_buffer(3 * 16 * kWordBytes);
    rt.register_kernel({"offsets",
                        [](KernelContext& ctx) {
                          const std::uint32_t scratch = ctx.device_config().sym_heap_bytes;
                          const SymAddr x = ctx.shm_alloc(256);
                          const SymAddr y = ctx.shm_alloc(1024);
                          const SymAddr z = ctx.shm_alloc(64);
                          const SymAddr addrs[3] = {x, y, z};
                          for (int i = 0; i < 3; ++i) {
                            ctx.local_write_f32(scratch, static_cast<float>(addrs[i].offset));
                            ctx.global_write(ctx.arg_buffer(0),
                                             static_cast<std::uint64_t>(i * 16 + ctx.my_pe()) *
                                                 kWordBytes,
                                             scratch, 1);
                          }
                        },
                        {ArgKind::Buffer}});
    rt.enqueue_kernel("offsets", 16, {Arg::make_buffer(out)});
    const auto offs = rt.read_buffer(out, 0, 48);
    for (int i = 0; i < 3; ++i) {
      for (int pe = 0; pe < 16; ++pe) {
        require(offs[static_cast<std::size_t>(i * 16 + pe)] == offs[static_cast<std::size_t>(i * 16)],
                "allocation offsets differ across PEs");
      }
    }
  }

  // (b) put visibility deferred to the barrier
  {
    HostRuntime rt;
    const auto out = rt.create_buffer(2 * kWordBytes);
    rt.register_kernel({"visibility",
                        [](KernelContext& ctx) {
                          const SymAddr inbox = ctx.shm_alloc(kWordBytes);
                          const SymAddr val = ctx.shm_alloc(kWordBytes);
                          if (ctx.my_pe() == 0) {
                            ctx.local_write_f32(val.offset, 7.0f);
                            ctx.put(inbox, val.offset, 1, 1);
                          }
                          const std::uint32_t scratch = ctx.device_config().sym_heap_bytes;
                          if (ctx.my_pe() == 1) {
                            ctx.local_write_f32(scratch, ctx.local_f32(inbox.offset, 1)[0]);
                            ctx.global_write(ctx.arg_buffer(0), 0, scratch, 1);
                          }
                          ctx.barrier_all();
                          if (ctx.my_pe() == 1) {
                            ctx.local_write_f32(scratch, ctx.local_f32(inbox.offset, 1)[0]);
                            ctx.global_write(ctx.arg_buffer(0), kWordBytes, scratch, 1);
                          }
                        },
                        {ArgKind::Buffer}});
    rt.enqueue_kernel("visibility", 2, {Arg::make_buffer(out)});
    const auto vals = rt.read_buffer(out, 0, 2);
    require(vals[0] == 0.0f, "put visible before the barrier");
    require(vals[1] == 7.0f, "put not visible after the barrier");
  }

  // (c) same-epoch write race on a constructed conflict
  {
    HostRuntime rt;
    rt.register_kernel({"race",
                        [](KernelContext& ctx) {
                          const SymAddr slot = ctx.shm_alloc(kWordBytes);
                          if (ctx.my_pe() == 2 || ctx.my_pe() == 3) {
                            ctx.put(slot, slot.offset, 1, 5);
                          }
                          ctx.barrier_all();
                        },
                        {}});
    bool raced = false;
    try {
      rt.enqueue_kernel("race", 16, {});
    } catch (const WriteRaceError& e) {
      raced = e.target == 5 && e.src_a == 2 && e.src_b == 3;
    }
    require(raced, "write race was not detected (or misattributed)");
  }

  // (d) deadlock when one PE skips the barrier
  {
    HostRuntime rt;
    rt.register_kernel({"skips",
                        [](KernelContext& ctx) {
                          if (ctx.my_pe() != 0) ctx.barrier_all();
                        },
                        {}});
    bool detected = false;
    try {
      rt.enqueue_kernel("skips", 4, {});
    } catch (const DeadlockError& e) {
      detected = e.missing == std::vector<int>{0};
    }
    require(detected, "deadlock was not detected (or misattributed)");
  }

  // (e) per-kernel heap reset across 100 enqueues
  {
    HostRuntime rt;
    rt.register_kernel({"greedy",
                        [](KernelContext& ctx) {
                          const auto addr = ctx.shm_alloc(ctx.device_config().sym_heap_bytes);
                          if (addr.offset != 0) throw Failure("heap watermark leaked");
                        },
                        {}});
    for (int i = 0; i < 100; ++i) {
      rt.enqueue_kernel("greedy", 16, {});
    }
  }

  return "symmetric offsets, barrier visibility, race + deadlock detection, 100x full-heap "
         "enqueues";
}

// Criterion 5: bit-identical results across repeats and PE schedules.
std::string criterion_determinism() {
  const int n = 16, p = 4;
  const auto [a, b] = seeded_inputs(n, kSeed);

  struct Outcome {
    std::vector<float> c;
    TrafficStats stats;
    std::vector<TrafficStats> per_pe;
  };
  auto once = [&](Schedule sched) {
    HostRuntime rt;
    cannon::register_kernels(rt);
    rt.set_schedule(sched);
    const auto run = run_cannon(rt, cannon::kHybridKernel, n, p, a, b);
    return Outcome{run.c, run.record.stats, run.record.per_pe};
  };

  const Outcome base = once(Schedule::Ascending);
  const Outcome repeat = once(Schedule::Ascending);
  const Outcome desc = once(Schedule::Descending);
  const Outcome evenodd = once(Schedule::EvenOdd);
  for (const Outcome* other : {&repeat, &desc, &evenodd}) {
    require(testsupport::same_floats_bitwise(base.c, other->c),
            "buffer contents differ across runs/schedules");
    require(base.stats == other->stats, "aggregate stats differ across runs/schedules");
    require(base.per_pe == other->per_pe, "per-PE stats differ across runs/schedules");
  }
  return "bit-identical buffers and stats across a repeat and 3 PE schedules";
}

// Criterion 6: execution-model constraints.
std::string criterion_constraints() {
  {
    HostRuntime rt;
    cannon::register_kernels(rt);
    bool rejected = false;
    try {
      auto prob = cannon::make_problem(rt, 16, 4);
      rt.enqueue_kernel(cannon::kHybridKernel, rt.device().pe_count() + 1,
                        cannon::problem_args(prob));
    } catch (const LaunchRejection&) {
      rejected = true;
    }
    require(rejected, "oversized work-group was not rejected");
  }
  {
    // n=144, p=4: five 5184-B tiles need 25920 B of the 24576-B heap.
    HostRuntime rt;
    cannon::register_kernels(rt);
    auto prob = cannon::make_problem(rt, 144, 4);
    const std::size_t words = 144 * 144;
    rt.write_buffer(prob.c, 0, std::vector<float>(words, 1.25f));
    bool failed = false;
    try {
      rt.enqueue_kernel(cannon::kHybridKernel, 16, cannon::problem_args(prob));
    } catch (const AllocationError& e) {
      failed = e.requested == 5184;
    }
    require(failed, "oversized tile set did not raise an allocation error");
    for (float v : rt.read_buffer(prob.c, 0, words)) {
      require(v == 1.25f, "output buffer was touched before the allocation failure");
    }
  }
  return "work-group > cores rejected; oversized hybrid tiles fail before any compute";
}

}  // namespace

int main() {
  std::vector<KernelRun> runs;
  struct Criterion {
    const char* label;
    std::function<std::string()> body;
  };
  const Criterion criteria[] = {
      {"correctness", [&] { return criterion_correctness(runs); }},
      {"traffic identities", [&] { return criterion_traffic(runs); }},
      {"calibrated model", [&] { return criterion_calibration(runs); }},
      {"shmem semantics", [] { return criterion_shmem(); }},
      {"determinism", [] { return criterion_determinism(); }},
      {"execution-model constraints", [] { return criterion_constraints(); }},
  };

  int failures = 0;
  int id = 0;
  for (const auto& c : criteria) {
    ++id;
    try {
      const std::string detail = c.body();
      std::printf("criterion %d PASS  %s: %s\n", id, c.label, detail.c_str());
    } catch (const std::exception& e) {
      ++failures;
      std::printf("criterion %d FAIL  %s: %s\n", id, c.label, e.what());
    }
  }
  if (failures == 0) {
    std::printf("acceptance: all %d criteria passed\n", id);
  } else {
    std::printf("acceptance: %d of %d criteria FAILED\n", failures, id);
  }
  return failures;
}
