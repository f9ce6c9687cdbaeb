#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "meshnoc/errors.hpp"
#include "meshnoc/stats.hpp"

namespace meshnoc {

// Linear cost model mapping traffic counters to estimated wall time.
//
// clock_hz and the peak flop rate come from the modeled part (600 MHz,
// 19.2 GFLOPS over 16 cores -> 2 flops/cycle/core). The per-word costs
// are free parameters: the defaults put the shared off-chip link at
// ~120 MB/s and the NoC at 1 cycle/word/hop, and calibrate() replaces
// the off-chip cost and the achieved flop rate with values fitted to
// measured MFLOPS points.
struct CostParams {
  double clock_hz = 600e6;
  double flops_per_cycle_per_core = 2.0;
  double global_word_cost_cycles = 20.0;
  double hop_word_cost_cycles = 1.0;
  double round_overhead_cycles = 100.0;  // per PE barrier participation

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw ValidationError(std::string("cost parameter ") + name + " must be positive, got " +
                              std::to_string(v));
      }
    };
    auto non_negative = [](double v, const char* name) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw ValidationError(std::string("cost parameter ") + name +
                              " must be non-negative, got " + std::to_string(v));
      }
    };
    positive(clock_hz, "clock_hz");
    positive(flops_per_cycle_per_core, "flops_per_cycle_per_core");
    positive(global_word_cost_cycles, "global_word_cost_cycles");
    // The NoC and barrier costs are free parameters and may be switched off.
    non_negative(hop_word_cost_cycles, "hop_word_cost_cycles");
    non_negative(round_overhead_cycles, "round_overhead_cycles");
  }
};

// Modeled execution cycles for a completed launch on a grid_dim x grid_dim
// work-group. Compute and NoC traffic parallelize over the cores; off-chip
// traffic is serialized because the off-chip link is shared.
inline double estimate_cycles(const TrafficStats& stats, const CostParams& params, int grid_dim) {
  params.validate();
  if (grid_dim < 1) {
    throw ValidationError("grid dimension must be at least 1, got " + std::to_string(grid_dim));
  }
  const double cores = static_cast<double>(grid_dim) * grid_dim;
  return static_cast<double>(stats.flops) / (cores * params.flops_per_cycle_per_core) +
         static_cast<double>(stats.global_words()) * params.global_word_cost_cycles +
         static_cast<double>(stats.remote_word_hops) / cores * params.hop_word_cost_cycles +
         static_cast<double>(stats.barriers) * params.round_overhead_cycles;
}

inline double estimate_time(const TrafficStats& stats, const CostParams& params, int grid_dim) {
  return estimate_cycles(stats, params, grid_dim) / params.clock_hz;
}

inline double mflops_for(int n, double est_time_s) {
  const double flops = 2.0 * static_cast<double>(n) * n * n;
  return flops / est_time_s / 1e6;
}

// One measured MFLOPS target together with the simulated stats of the run
// that produced it.
struct CalibrationPoint {
  int n = 0;
  int grid_dim = 0;
  TrafficStats stats;
  double target_mflops = 0.0;
};

// Fits the model exactly through two measured points by solving the 2x2
// linear system for the off-chip word cost and the achieved flop rate
// (the model is linear in global_word_cost_cycles and in cycles-per-flop).
// The hop and barrier terms are held at their configured values and
// subtracted from the targets. Singular systems and non-positive
// solutions are rejected.
inline CostParams calibrate(CostParams params, const CalibrationPoint& first,
                            const CalibrationPoint& second) {
  params.validate();
  auto row = [&params](const CalibrationPoint& pt, double& flop_coeff, double& word_coeff,
                       double& rhs) {
    if (pt.grid_dim < 1 || pt.n < 1 || !(pt.target_mflops > 0.0)) {
      throw CalibrationError("calibration point needs positive n, grid and target MFLOPS");
    }
    const double cores = static_cast<double>(pt.grid_dim) * pt.grid_dim;
    const double target_seconds =
        2.0 * static_cast<double>(pt.n) * pt.n * pt.n / (pt.target_mflops * 1e6);
    const double fixed = static_cast<double>(pt.stats.remote_word_hops) / cores *
                             params.hop_word_cost_cycles +
                         static_cast<double>(pt.stats.barriers) * params.round_overhead_cycles;
    flop_coeff = static_cast<double>(pt.stats.flops) / cores;
    word_coeff = static_cast<double>(pt.stats.global_words());
    rhs = target_seconds * params.clock_hz - fixed;
  };

  double f1, w1, c1, f2, w2, c2;
  row(first, f1, w1, c1);
  row(second, f2, w2, c2);

  const double det = f1 * w2 - f2 * w1;
  const double scale = std::abs(f1 * w2) + std::abs(f2 * w1);
  if (scale == 0.0 || std::abs(det) < 1e-12 * scale) {
    std::ostringstream os;
    os << "calibration system is singular: [" << f1 << " " << w1 << "; " << f2 << " " << w2
       << "] x [cycles_per_flop word_cost] = [" << c1 << " " << c2 << "]";
    throw CalibrationError(os.str());
  }
  const double cycles_per_flop = (c1 * w2 - c2 * w1) / det;
  const double word_cost = (f1 * c2 - f2 * c1) / det;
  if (!(cycles_per_flop > 0.0) || !(word_cost > 0.0)) {
    std::ostringstream os;
    os << "calibration produced non-positive parameters: cycles_per_flop=" << cycles_per_flop
       << ", global_word_cost_cycles=" << word_cost
       << " (targets " << first.target_mflops << " and " << second.target_mflops << " MFLOPS)";
    throw CalibrationError(os.str());
  }
  params.flops_per_cycle_per_core = 1.0 / cycles_per_flop;
  params.global_word_cost_cycles = word_cost;
  return params;
}

inline constexpr const char* kModeReference = "reference";
inline constexpr const char* kModeHybrid = "hybrid";

// One completed benchmark launch.
struct RunResult {
  std::string mode;
  int n = 0;
  int p = 0;
  TrafficStats stats;
};

struct BenchmarkReport {
  std::string mode;
  int n = 0;
  int p = 0;
  TrafficStats stats;
  double est_time_s = 0.0;
  double mflops = 0.0;
  double speedup = 1.0;  // vs the paired reference run; 1.0 when unpaired
};

// Turns raw runs into report rows. Runs pair by (n, p); a hybrid row's
// speedup is its MFLOPS over the paired reference's, and rows without a
// counterpart (including every reference row) report 1.0.
inline std::vector<BenchmarkReport> report(std::span<const RunResult> runs,
                                           const CostParams& params) {
  std::map<std::pair<int, int>, std::pair<const RunResult*, const RunResult*>> groups;
  for (const auto& run : runs) {
    if (run.mode != kModeReference && run.mode != kModeHybrid) {
      throw PairingError("unknown run mode '" + run.mode + "'");
    }
    auto& slot = groups[{run.n, run.p}];
    const RunResult*& entry = (run.mode == kModeReference) ? slot.first : slot.second;
    if (entry != nullptr) {
      throw PairingError("duplicate " + run.mode + " run for n=" + std::to_string(run.n) +
                         ", p=" + std::to_string(run.p));
    }
    entry = &run;
  }

  std::vector<BenchmarkReport> rows;
  for (const auto& [key, pair] : groups) {
    const auto make_row = [&](const RunResult& run) {
      BenchmarkReport row;
      row.mode = run.mode;
      row.n = run.n;
      row.p = run.p;
      row.stats = run.stats;
      row.est_time_s = estimate_time(run.stats, params, run.p);
      row.mflops = mflops_for(run.n, row.est_time_s);
      return row;
    };
    if (pair.first != nullptr) {
      rows.push_back(make_row(*pair.first));
    }
    if (pair.second != nullptr) {
      BenchmarkReport hybrid = make_row(*pair.second);
      if (pair.first != nullptr) {
        hybrid.speedup = hybrid.mflops / rows.back().mflops;
      }
      rows.push_back(std::move(hybrid));
    }
  }
  return rows;
}

}  // namespace meshnoc
