#pragma once

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "meshnoc/cannon.hpp"
#include "meshnoc/host.hpp"
#include "meshnoc/perf.hpp"
#include "meshnoc/trace.hpp"

namespace meshnoc {

inline constexpr const char* kParamsEnvVar = "MESHNOC_PARAMS";
inline constexpr double kVerifyRelTol = 1e-4;

// Measured reference-mode MFLOPS of the modeled 16-core part, used as
// calibration targets; the 64x64 point is held out as a prediction check.
inline constexpr int kCalibrateBigN = 128;
inline constexpr double kCalibrateBigMflops = 794.0;
inline constexpr int kCalibrateSmallN = 32;
inline constexpr double kCalibrateSmallMflops = 218.0;
inline constexpr int kCalibrateGrid = 4;

struct RunConfig {
  std::vector<int> sizes{32, 64, 128};
  int grid = 4;
  enum class Mode { Reference, Hybrid, Both };
  Mode mode = Mode::Both;
  std::uint64_t seed = 42;
  bool calibrate = false;
  std::string params_file;
  std::string trace_file;
  enum class Output { Table, Csv };
  Output output = Output::Table;
  CostParams params;
  DeviceConfig device{};
};

// ---------------------------------------------------------------------------
// Flat key=value parameter file
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<int> parse_sizes(const std::string& text) {
  std::vector<int> sizes;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::size_t pos = 0;
    const int n = std::stoi(item, &pos);
    if (pos != item.size() || n < 1) throw ValidationError("bad matrix size '" + item + "'");
    sizes.push_back(n);
  }
  if (sizes.empty()) throw ValidationError("size list is empty");
  return sizes;
}

inline double parse_double(const std::string& key, const std::string& text) {
  std::size_t pos = 0;
  const double v = std::stod(text, &pos);
  if (pos != text.size()) throw ValidationError("bad value for " + key + ": '" + text + "'");
  return v;
}

inline bool apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "clock_hz") {
    cfg.params.clock_hz = parse_double(key, value);
  } else if (key == "flops_per_cycle_per_core") {
    cfg.params.flops_per_cycle_per_core = parse_double(key, value);
  } else if (key == "global_word_cost_cycles") {
    cfg.params.global_word_cost_cycles = parse_double(key, value);
  } else if (key == "hop_word_cost_cycles") {
    cfg.params.hop_word_cost_cycles = parse_double(key, value);
  } else if (key == "round_overhead_cycles") {
    cfg.params.round_overhead_cycles = parse_double(key, value);
  } else if (key == "sizes") {
    cfg.sizes = parse_sizes(value);
  } else if (key == "grid") {
    cfg.grid = static_cast<int>(parse_double(key, value));
  } else if (key == "seed") {
    cfg.seed = std::stoull(value);
  } else if (key == "mode") {
    if (value == "reference") cfg.mode = RunConfig::Mode::Reference;
    else if (value == "hybrid") cfg.mode = RunConfig::Mode::Hybrid;
    else if (value == "both") cfg.mode = RunConfig::Mode::Both;
    else throw ValidationError("bad mode '" + value + "'");
  } else if (key == "output") {
    if (value == "table") cfg.output = RunConfig::Output::Table;
    else if (value == "csv") cfg.output = RunConfig::Output::Csv;
    else throw ValidationError("bad output format '" + value + "'");
  } else {
    return false;
  }
  return true;
}

}  // namespace detail

inline void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open parameter file '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (!detail::apply_config_key(cfg, key, value)) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
}

// Rewrites the five cost-model keys in place, preserving every other line.
inline void update_params_file(const std::string& path, const CostParams& params) {
  std::vector<std::string> lines;
  {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
  }
  const std::vector<std::pair<std::string, double>> keys{
      {"clock_hz", params.clock_hz},
      {"flops_per_cycle_per_core", params.flops_per_cycle_per_core},
      {"global_word_cost_cycles", params.global_word_cost_cycles},
      {"hop_word_cost_cycles", params.hop_word_cost_cycles},
      {"round_overhead_cycles", params.round_overhead_cycles}};
  auto format = [](const std::pair<std::string, double>& kv) {
    std::ostringstream os;
    os << kv.first << '=' << std::setprecision(17) << kv.second;
    return os.str();
  };
  std::vector<bool> written(keys.size(), false);
  for (auto& line : lines) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = detail::trim(line.substr(0, eq));
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (key == keys[i].first) {
        line = format(keys[i]);
        written[i] = true;
      }
    }
  }
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (!written[i]) lines.push_back(format(keys[i]));
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot write parameter file '" + path + "'");
  for (const auto& line : lines) out << line << '\n';
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

inline void print_usage(std::ostream& os) {
  os << "usage: meshnoc [options]\n"
        "  --sizes n1,n2,...   matrix sizes to run (default 32,64,128)\n"
        "  --grid p            PE grid dimension; launches p*p work-items (default 4)\n"
        "  --mode m            reference | hybrid | both (default both)\n"
        "  --seed s            seed for the input matrices (default 42)\n"
        "  --calibrate         fit the cost model to the built-in measured targets\n"
        "  --params file       key=value parameter file (fallback: $MESHNOC_PARAMS)\n"
        "  --trace file        write the put/get/barrier call trace as CSV\n"
        "  --output fmt        table | csv (default table)\n"
        "  --help              show this message\n"
        "exit status: 0 success, 1 verification or launch failure, 2 usage error\n";
}

struct ParseResult {
  enum class Status { Ok, Help, Error };
  Status status = Status::Error;
  RunConfig config;
};

inline ParseResult parse_args(int argc, const char* const* argv, std::ostream& err) {
  ParseResult result;
  RunConfig& cfg = result.config;
  try {
    // The parameter file loads first so that flags override its values.
    std::string params_path;
    for (int i = 1; i < argc; ++i) {
      if (std::string(argv[i]) == "--params") {
        if (i + 1 >= argc) throw ValidationError("--params needs a file argument");
        params_path = argv[i + 1];
      }
    }
    if (params_path.empty()) {
      if (const char* env = std::getenv(kParamsEnvVar)) params_path = env;
    }
    if (!params_path.empty()) {
      cfg.params_file = params_path;
      load_config_file(cfg, params_path);
    }

    auto need_value = [&](int& i, const std::string& flag) -> std::string {
      if (i + 1 >= argc) throw ValidationError(flag + " needs an argument");
      return argv[++i];
    };
    for (int i = 1; i < argc; ++i) {
      const std::string flag = argv[i];
      if (flag == "--help" || flag == "-h") {
        result.status = ParseResult::Status::Help;
        return result;
      } else if (flag == "--sizes") {
        cfg.sizes = detail::parse_sizes(need_value(i, flag));
      } else if (flag == "--grid") {
        cfg.grid = std::stoi(need_value(i, flag));
      } else if (flag == "--mode") {
        detail::apply_config_key(cfg, "mode", need_value(i, flag));
      } else if (flag == "--seed") {
        cfg.seed = std::stoull(need_value(i, flag));
      } else if (flag == "--calibrate") {
        cfg.calibrate = true;
      } else if (flag == "--params") {
        ++i;  // consumed in the first pass
      } else if (flag == "--trace") {
        cfg.trace_file = need_value(i, flag);
      } else if (flag == "--output") {
        detail::apply_config_key(cfg, "output", need_value(i, flag));
      } else {
        throw ValidationError("unknown option '" + flag + "'");
      }
    }

    if (cfg.grid < 1) throw ValidationError("grid dimension must be at least 1");
    if (cfg.grid * cfg.grid > cfg.device.pe_count()) {
      throw ValidationError("grid " + std::to_string(cfg.grid) + "x" + std::to_string(cfg.grid) +
                            " needs " + std::to_string(cfg.grid * cfg.grid) +
                            " work-items but the device has " +
                            std::to_string(cfg.device.pe_count()) + " cores");
    }
    for (std::size_t i = 0; i < cfg.sizes.size(); ++i) {
      const int n = cfg.sizes[i];
      if (n % cfg.grid != 0) {
        throw ValidationError("grid dimension " + std::to_string(cfg.grid) +
                              " does not divide matrix size " + std::to_string(n));
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (cfg.sizes[j] == n) {
          throw ValidationError("matrix size " + std::to_string(n) + " is listed twice");
        }
      }
    }
  } catch (const std::exception& e) {
    err << "meshnoc: " << e.what() << "\n";
    print_usage(err);
    result.status = ParseResult::Status::Error;
    return result;
  }
  result.status = ParseResult::Status::Ok;
  return result;
}

// ---------------------------------------------------------------------------
// Host-side verification oracle
// ---------------------------------------------------------------------------

// Plain triple loop with double accumulation; the kernels must match it
// within kVerifyRelTol per element.
inline std::vector<float> naive_matmul(std::span<const float> a, std::span<const float> b, int n) {
  std::vector<float> c(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) {
        acc += static_cast<double>(a[static_cast<std::size_t>(i * n + k)]) *
               static_cast<double>(b[static_cast<std::size_t>(k * n + j)]);
      }
      c[static_cast<std::size_t>(i * n + j)] = static_cast<float>(acc);
    }
  }
  return c;
}

struct VerifyResult {
  bool ok = true;
  std::size_t worst_index = 0;
  double worst_rel = 0.0;
  float got = 0.0f;
  float want = 0.0f;
};

inline VerifyResult verify_against(std::span<const float> got, std::span<const float> want,
                                   double rel_tol = kVerifyRelTol) {
  VerifyResult r;
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double denom = std::max(std::abs(static_cast<double>(want[i])), 1e-6);
    const double rel = std::abs(static_cast<double>(got[i]) - want[i]) / denom;
    if (rel > r.worst_rel) {
      r.worst_rel = rel;
      r.worst_index = i;
      r.got = got[i];
      r.want = want[i];
    }
  }
  r.ok = r.worst_rel <= rel_tol;
  return r;
}

// ---------------------------------------------------------------------------
// Benchmark driver
// ---------------------------------------------------------------------------

namespace detail {

inline RunResult run_one(HostRuntime& rt, const std::string& mode, int n, int p,
                         std::span<const float> a, std::span<const float> b) {
  auto prob = cannon::make_problem(rt, n, p);
  rt.write_buffer(prob.a, 0, a);
  rt.write_buffer(prob.b, 0, b);
  const char* kernel =
      (mode == kModeReference) ? cannon::kReferenceKernel : cannon::kHybridKernel;
  LaunchRecord rec = rt.enqueue_kernel(kernel, p * p, cannon::problem_args(prob));
  return RunResult{mode, n, p, rec.stats};
}

inline RunResult run_one_verified(HostRuntime& rt, const std::string& mode, int n, int p,
                                  std::span<const float> a, std::span<const float> b,
                                  std::span<const float> expected, std::ostream& err, bool& ok) {
  auto prob = cannon::make_problem(rt, n, p);
  rt.write_buffer(prob.a, 0, a);
  rt.write_buffer(prob.b, 0, b);
  const char* kernel =
      (mode == kModeReference) ? cannon::kReferenceKernel : cannon::kHybridKernel;
  LaunchRecord rec = rt.enqueue_kernel(kernel, p * p, cannon::problem_args(prob));
  const auto got = rt.read_buffer(prob.c, 0, static_cast<std::size_t>(n) * n);
  const auto v = verify_against(got, expected);
  if (!v.ok) {
    err << "verification failure: " << mode << " n=" << n << " p=" << p << " element "
        << v.worst_index << " got " << v.got << " want " << v.want << " (rel err "
        << v.worst_rel << " > " << kVerifyRelTol << ")\n";
    ok = false;
  }
  return RunResult{mode, n, p, rec.stats};
}

inline void write_csv(std::ostream& os, std::span<const BenchmarkReport> rows) {
  os << "n,p,mode,flops,global_read_words,global_write_words,remote_words,remote_word_hops,"
        "barriers,est_time_s,mflops,speedup\n";
  std::ostringstream line;
  line << std::setprecision(17);
  for (const auto& r : rows) {
    line.str("");
    line << r.n << ',' << r.p << ',' << r.mode << ',' << r.stats.flops << ','
         << r.stats.global_read_words << ',' << r.stats.global_write_words << ','
         << r.stats.remote_words << ',' << r.stats.remote_word_hops << ',' << r.stats.barriers
         << ',' << r.est_time_s << ',' << r.mflops << ',' << r.speedup;
    os << line.str() << '\n';
  }
}

inline void write_table(std::ostream& os, std::span<const BenchmarkReport> rows,
                        const CostParams& params) {
  os << std::left << std::setw(6) << "n" << std::setw(4) << "p" << std::setw(11) << "mode"
     << std::right << std::setw(10) << "MFLOPS" << std::setw(12) << "time_ms" << std::setw(9)
     << "speedup" << std::setw(12) << "glob_rd" << std::setw(12) << "glob_wr" << std::setw(12)
     << "remote" << "\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(6) << r.n << std::setw(4) << r.p << std::setw(11) << r.mode
       << std::right << std::fixed << std::setprecision(1) << std::setw(10) << r.mflops
       << std::setprecision(4) << std::setw(12) << r.est_time_s * 1e3 << std::setprecision(2)
       << std::setw(9) << r.speedup << std::setw(12) << r.stats.global_read_words << std::setw(12)
       << r.stats.global_write_words << std::setw(12) << r.stats.remote_words << "\n";
    os.unsetf(std::ios::fixed);
    os << std::setprecision(6);
  }
  os << "# cost params: clock_hz=" << params.clock_hz
     << " flops_per_cycle_per_core=" << params.flops_per_cycle_per_core
     << " global_word_cost_cycles=" << params.global_word_cost_cycles
     << " hop_word_cost_cycles=" << params.hop_word_cost_cycles
     << " round_overhead_cycles=" << params.round_overhead_cycles << "\n";
  os << "# modeled time excludes host<->global staging\n";
}

// Modeled hybrid/reference speedup at the largest paired size under an
// adjusted hop cost; shows how sensitive the headline number is to the
// free NoC parameter.
inline std::optional<double> speedup_with_hop_cost(std::span<const BenchmarkReport> rows,
                                                   CostParams params, double hop_cost) {
  params.hop_word_cost_cycles = hop_cost;
  const BenchmarkReport* ref = nullptr;
  const BenchmarkReport* hyb = nullptr;
  for (const auto& r : rows) {
    if (r.mode == kModeReference && (!ref || r.n > ref->n)) ref = &r;
  }
  for (const auto& r : rows) {
    if (r.mode == kModeHybrid && ref && r.n == ref->n && r.p == ref->p) hyb = &r;
  }
  if (!ref || !hyb) return std::nullopt;
  return estimate_time(ref->stats, params, ref->p) / estimate_time(hyb->stats, params, hyb->p);
}

}  // namespace detail

// Fits the cost model using two reference-mode runs at the measurement
// setup's grid (4x4), independent of the benchmark's --grid.
inline CostParams run_calibration(HostRuntime& rt, const CostParams& params, std::uint64_t seed) {
  auto point = [&](int n, double target) {
    std::uint64_t state = cannon::matrix_seed(seed, n);
    const auto a = cannon::random_matrix(n, state);
    const auto b = cannon::random_matrix(n, state);
    const RunResult run = detail::run_one(rt, kModeReference, n, kCalibrateGrid, a, b);
    return CalibrationPoint{n, kCalibrateGrid, run.stats, target};
  };
  const auto big = point(kCalibrateBigN, kCalibrateBigMflops);
  const auto small = point(kCalibrateSmallN, kCalibrateSmallMflops);
  return calibrate(params, big, small);
}

inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    HostRuntime rt(cfg.device);
    cannon::register_kernels(rt);
    TraceLog trace;
    if (!cfg.trace_file.empty()) rt.set_trace(&trace);

    CostParams params = cfg.params;
    if (cfg.calibrate) {
      params = run_calibration(rt, params, cfg.seed);
      if (!cfg.params_file.empty()) update_params_file(cfg.params_file, params);
      err << "calibrated: global_word_cost_cycles=" << std::setprecision(6)
          << params.global_word_cost_cycles
          << " flops_per_cycle_per_core=" << params.flops_per_cycle_per_core << "\n";
    }

    std::vector<std::string> modes;
    if (cfg.mode != RunConfig::Mode::Hybrid) modes.push_back(kModeReference);
    if (cfg.mode != RunConfig::Mode::Reference) modes.push_back(kModeHybrid);

    bool ok = true;
    std::vector<RunResult> results;
    for (int n : cfg.sizes) {
      std::uint64_t state = cannon::matrix_seed(cfg.seed, n);
      const auto a = cannon::random_matrix(n, state);
      const auto b = cannon::random_matrix(n, state);
      const auto expected = naive_matmul(a, b, n);
      for (const auto& mode : modes) {
        results.push_back(detail::run_one_verified(rt, mode, n, cfg.grid, a, b, expected, err, ok));
      }
    }
    if (!ok) return 1;

    const auto rows = report(results, params);
    if (cfg.output == RunConfig::Output::Csv) {
      detail::write_csv(out, rows);
    } else {
      detail::write_table(out, rows, params);
      if (cfg.calibrate) {
        const auto lo = detail::speedup_with_hop_cost(rows, params, 0.0);
        const auto hi = detail::speedup_with_hop_cost(rows, params, 4.0);
        if (lo && hi) {
          out << "# hop-cost sensitivity at largest size: speedup " << std::setprecision(3) << *lo
              << " (free NoC) .. " << *hi << " (4 cycles/word/hop)\n";
        }
      }
    }

    if (!cfg.trace_file.empty()) {
      std::ofstream tf(cfg.trace_file, std::ios::trunc);
      if (!tf) throw ValidationError("cannot write trace file '" + cfg.trace_file + "'");
      trace.write_csv(tf);
    }
    return 0;
  } catch (const SimError& e) {
    err << "meshnoc: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace meshnoc
