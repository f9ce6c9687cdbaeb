#pragma once

// Shared helpers for the unit and acceptance suites. The matrix-product
// oracle here is written independently of the library's kernels and of
// its host-side verifier: j-outer loops, double accumulation.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <utility>
#include <vector>

#include "meshnoc/meshnoc.hpp"

namespace testsupport {

inline std::vector<float> oracle_matmul(std::span<const float> a, std::span<const float> b,
                                        int n) {
  std::vector<float> c(static_cast<std::size_t>(n) * n, 0.0f);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) {
        acc += static_cast<double>(a[static_cast<std::size_t>(i) * n + k]) *
               static_cast<double>(b[static_cast<std::size_t>(k) * n + j]);
      }
      c[static_cast<std::size_t>(i) * n + j] = static_cast<float>(acc);
    }
  }
  return c;
}

inline double worst_rel_err(std::span<const float> got, std::span<const float> want) {
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double denom = std::max(std::abs(static_cast<double>(want[i])), 1e-6);
    worst = std::max(worst, std::abs(static_cast<double>(got[i]) - want[i]) / denom);
  }
  return worst;
}

inline std::pair<std::vector<float>, std::vector<float>> seeded_inputs(int n,
                                                                       std::uint64_t seed) {
  std::uint64_t state = meshnoc::cannon::matrix_seed(seed, n);
  auto a = meshnoc::cannon::random_matrix(n, state);
  auto b = meshnoc::cannon::random_matrix(n, state);
  return {std::move(a), std::move(b)};
}

struct CannonRun {
  meshnoc::LaunchRecord record;
  std::vector<float> c;
};

inline CannonRun run_cannon(meshnoc::HostRuntime& rt, const char* kernel, int n, int p,
                            std::span<const float> a, std::span<const float> b) {
  auto prob = meshnoc::cannon::make_problem(rt, n, p);
  rt.write_buffer(prob.a, 0, a);
  rt.write_buffer(prob.b, 0, b);
  auto rec = rt.enqueue_kernel(kernel, p * p, meshnoc::cannon::problem_args(prob));
  return {std::move(rec), rt.read_buffer(prob.c, 0, static_cast<std::size_t>(n) * n)};
}

inline bool same_floats_bitwise(std::span<const float> a, std::span<const float> b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

}  // namespace testsupport
