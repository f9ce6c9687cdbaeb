#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "meshnoc/host.hpp"

namespace meshnoc::cannon {

inline constexpr const char* kReferenceKernel = "cannon_reference";
inline constexpr const char* kHybridKernel = "cannon_hybrid";

// The hybrid kernel issues no synchronization before the first compute
// round (tiles are loaded pre-skewed, so nothing crosses the mesh until
// the first shift); every PE therefore calls barrier_all exactly
// kHybridSetupBarriers + (p - 1) times.
inline constexpr int kHybridSetupBarriers = 0;

// Tile each PE (i, j) holds after the initial alignment: row i of A is
// rotated left by i, column j of B is rotated up by j.
inline std::pair<GridCoord, GridCoord> skew_source(int i, int j, int p) {
  return {GridCoord{i, (j + i) % p}, GridCoord{(i + j) % p, j}};
}

// C += A * B for s x s row-major tiles, fixed i-k-j loop order.
inline void local_mm_accum(std::span<float> c, std::span<const float> a, std::span<const float> b,
                           int s) {
  for (int i = 0; i < s; ++i) {
    for (int k = 0; k < s; ++k) {
      const float aik = a[static_cast<std::size_t>(i * s + k)];
      const float* brow = &b[static_cast<std::size_t>(k * s)];
      float* crow = &c[static_cast<std::size_t>(i * s)];
      for (int j = 0; j < s; ++j) crow[j] += aik * brow[j];
    }
  }
}

namespace detail {

struct TileGeom {
  int n;  // matrix dimension
  int p;  // grid dimension
  int s;  // tile dimension, n / p
  std::uint32_t tile_bytes() const {
    return static_cast<std::uint32_t>(s) * static_cast<std::uint32_t>(s) * kWordBytes;
  }
  std::uint32_t tile_words() const {
    return static_cast<std::uint32_t>(s) * static_cast<std::uint32_t>(s);
  }
};

// Moves one s x s tile (block row bi, block column bj of an n x n
// row-major matrix) between a global buffer and the symmetric heap,
// one tile row per transfer.
inline void read_tile(KernelContext& ctx, const BufferHandle& buf, const TileGeom& g, int bi,
                      int bj, SymAddr dst) {
  for (int t = 0; t < g.s; ++t) {
    const std::uint64_t buf_off =
        (std::uint64_t{static_cast<std::uint64_t>(bi * g.s + t)} * g.n + bj * g.s) * kWordBytes;
    ctx.global_read(buf, buf_off, dst.offset + static_cast<std::uint32_t>(t * g.s) * kWordBytes,
                    static_cast<std::uint32_t>(g.s));
  }
}

inline void write_tile(KernelContext& ctx, const BufferHandle& buf, const TileGeom& g, int bi,
                       int bj, SymAddr src) {
  for (int t = 0; t < g.s; ++t) {
    const std::uint64_t buf_off =
        (std::uint64_t{static_cast<std::uint64_t>(bi * g.s + t)} * g.n + bj * g.s) * kWordBytes;
    ctx.global_write(buf, buf_off, src.offset + static_cast<std::uint32_t>(t * g.s) * kWordBytes,
                     static_cast<std::uint32_t>(g.s));
  }
}

inline void mm_accum_tiles(KernelContext& ctx, SymAddr c, SymAddr a, SymAddr b,
                           const TileGeom& g) {
  local_mm_accum(ctx.local_f32(c.offset, g.tile_words()), ctx.local_f32(a.offset, g.tile_words()),
                 ctx.local_f32(b.offset, g.tile_words()), g.s);
  ctx.count_flops(2ull * g.s * g.s * g.s);
}

inline TileGeom geom_from_args(KernelContext& ctx) {
  const int n = static_cast<int>(ctx.arg_word(3));
  const int p = static_cast<int>(ctx.arg_word(4));
  if (p < 1 || n < 1 || n % p != 0 || p * p != ctx.n_pes()) {
    throw ValidationError("cannon kernel launched with n=" + std::to_string(n) +
                          ", p=" + std::to_string(p) + " over " + std::to_string(ctx.n_pes()) +
                          " work items");
  }
  return TileGeom{n, p, n / p};
}

}  // namespace detail

// Baseline kernel: every round, each PE fetches the A and B tiles it
// needs straight from global memory, so nothing is re-used on chip.
// Args: A buffer, B buffer, C buffer, n, p.
inline void reference_kernel(KernelContext& ctx) {
  const auto g = detail::geom_from_args(ctx);
  const BufferHandle a_buf = ctx.arg_buffer(0);
  const BufferHandle b_buf = ctx.arg_buffer(1);
  const BufferHandle c_buf = ctx.arg_buffer(2);
  const int i = ctx.my_pe() / g.p;
  const int j = ctx.my_pe() % g.p;

  const SymAddr a_t = ctx.shm_alloc(g.tile_bytes());
  const SymAddr b_t = ctx.shm_alloc(g.tile_bytes());
  const SymAddr c_t = ctx.shm_alloc(g.tile_bytes());

  for (int r = 0; r < g.p; ++r) {
    detail::read_tile(ctx, a_buf, g, i, (j + i + r) % g.p, a_t);
    detail::read_tile(ctx, b_buf, g, (i + j + r) % g.p, j, b_t);
    detail::mm_accum_tiles(ctx, c_t, a_t, b_t, g);
    ctx.note_round();
  }
  detail::write_tile(ctx, c_buf, g, i, j, c_t);
}

// Hybrid kernel: each PE reads its pre-skewed tiles from global memory
// exactly once, then circulates them over the mesh with put/barrier.
// Receive buffers are distinct from the tiles being multiplied, so five
// tiles live on the heap: A, B, C plus the A/B receive pair.
inline void hybrid_kernel(KernelContext& ctx) {
  const auto g = detail::geom_from_args(ctx);
  const BufferHandle a_buf = ctx.arg_buffer(0);
  const BufferHandle b_buf = ctx.arg_buffer(1);
  const BufferHandle c_buf = ctx.arg_buffer(2);
  const int i = ctx.my_pe() / g.p;
  const int j = ctx.my_pe() % g.p;

  SymAddr a_act = ctx.shm_alloc(g.tile_bytes());
  SymAddr b_act = ctx.shm_alloc(g.tile_bytes());
  const SymAddr c_t = ctx.shm_alloc(g.tile_bytes());
  SymAddr a_rcv = ctx.shm_alloc(g.tile_bytes());
  SymAddr b_rcv = ctx.shm_alloc(g.tile_bytes());

  const auto [a_src, b_src] = skew_source(i, j, g.p);
  detail::read_tile(ctx, a_buf, g, a_src.row, a_src.col, a_act);
  detail::read_tile(ctx, b_buf, g, b_src.row, b_src.col, b_act);

  const int left = i * g.p + (j + g.p - 1) % g.p;
  const int up = ((i + g.p - 1) % g.p) * g.p + j;

  for (int r = 0; r + 1 < g.p; ++r) {
    detail::mm_accum_tiles(ctx, c_t, a_act, b_act, g);
    ctx.note_round();
    ctx.put(a_rcv, a_act.offset, g.tile_words(), left);
    ctx.put(b_rcv, b_act.offset, g.tile_words(), up);
    ctx.barrier_all();
    std::swap(a_act, a_rcv);
    std::swap(b_act, b_rcv);
  }
  detail::mm_accum_tiles(ctx, c_t, a_act, b_act, g);
  ctx.note_round();
  detail::write_tile(ctx, c_buf, g, i, j, c_t);
}

inline void register_kernels(HostRuntime& rt) {
  const std::vector<ArgKind> arity{ArgKind::Buffer, ArgKind::Buffer, ArgKind::Buffer,
                                   ArgKind::Word, ArgKind::Word};
  rt.register_kernel({kReferenceKernel, reference_kernel, arity});
  rt.register_kernel({kHybridKernel, hybrid_kernel, arity});
}

// Host-side description of one n x n multiply over a p x p PE grid.
struct CannonProblem {
  int n = 0;
  int p = 0;
  int s = 0;
  BufferHandle a, b, c;
};

inline CannonProblem make_problem(HostRuntime& rt, int n, int p) {
  if (n < 1 || p < 1 || n % p != 0) {
    throw ValidationError("grid dimension " + std::to_string(p) + " must divide matrix size " +
                          std::to_string(n));
  }
  if (p * p > rt.device().pe_count()) {
    throw ValidationError("grid " + std::to_string(p) + "x" + std::to_string(p) +
                          " exceeds the device's " + std::to_string(rt.device().pe_count()) +
                          " cores");
  }
  const std::uint64_t bytes = std::uint64_t{static_cast<std::uint64_t>(n)} * n * kWordBytes;
  CannonProblem prob{n, p, n / p, rt.create_buffer(bytes), rt.create_buffer(bytes),
                     rt.create_buffer(bytes)};
  return prob;
}

inline std::vector<Arg> problem_args(const CannonProblem& prob) {
  return {Arg::make_buffer(prob.a), Arg::make_buffer(prob.b), Arg::make_buffer(prob.c),
          Arg::make_word(static_cast<std::uint32_t>(prob.n)),
          Arg::make_word(static_cast<std::uint32_t>(prob.p))};
}

// Reproducible benchmark inputs: a 64-bit linear congruential generator
// (Knuth's MMIX constants, a = 6364136223846793005, c = 1442695040888963407)
// whose top 24 bits map to floats in [0, 1).
inline std::uint64_t lcg_next(std::uint64_t& state) {
  state = state * 6364136223846793005ull + 1442695040888963407ull;
  return state;
}

inline float lcg_float(std::uint64_t& state) {
  return static_cast<float>(lcg_next(state) >> 40) * (1.0f / 16777216.0f);
}

inline std::vector<float> random_matrix(int n, std::uint64_t& state) {
  std::vector<float> m(static_cast<std::size_t>(n) * n);
  for (auto& v : m) v = lcg_float(state);
  return m;
}

// Deterministic per-(seed, n) stream so a size's inputs do not depend on
// which other sizes run.
inline std::uint64_t matrix_seed(std::uint64_t seed, int n) {
  return seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(n);
}

}  // namespace meshnoc::cannon
