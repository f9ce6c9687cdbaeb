#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "meshnoc/host.hpp"

using namespace meshnoc;

namespace {

KernelDescriptor noop_kernel(const std::string& name = "noop") {
  return {name, [](KernelContext&) {}, {}};
}

}  // namespace

TEST_CASE("create_buffer bump-allocates zeroed disjoint regions") {
  HostRuntime rt;
  const auto b1 = rt.create_buffer(4);
  CHECK(b1.base == 0);
  CHECK(b1.size == 4);

  const auto b2 = rt.create_buffer(8);
  CHECK(b2.base == 4);
  CHECK(b2.base >= b1.base + b1.size);

  const auto zeros = rt.read_buffer(b2, 0, 2);
  CHECK(zeros == std::vector<float>{0.0f, 0.0f});
}

TEST_CASE("create_buffer reports requested vs available on exhaustion") {
  DeviceConfig cfg;
  cfg.global_mem_bytes = 64;
  HostRuntime rt(cfg);
  rt.create_buffer(48);
  try {
    rt.create_buffer(32);
    FAIL("expected allocation failure");
  } catch (const AllocationError& e) {
    CHECK(e.requested == 32);
    CHECK(e.available == 16);
  }
  CHECK_THROWS_AS(rt.create_buffer(0), AlignmentError);
  CHECK_THROWS_AS(rt.create_buffer(6), AlignmentError);
}

TEST_CASE("oversized buffer request fails outright") {
  HostRuntime rt;
  CHECK_THROWS_AS(rt.create_buffer(rt.device().config().global_mem_bytes + 4), AllocationError);
}

TEST_CASE("buffer write/read round-trips and checks bounds") {
  HostRuntime rt;
  const auto buf = rt.create_buffer(16);
  rt.write_buffer(buf, 0, std::vector<float>{1.0f, 2.0f});
  CHECK(rt.read_buffer(buf, 0, 2) == std::vector<float>{1.0f, 2.0f});

  CHECK_THROWS_AS(rt.read_buffer(buf, 16, 1), ArenaFault);
  CHECK_THROWS_AS(rt.write_buffer(buf, 12, std::vector<float>{1, 2}), ArenaFault);
  CHECK_THROWS_AS(rt.read_buffer(buf, 2, 1), AlignmentError);

  // Zero-length transfers are no-ops, even at the end boundary.
  CHECK_NOTHROW(rt.write_buffer(buf, 16, {}));
  CHECK(rt.read_buffer(buf, 16, 0).empty());
}

TEST_CASE("kernel registry validates names and signatures") {
  HostRuntime rt;
  rt.register_kernel(noop_kernel());
  CHECK(rt.has_kernel("noop"));
  CHECK_THROWS_AS(rt.register_kernel(noop_kernel()), ValidationError);
  CHECK_THROWS_AS(rt.enqueue_kernel("missing", 1, {}), UnknownKernelError);
  CHECK_THROWS_AS(rt.enqueue_kernel("noop", 1, {Arg::make_word(0u)}), SignatureError);

  rt.register_kernel({"wants_buffer", [](KernelContext&) {}, {ArgKind::Buffer}});
  CHECK_THROWS_AS(rt.enqueue_kernel("wants_buffer", 1, {Arg::make_word(0u)}), SignatureError);
}

TEST_CASE("launch size is constrained to the core count") {
  HostRuntime rt;
  rt.register_kernel(noop_kernel());
  CHECK_THROWS_AS(rt.enqueue_kernel("noop", rt.device().pe_count() + 1, {}), LaunchRejection);
  CHECK_THROWS_AS(rt.enqueue_kernel("noop", 0, {}), LaunchRejection);
  CHECK_NOTHROW(rt.enqueue_kernel("noop", rt.device().pe_count(), {}));
}

TEST_CASE("no-op kernel completes with all counters zero") {
  HostRuntime rt;
  rt.register_kernel(noop_kernel());
  const auto rec = rt.enqueue_kernel("noop", 16, {});
  CHECK(rec.stats == TrafficStats{});
  CHECK(rec.barrier_events == 0);
  CHECK(rec.per_pe.size() == 16);
  TrafficStats sum;
  for (const auto& s : rec.per_pe) sum += s;
  CHECK(sum == rec.stats);
}

TEST_CASE("kernel writes my_pe into its buffer slot") {
  HostRuntime rt;
  rt.register_kernel({"identity",
                      [](KernelContext& ctx) {
                        ctx.local_write_f32(0, static_cast<float>(ctx.my_pe()));
                        ctx.global_write(ctx.arg_buffer(0),
                                         static_cast<std::uint64_t>(ctx.my_pe()) * kWordBytes, 0,
                                         1);
                      },
                      {ArgKind::Buffer}});
  const auto buf = rt.create_buffer(16 * kWordBytes);
  const auto rec = rt.enqueue_kernel("identity", 16, {Arg::make_buffer(buf)});
  const auto out = rt.read_buffer(buf, 0, 16);
  for (int pe = 0; pe < 16; ++pe) {
    CHECK(out[static_cast<std::size_t>(pe)] == static_cast<float>(pe));
  }
  CHECK(rec.stats.global_write_words == 16);
  CHECK(rec.stats.local_words == 16);
}

TEST_CASE("host staging does not touch device traffic counters") {
  HostRuntime rt;
  rt.register_kernel(noop_kernel());
  const auto buf = rt.create_buffer(64);
  rt.write_buffer(buf, 0, std::vector<float>(16, 2.0f));
  (void)rt.read_buffer(buf, 0, 16);
  const auto rec = rt.enqueue_kernel("noop", 4, {});
  CHECK(rec.stats == TrafficStats{});
}

TEST_CASE("symmetric heap state never survives across enqueues") {
  HostRuntime rt;
  rt.register_kernel({"greedy",
                      [](KernelContext& ctx) {
                        const auto addr = ctx.shm_alloc(ctx.device_config().sym_heap_bytes);
                        if (addr.offset != 0) throw std::logic_error("heap not reset");
                      },
                      {}});
  for (int i = 0; i < 5; ++i) {
    CHECK_NOTHROW(rt.enqueue_kernel("greedy", 16, {}));
  }
}

TEST_CASE("argument words carry raw float bits") {
  HostRuntime rt;
  float seen = 0.0f;
  rt.register_kernel({"scalar",
                      [&seen](KernelContext& ctx) {
                        if (ctx.my_pe() == 0) seen = ctx.arg_word_f32(0);
                      },
                      {ArgKind::Word}});
  rt.enqueue_kernel("scalar", 2, {Arg::make_word(-3.25f)});
  CHECK(seen == -3.25f);
}

TEST_CASE("reset_device drops buffers and zeroes memory") {
  HostRuntime rt;
  const auto buf = rt.create_buffer(16);
  rt.write_buffer(buf, 0, std::vector<float>{5.0f});
  rt.reset_device();
  CHECK(rt.global_bytes_in_use() == 0);
  const auto fresh = rt.create_buffer(16);
  CHECK(fresh.base == 0);
  CHECK(rt.read_buffer(fresh, 0, 1) == std::vector<float>{0.0f});
}
