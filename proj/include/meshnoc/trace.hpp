#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace meshnoc {

enum class TraceOp { Put, Get, Barrier };

inline const char* trace_op_name(TraceOp op) {
  switch (op) {
    case TraceOp::Put: return "put";
    case TraceOp::Get: return "get";
    case TraceOp::Barrier: return "barrier";
  }
  return "?";
}

// One record per put/get/barrier call. src_pe is the PE whose memory the
// data leaves (the caller for put, the remote PE for get); dst_pe is where
// it lands. Barriers carry the calling PE in both fields.
struct TraceRecord {
  std::uint64_t epoch = 0;
  TraceOp op = TraceOp::Barrier;
  int src_pe = 0;
  int dst_pe = 0;
  std::uint32_t offset = 0;
  std::uint32_t nwords = 0;
};

struct TraceLog {
  std::vector<TraceRecord> records;

  static constexpr const char* kCsvHeader = "epoch,op,src_pe,dst_pe,offset,nwords";

  void write_csv(std::ostream& os) const {
    os << kCsvHeader << '\n';
    for (const auto& r : records) {
      os << r.epoch << ',' << trace_op_name(r.op) << ',' << r.src_pe << ',' << r.dst_pe << ','
         << r.offset << ',' << r.nwords << '\n';
    }
  }
};

}  // namespace meshnoc
