#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "rttlens/prefix.hpp"

namespace rttlens {

/// One probe of a (source, destination) path.
struct MeasurementRecord {
  std::string source_id;
  Ipv4 destination_ip;
  double rtt_ms = 0;
  int probe_index = 1;  // 1..3
  bool complete = false;
};

struct RejectedRow {
  std::size_t line_number = 0;
  std::string content;
  std::string reason;
};

struct MeasurementParse {
  std::vector<MeasurementRecord> records;
  std::vector<RejectedRow> rejects;
};

/// CSV header: source_id,destination_ip,rtt_ms,probe_index,complete
/// Malformed rows are collected as rejects, never silently dropped. An
/// incomplete probe may leave rtt_ms empty. Header mismatch is a format
/// error; an unreadable stream an I/O error.
MeasurementParse parse_measurements(std::istream& in);

/// One record per (source, destination): the minimum RTT over complete
/// replicates. Groups with no complete replicate are dropped. Output keeps
/// first-appearance group order.
std::vector<MeasurementRecord> collapse_replicates(const std::vector<MeasurementRecord>& records);

}  // namespace rttlens
