#include "rttlens/measurements.hpp"

#include <cmath>
#include <istream>
#include <map>
#include <utility>

#include "rttlens/csv.hpp"
#include "rttlens/errors.hpp"

namespace rttlens {

MeasurementParse parse_measurements(std::istream& in) {
  if (!in) throw IoError("measurements: unreadable input");
  std::string line;
  if (!std::getline(in, line)) throw FormatError("measurements: empty input");
  if (csv::trim(line) != "source_id,destination_ip,rtt_ms,probe_index,complete") {
    throw FormatError(
        "measurements: expected header 'source_id,destination_ip,rtt_ms,probe_index,complete'");
  }

  MeasurementParse out;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (csv::trim(line).empty()) continue;
    const auto reject = [&](const std::string& reason) {
      out.rejects.push_back(RejectedRow{line_number, std::string(csv::trim(line)), reason});
    };
    const auto fields = csv::split_line(line);
    if (fields.size() != 5) {
      reject("wrong field count");
      continue;
    }
    MeasurementRecord rec;
    rec.source_id = fields[0];
    if (rec.source_id.empty()) {
      reject("empty source_id");
      continue;
    }
    const auto ip = Ipv4::parse(fields[1]);
    if (!ip) {
      reject("invalid destination_ip");
      continue;
    }
    rec.destination_ip = *ip;
    if (fields[4] == "true") {
      rec.complete = true;
    } else if (fields[4] == "false") {
      rec.complete = false;
    } else {
      reject("invalid complete flag");
      continue;
    }
    const auto rtt = csv::to_double(fields[2]);
    if (rec.complete) {
      if (!rtt || !std::isfinite(*rtt) || *rtt <= 0) {
        reject("non-positive RTT");
        continue;
      }
      rec.rtt_ms = *rtt;
    } else {
      // An incomplete probe carries no usable RTT; an empty field is fine.
      rec.rtt_ms = rtt && std::isfinite(*rtt) ? *rtt : 0.0;
    }
    const auto probe = csv::to_int(fields[3]);
    if (!probe || *probe < 1 || *probe > 3) {
      reject("invalid probe_index");
      continue;
    }
    rec.probe_index = static_cast<int>(*probe);
    out.records.push_back(std::move(rec));
  }
  return out;
}

std::vector<MeasurementRecord> collapse_replicates(const std::vector<MeasurementRecord>& records) {
  std::map<std::pair<std::string, std::uint32_t>, std::size_t> best;  // -> output index
  std::vector<MeasurementRecord> out;
  std::vector<bool> has_complete;
  for (const auto& rec : records) {
    const auto key = std::make_pair(rec.source_id, rec.destination_ip.value);
    const auto it = best.find(key);
    if (it == best.end()) {
      best.emplace(key, out.size());
      out.push_back(rec);
      has_complete.push_back(rec.complete);
      continue;
    }
    MeasurementRecord& kept = out[it->second];
    if (!rec.complete) continue;
    if (!has_complete[it->second] || rec.rtt_ms < kept.rtt_ms) {
      kept = rec;
      has_complete[it->second] = true;
    }
  }
  // Groups whose replicates are all incomplete are dropped.
  std::vector<MeasurementRecord> result;
  result.reserve(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (has_complete[i]) result.push_back(std::move(out[i]));
  }
  return result;
}

}  // namespace rttlens
