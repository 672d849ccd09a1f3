#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rttlens/latency_matrix.hpp"
#include "rttlens/measurements.hpp"
#include "rttlens/prefix.hpp"
#include "rttlens/rng.hpp"
#include "rttlens/tags.hpp"
#include "test_support.hpp"

using rttlens::Cidr;
using rttlens::Ipv4;
using rttlens::MeasurementRecord;
using rttlens::Rng;
using test_support::full_matrix;
using test_support::tag_of;

namespace {

constexpr const char* kMeasurementHeader = "source_id,destination_ip,rtt_ms,probe_index,complete";

rttlens::MeasurementParse parse(const std::string& body) {
  std::istringstream in(std::string(kMeasurementHeader) + "\n" + body);
  return rttlens::parse_measurements(in);
}

MeasurementRecord record(const std::string& source, const std::string& ip, double rtt,
                         bool complete = true, int probe = 1) {
  MeasurementRecord r;
  r.source_id = source;
  r.destination_ip = *Ipv4::parse(ip);
  r.rtt_ms = rtt;
  r.probe_index = probe;
  r.complete = complete;
  return r;
}

}  // namespace

TEST_SUITE("delay_matrix") {

TEST_CASE("measurement rows map onto records field by field") {
  const auto parsed = parse("s1,2.16.126.10,16.2,1,true\n");
  REQUIRE(parsed.records.size() == 1);
  CHECK(parsed.rejects.empty());
  const auto& r = parsed.records[0];
  CHECK(r.source_id == "s1");
  CHECK(r.destination_ip == *Ipv4::parse("2.16.126.10"));
  CHECK(r.rtt_ms == 16.2);
  CHECK(r.probe_index == 1);
  CHECK(r.complete);
}

TEST_CASE("non-positive RTT on a complete probe is rejected with a reason") {
  const auto parsed = parse("s1,1.2.3.4,-3,1,true\n");
  CHECK(parsed.records.empty());
  REQUIRE(parsed.rejects.size() == 1);
  CHECK(parsed.rejects[0].reason == "non-positive RTT");
  CHECK(parsed.rejects[0].line_number == 2);
  CHECK(parsed.rejects[0].content == "s1,1.2.3.4,-3,1,true");
}

TEST_CASE("malformed rows are collected while good rows survive") {
  const auto parsed = parse(
      "s1,1.2.3.4,10.5,1,true\n"
      "s1,1.2.3.4,11.0,2,true\n"
      "s2,not-an-ip,9.0,1,true\n"
      "s2,1.2.3.4,9.1,1,true\n"
      "s3,1.2.3.4,8.0,9,true\n"
      "s3,1.2.3.5,8.2,1,true\n");
  CHECK(parsed.records.size() == 4);
  REQUIRE(parsed.rejects.size() == 2);
  CHECK(parsed.rejects[0].line_number == 4);
  CHECK(parsed.rejects[0].reason == "invalid destination_ip");
  CHECK(parsed.rejects[1].line_number == 6);
  CHECK(parsed.rejects[1].reason == "invalid probe_index");
}

TEST_CASE("an incomplete probe may leave the rtt empty") {
  const auto parsed = parse("s1,1.2.3.4,,2,false\n");
  REQUIRE(parsed.records.size() == 1);
  CHECK_FALSE(parsed.records[0].complete);
}

TEST_CASE("a wrong measurement header is a format error") {
  std::istringstream in("a,b,c\ns1,1.2.3.4,10,1,true\n");
  CHECK_THROWS_AS((void)rttlens::parse_measurements(in), rttlens::FormatError);
}

TEST_CASE("collapse keeps the minimum over complete replicates") {
  const std::vector<MeasurementRecord> records = {
      record("s1", "1.2.3.4", 12.0, true, 1),
      record("s1", "1.2.3.4", 11.4, true, 2),
      record("s1", "1.2.3.4", 13.1, true, 3),
  };
  const auto collapsed = rttlens::collapse_replicates(records);
  REQUIRE(collapsed.size() == 1);
  CHECK(collapsed[0].rtt_ms == 11.4);
  CHECK(collapsed[0].complete);
}

TEST_CASE("collapse drops pairs with no complete replicate") {
  const std::vector<MeasurementRecord> records = {
      record("s1", "1.2.3.4", 0.0, false, 1),
      record("s1", "1.2.3.4", 0.0, false, 2),
  };
  CHECK(rttlens::collapse_replicates(records).empty());
}

TEST_CASE("collapse ignores incomplete replicates next to complete ones") {
  const std::vector<MeasurementRecord> records = {
      record("s1", "1.2.3.4", 9.0, true, 1),
      record("s1", "1.2.3.4", 0.0, false, 2),
      record("s1", "1.2.3.4", 8.5, true, 3),
  };
  const auto collapsed = rttlens::collapse_replicates(records);
  REQUIRE(collapsed.size() == 1);
  CHECK(collapsed[0].rtt_ms == 8.5);
}

TEST_CASE("collapsed values never exceed any complete replicate") {
  Rng rng(71);
  std::vector<MeasurementRecord> records;
  for (int k = 0; k < 60; ++k) {
    const auto source = "s" + std::to_string(rng.next_below(4));
    const auto ip = "10.0.0." + std::to_string(rng.next_below(3));
    records.push_back(record(source, ip, rng.next_uniform(1.0, 50.0), rng.next_below(4) != 0,
                             1 + static_cast<int>(rng.next_below(3))));
  }
  const auto collapsed = rttlens::collapse_replicates(records);
  for (const auto& c : collapsed) {
    for (const auto& r : records) {
      if (r.complete && r.source_id == c.source_id && r.destination_ip == c.destination_ip) {
        CHECK(c.rtt_ms <= r.rtt_ms);
      }
    }
  }
}

TEST_CASE("IPv4 and CIDR parsing round-trip and reject junk") {
  CHECK(Ipv4::parse("2.16.126.10")->to_string() == "2.16.126.10");
  CHECK_FALSE(Ipv4::parse("1.2.3"));
  CHECK_FALSE(Ipv4::parse("1.2.3.256"));
  CHECK_FALSE(Ipv4::parse("1.2.3.4.5"));

  CHECK(Cidr::parse("2.16.0.0/13")->to_string() == "2.16.0.0/13");
  // Host bits clear on construction.
  CHECK(Cidr::parse("10.1.2.3/8")->to_string() == "10.0.0.0/8");
  CHECK_FALSE(Cidr::parse("1.2.3.4/33"));
  CHECK_FALSE(Cidr::parse("/8"));
  CHECK_FALSE(Cidr::parse("1.2.3.4"));
}

TEST_CASE("longest prefix match prefers the most specific covering block") {
  rttlens::PrefixTable table;
  table.insert({*Cidr::parse("2.16.0.0/13"), 20940});
  table.insert({*Cidr::parse("2.16.126.0/24"), 20940});

  const auto hit = table.longest_match(*Ipv4::parse("2.16.126.77"));
  REQUIRE(hit.has_value());
  CHECK(hit->prefix == *Cidr::parse("2.16.126.0/24"));

  const auto shallow = table.longest_match(*Ipv4::parse("2.17.1.1"));
  REQUIRE(shallow.has_value());
  CHECK(shallow->prefix == *Cidr::parse("2.16.0.0/13"));

  CHECK_FALSE(table.longest_match(*Ipv4::parse("9.9.9.9")).has_value());
}

TEST_CASE("duplicate prefixes collapse to the last inserted entry") {
  rttlens::PrefixTable table;
  table.insert({*Cidr::parse("10.0.0.0/8"), 100});
  table.insert({*Cidr::parse("10.0.0.0/8"), 200});
  CHECK(table.size() == 1);
  CHECK(table.longest_match(*Ipv4::parse("10.1.2.3"))->origin_asn == 200);
}

TEST_CASE("longest prefix match agrees with a linear scan oracle") {
  Rng rng(99);
  rttlens::PrefixTable table;
  for (int k = 0; k < 200; ++k) {
    const int length = 8 + static_cast<int>(rng.next_below(25));  // 8..32
    Cidr prefix;
    prefix.length = length;
    const auto bits = static_cast<std::uint32_t>(rng.next_u64() >> 32);
    prefix.bits = length == 0 ? 0 : bits & (~std::uint32_t{0} << (32 - length));
    table.insert({prefix, static_cast<std::uint32_t>(k)});
  }

  for (int q = 0; q < 1000; ++q) {
    const Ipv4 ip{static_cast<std::uint32_t>(rng.next_u64() >> 32)};
    std::optional<rttlens::PrefixEntry> want;
    for (const auto& entry : table.entries()) {
      if (entry.prefix.contains(ip) &&
          (!want || entry.prefix.length > want->prefix.length)) {
        want = entry;
      }
    }
    const auto got = table.longest_match(ip);
    CHECK(got.has_value() == want.has_value());
    if (got && want) {
      CHECK(got->prefix == want->prefix);
      CHECK(got->origin_asn == want->origin_asn);
    }
  }
}

TEST_CASE("prefix file loader reads blocks and flags malformed lines") {
  std::istringstream good("2.16.0.0/13,20940\n\n10.0.0.0/8\n");
  const auto table = rttlens::PrefixTable::load(good);
  CHECK(table.size() == 2);
  CHECK(table.longest_match(*Ipv4::parse("2.17.0.1"))->origin_asn == 20940);
  CHECK_FALSE(table.longest_match(*Ipv4::parse("10.1.1.1"))->origin_asn.has_value());

  std::istringstream bad("2.16.0.0/13\nnot-a-prefix\n");
  CHECK_THROWS_WITH_AS((void)rttlens::PrefixTable::load(bad),
                       doctest::Contains("line 2"), rttlens::FormatError);
}

TEST_CASE("source tag directory loads, validates, and looks up") {
  std::istringstream in(
      "source_id,asn,city,country,continent\n"
      "s1,64500,berlin,DE,EU\n"
      "s2,64501,tokyo,JP,AS\n");
  const auto dir = rttlens::TagDirectory::load(in);
  REQUIRE(dir.lookup("s1").has_value());
  CHECK(dir.lookup("s1")->asn == 64500);
  CHECK(dir.lookup("s1")->continent == rttlens::Continent::EU);
  CHECK_FALSE(dir.lookup("s9").has_value());

  std::istringstream dup(
      "source_id,asn,city,country,continent\ns1,1,a,DE,EU\ns1,2,b,DE,EU\n");
  CHECK_THROWS_AS((void)rttlens::TagDirectory::load(dup), rttlens::FormatError);

  std::istringstream mismatch("source_id,asn,city,country,continent\ns1,1,berlin,DE,AS\n");
  CHECK_THROWS_WITH_AS((void)rttlens::TagDirectory::load(mismatch),
                       doctest::Contains("does not match"), rttlens::FormatError);

  std::istringstream unknown("source_id,asn,city,country,continent\ns1,1,x,XX,EU\n");
  CHECK_THROWS_AS((void)rttlens::TagDirectory::load(unknown), rttlens::FormatError);
}

TEST_CASE("destination tags use exact ids first, then longest prefix match") {
  std::istringstream in(
      "prefix_or_ip,asn,city,country,continent\n"
      "2.16.0.0/13,20940,paris,FR,EU\n"
      "9.9.9.9,19281,berkeley,US,NA\n");
  const auto tags = rttlens::DestinationTags::load(in);

  REQUIRE(tags.lookup("9.9.9.9").has_value());
  CHECK(tags.lookup("9.9.9.9")->asn == 19281);
  REQUIRE(tags.lookup("2.16.126.10").has_value());
  CHECK(tags.lookup("2.16.126.10")->city == "paris");
  REQUIRE(tags.lookup("2.16.0.0/13").has_value());
  CHECK_FALSE(tags.lookup("8.8.8.8").has_value());
  CHECK_FALSE(tags.lookup("not-an-endpoint").has_value());
}

TEST_CASE("ip matrix holds one column per destination in the prefix") {
  const std::vector<MeasurementRecord> collapsed = {
      record("s1", "10.0.0.1", 5.0), record("s1", "10.0.0.2", 6.0), record("s1", "10.0.0.3", 7.0),
      record("s2", "10.0.0.1", 8.0), record("s2", "10.0.0.2", 9.0), record("s2", "10.0.0.3", 4.0),
      record("s1", "192.168.0.1", 99.0),  // outside the prefix, ignored
  };
  const auto x = rttlens::build_ip_matrix(collapsed, *Cidr::parse("10.0.0.0/24"));
  REQUIRE(x.rows() == 2);
  REQUIRE(x.cols() == 3);
  CHECK(x.level == rttlens::MatrixLevel::ip);
  CHECK(x.col_labels[0].id == "10.0.0.1");
  CHECK(x.col_labels[2].id == "10.0.0.3");
  CHECK(x.values(0, 0) == 5.0);
  CHECK(x.values(1, 2) == 4.0);
  CHECK(x.missing_count() == 0);
}

TEST_CASE("sources with no observation in the prefix get no row") {
  const std::vector<MeasurementRecord> collapsed = {
      record("s1", "10.0.0.1", 5.0),
      record("s2", "192.168.0.1", 9.0),
  };
  const auto x = rttlens::build_ip_matrix(collapsed, *Cidr::parse("10.0.0.0/24"));
  CHECK(x.rows() == 1);
  CHECK(x.row_labels[0].id == "s1");
}

TEST_CASE("unobserved source-destination pairs are masked missing") {
  const std::vector<MeasurementRecord> collapsed = {
      record("s1", "10.0.0.1", 5.0),
      record("s1", "10.0.0.2", 6.0),
      record("s2", "10.0.0.2", 9.0),
  };
  const auto x = rttlens::build_ip_matrix(collapsed, *Cidr::parse("10.0.0.0/24"));
  CHECK(x.mask(1, 0) == static_cast<std::uint8_t>(rttlens::MaskState::Missing));
  CHECK(x.values(1, 0) == 0.0);
  CHECK(x.missing_count() == 1);
}

TEST_CASE("a prefix with no observed destinations is an empty matrix error") {
  const std::vector<MeasurementRecord> collapsed = {record("s1", "10.0.0.1", 5.0)};
  CHECK_THROWS_AS((void)rttlens::build_ip_matrix(collapsed, *Cidr::parse("172.16.0.0/12")),
                  rttlens::EmptyMatrixError);
}

TEST_CASE("prefix aggregation takes the minimum across member destinations") {
  rttlens::PrefixTable table;
  table.insert({*Cidr::parse("10.0.0.0/24"), std::nullopt});
  const std::vector<MeasurementRecord> collapsed = {
      record("s1", "10.0.0.1", 9.1),
      record("s1", "10.0.0.2", 8.7),
      record("s1", "10.0.0.3", 14.0),
  };
  const auto x = rttlens::aggregate_to_prefix(collapsed, table, nullptr, nullptr, 3);
  REQUIRE(x.rows() == 1);
  REQUIRE(x.cols() == 1);
  CHECK(x.level == rttlens::MatrixLevel::prefix);
  CHECK(x.col_labels[0].id == "10.0.0.0/24");
  CHECK(x.values(0, 0) == 8.7);
}

TEST_CASE("prefixes below the distinct-ip threshold are excluded") {
  rttlens::PrefixTable table;
  table.insert({*Cidr::parse("10.0.0.0/24"), std::nullopt});
  table.insert({*Cidr::parse("10.0.1.0/24"), std::nullopt});
  std::vector<MeasurementRecord> collapsed;
  for (int k = 0; k < 9; ++k) {
    collapsed.push_back(record("s1", "10.0.0." + std::to_string(k + 1), 5.0 + k));
  }
  for (int k = 0; k < 10; ++k) {
    collapsed.push_back(record("s1", "10.0.1." + std::to_string(k + 1), 7.0 + k));
  }
  const auto x = rttlens::aggregate_to_prefix(collapsed, table, nullptr, nullptr, 10);
  REQUIRE(x.cols() == 1);
  CHECK(x.col_labels[0].id == "10.0.1.0/24");
  CHECK(x.values(0, 0) == 7.0);
}

TEST_CASE("prefix aggregation matches a brute-force oracle") {
  Rng rng(123);
  rttlens::PrefixTable table;
  const std::vector<std::string> prefixes = {"10.0.0.0/24", "10.0.1.0/24", "192.168.0.0/16"};
  for (const auto& p : prefixes) table.insert({*Cidr::parse(p), std::nullopt});

  std::vector<MeasurementRecord> collapsed;
  for (int s = 0; s < 6; ++s) {
    for (const auto& base : {"10.0.0.", "10.0.1.", "192.168.3."}) {
      for (int h = 1; h <= 4; ++h) {
        if (rng.next_below(4) == 0) continue;  // leave holes
        collapsed.push_back(record("s" + std::to_string(s), base + std::to_string(h),
                                   rng.next_uniform(1.0, 80.0)));
      }
    }
  }

  const auto x = rttlens::aggregate_to_prefix(collapsed, table, nullptr, nullptr, 2);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const auto cidr = *Cidr::parse(x.col_labels[j].id);
      double want = std::numeric_limits<double>::infinity();
      for (const auto& r : collapsed) {
        const auto hit = table.longest_match(r.destination_ip);
        if (r.source_id == x.row_labels[i].id && hit && hit->prefix == cidr) {
          want = std::min(want, r.rtt_ms);
        }
      }
      if (std::isinf(want)) {
        CHECK(x.mask(i, j) == static_cast<std::uint8_t>(rttlens::MaskState::Missing));
      } else {
        CHECK(x.values(i, j) == want);
      }
    }
  }
}

TEST_CASE("interpolation fills a missing cell from its cluster donors") {
  Eigen::MatrixXd values(2, 2);
  values << 0.0, 0.0, 5.0, 4.2;
  auto x = full_matrix(values);
  x.mask(0, 0) = static_cast<std::uint8_t>(rttlens::MaskState::Missing);
  x.mask(0, 1) = static_cast<std::uint8_t>(rttlens::MaskState::Missing);
  x.row_labels[0].tag = tag_of(7, "lyon", "FR");
  x.row_labels[1].tag = tag_of(7, "lyon", "FR");
  x.col_labels[0].tag = tag_of(9, "paris", "FR");
  x.col_labels[1].tag = tag_of(9, "paris", "FR");

  const auto [filled, report] = rttlens::interpolate_missing(x);
  CHECK(report.filled == 2);
  CHECK(report.unfilled.empty());
  CHECK(filled.values(0, 0) == 4.2);  // min over the donors {5.0, 4.2}
  CHECK(filled.values(0, 1) == 4.2);
  CHECK(filled.mask(0, 0) == static_cast<std::uint8_t>(rttlens::MaskState::Interpolated));
  CHECK(filled.values(1, 0) == 5.0);
  CHECK(filled.mask(1, 1) == static_cast<std::uint8_t>(rttlens::MaskState::Observed));
}

TEST_CASE("cells without donors stay missing and are reported") {
  Eigen::MatrixXd values(1, 2);
  values << 0.0, 0.0;
  auto x = full_matrix(values);
  x.mask.setConstant(static_cast<std::uint8_t>(rttlens::MaskState::Missing));
  x.row_labels[0].tag = tag_of(7, "lyon", "FR");
  x.col_labels[0].tag = tag_of(9, "paris", "FR");
  x.col_labels[1].tag = tag_of(9, "paris", "FR");

  const auto [filled, report] = rttlens::interpolate_missing(x);
  CHECK(report.filled == 0);
  REQUIRE(report.unfilled.size() == 2);
  CHECK(filled.missing_count() == 2);
  CHECK(filled.values(0, 0) == 0.0);
}

TEST_CASE("interpolation requires tags on every axis") {
  Eigen::MatrixXd values(2, 1);
  values << 1.0, 0.0;
  auto x = full_matrix(values);
  x.mask(1, 0) = static_cast<std::uint8_t>(rttlens::MaskState::Missing);
  x.row_labels[0].tag = tag_of(7, "lyon", "FR");
  // row 1 and the column stay untagged
  try {
    (void)rttlens::interpolate_missing(x);
    FAIL("expected a tagged-data error");
  } catch (const rttlens::TaggedDataError& e) {
    REQUIRE(e.offending_ids.size() == 2);
    CHECK(e.offending_ids[0] == x.row_labels[1].id);
    CHECK(e.offending_ids[1] == x.col_labels[0].id);
  }
}

TEST_CASE("interpolation never modifies observed cells or adds missing ones") {
  auto spec = test_support::cluster_grid_spec({3, 3, 3, 3}, {3, 3, 3, 3, 3}, 0.4, 5);
  spec.missing_fraction = 0.3;
  const auto [x, truth] = rttlens::generate(spec);

  const auto [filled, report] = rttlens::interpolate_missing(x);
  const auto observed = static_cast<std::uint8_t>(rttlens::MaskState::Observed);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (x.mask(i, j) == observed) {
        CHECK(filled.mask(i, j) == observed);
        CHECK(filled.values(i, j) == x.values(i, j));
      }
    }
  }
  CHECK(filled.missing_count() <= x.missing_count());
  CHECK(report.filled + static_cast<Eigen::Index>(report.unfilled.size()) == x.missing_count());
}

TEST_CASE("fifteen percent missing drops below one percent after interpolation") {
  auto spec = test_support::detour_grid_spec(3);
  spec.missing_fraction = 0.15;
  const auto [x, truth] = rttlens::generate(spec);
  REQUIRE(x.missing_count() == std::llround(0.15 * 47 * 80));

  const auto [filled, report] = rttlens::interpolate_missing(x);
  CHECK(static_cast<double>(filled.missing_count()) <= 0.01 * 47 * 80);
}

TEST_CASE("validate rejects dimension, state, and sentinel violations") {
  auto x = full_matrix(Eigen::MatrixXd::Ones(2, 2));
  CHECK_NOTHROW(x.validate());

  auto bad_shape = x;
  bad_shape.mask.resize(1, 2);
  CHECK_THROWS_AS(bad_shape.validate(), rttlens::InvalidInputError);

  auto bad_state = x;
  bad_state.mask(0, 0) = 3;
  CHECK_THROWS_AS(bad_state.validate(), rttlens::InvalidInputError);

  auto bad_sentinel = x;
  bad_sentinel.mask(0, 0) = static_cast<std::uint8_t>(rttlens::MaskState::Missing);
  CHECK_THROWS_AS(bad_sentinel.validate(), rttlens::InvalidInputError);

  auto bad_value = x;
  bad_value.values(0, 1) = std::nan("");
  CHECK_THROWS_AS(bad_value.validate(), rttlens::InvalidInputError);
}

TEST_CASE("attach tags fills gaps and reports ids without entries") {
  auto x = full_matrix(Eigen::MatrixXd::Ones(2, 1));
  x.col_labels[0].id = "10.2.0.0/24";
  std::istringstream src("source_id,asn,city,country,continent\ns0000,64500,berlin,DE,EU\n");
  const auto sources = rttlens::TagDirectory::load(src);
  std::istringstream dst(
      "prefix_or_ip,asn,city,country,continent\n10.2.0.0/24,20940,paris,FR,EU\n");
  const auto dests = rttlens::DestinationTags::load(dst);

  const auto untagged = rttlens::attach_tags(x, &sources, &dests);
  REQUIRE(untagged.size() == 1);
  CHECK(untagged[0] == "s0001");
  CHECK(x.row_labels[0].tag.has_value());
  CHECK(x.col_labels[0].tag.has_value());
  CHECK_FALSE(x.fully_tagged());
}

TEST_CASE("matrix decomposition rejects negative observed entries") {
  auto x = full_matrix(Eigen::MatrixXd::Ones(3, 3));
  x.values(1, 1) = -4.0;
  CHECK_THROWS_AS((void)rttlens::decompose(x), rttlens::InvalidInputError);
}

TEST_CASE("matrix decomposition reports the masked residual too") {
  auto spec = test_support::cluster_grid_spec({4, 4}, {4, 4, 4}, 0.3, 9);
  spec.missing_fraction = 0.1;
  const auto [x, truth] = rttlens::generate(spec);

  const auto d = rttlens::decompose(x);
  REQUIRE(d.converged);

  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (!rttlens::is_present(x.mask(i, j))) continue;
      const double r = x.values(i, j) - d.L(i, j) - d.S(i, j);
      num += r * r;
      den += x.values(i, j) * x.values(i, j);
    }
  }
  CHECK(std::sqrt(num / den) <= d.residual + 1e-15);
}

}  // TEST_SUITE("delay_matrix")
