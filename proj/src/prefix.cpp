#include "rttlens/prefix.hpp"

#include <istream>
#include <string>

#include "rttlens/csv.hpp"
#include "rttlens/errors.hpp"

namespace rttlens {

std::optional<Ipv4> Ipv4::parse(std::string_view text) {
  std::uint32_t value = 0;
  int octets = 0;
  std::size_t i = 0;
  while (octets < 4) {
    if (i >= text.size() || text[i] < '0' || text[i] > '9') return std::nullopt;
    std::uint32_t octet = 0;
    std::size_t digits = 0;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9' && digits < 4) {
      octet = octet * 10 + static_cast<std::uint32_t>(text[i] - '0');
      ++i;
      ++digits;
    }
    if (digits > 3 || octet > 255) return std::nullopt;
    value = (value << 8) | octet;
    ++octets;
    if (octets < 4) {
      if (i >= text.size() || text[i] != '.') return std::nullopt;
      ++i;
    }
  }
  if (i != text.size()) return std::nullopt;
  return Ipv4{value};
}

std::string Ipv4::to_string() const {
  std::string out;
  for (int shift = 24; shift >= 0; shift -= 8) {
    if (!out.empty()) out += '.';
    out += std::to_string((value >> shift) & 0xffu);
  }
  return out;
}

std::optional<Cidr> Cidr::parse(std::string_view text) {
  const std::size_t slash = text.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  const auto ip = Ipv4::parse(text.substr(0, slash));
  if (!ip) return std::nullopt;
  const auto len = csv::to_int(text.substr(slash + 1));
  if (!len || *len < 0 || *len > 32) return std::nullopt;
  const int length = static_cast<int>(*len);
  const std::uint32_t mask = length == 0 ? 0u : ~0u << (32 - length);
  return Cidr{ip->value & mask, length};
}

bool Cidr::contains(Ipv4 ip) const {
  const std::uint32_t mask = length == 0 ? 0u : ~0u << (32 - length);
  return (ip.value & mask) == bits;
}

std::string Cidr::to_string() const {
  return Ipv4{bits}.to_string() + '/' + std::to_string(length);
}

void PrefixTable::insert(const PrefixEntry& entry) {
  if (auto it = index_.find(entry.prefix); it != index_.end()) {
    entries_[it->second] = entry;  // duplicate prefix: last wins
    return;
  }
  std::int32_t node = 0;
  for (int depth = 0; depth < entry.prefix.length; ++depth) {
    const int bit = (entry.prefix.bits >> (31 - depth)) & 1;
    if (nodes_[node].child[bit] < 0) {
      nodes_[node].child[bit] = static_cast<std::int32_t>(nodes_.size());
      nodes_.emplace_back();
    }
    node = nodes_[node].child[bit];
  }
  nodes_[node].entry = static_cast<std::int32_t>(entries_.size());
  index_.emplace(entry.prefix, entries_.size());
  entries_.push_back(entry);
}

std::optional<PrefixEntry> PrefixTable::longest_match(Ipv4 ip) const {
  std::int32_t best = -1;
  std::int32_t node = 0;
  for (int depth = 0; depth <= 32; ++depth) {
    if (nodes_[node].entry >= 0) best = nodes_[node].entry;
    if (depth == 32) break;
    const int bit = (ip.value >> (31 - depth)) & 1;
    node = nodes_[node].child[bit];
    if (node < 0) break;
  }
  if (best < 0) return std::nullopt;
  return entries_[best];
}

PrefixTable PrefixTable::load(std::istream& in) {
  if (!in) throw IoError("prefix table: unreadable input");
  PrefixTable table;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string_view trimmed = csv::trim(line);
    if (trimmed.empty()) continue;
    const auto fields = csv::split_line(trimmed);
    if (fields.size() > 2) {
      throw FormatError("prefix table line " + std::to_string(line_number) +
                        ": expected CIDR with optional origin ASN");
    }
    const auto cidr = Cidr::parse(fields[0]);
    if (!cidr) {
      throw FormatError("prefix table line " + std::to_string(line_number) + ": invalid CIDR '" +
                        fields[0] + "'");
    }
    PrefixEntry entry{*cidr, std::nullopt};
    if (fields.size() == 2 && !fields[1].empty()) {
      const auto asn = csv::to_int(fields[1]);
      if (!asn || *asn <= 0 || *asn > 0xffffffffLL) {
        throw FormatError("prefix table line " + std::to_string(line_number) +
                          ": invalid origin ASN '" + fields[1] + "'");
      }
      entry.origin_asn = static_cast<std::uint32_t>(*asn);
    }
    table.insert(entry);
  }
  return table;
}

}  // namespace rttlens
