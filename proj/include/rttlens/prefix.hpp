#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rttlens {

struct Ipv4 {
  std::uint32_t value = 0;

  static std::optional<Ipv4> parse(std::string_view text);
  std::string to_string() const;

  friend auto operator<=>(const Ipv4&, const Ipv4&) = default;
};

/// CIDR block with host bits cleared on construction.
struct Cidr {
  std::uint32_t bits = 0;
  int length = 0;  // 0..32

  static std::optional<Cidr> parse(std::string_view text);
  bool contains(Ipv4 ip) const;
  std::string to_string() const;

  friend auto operator<=>(const Cidr&, const Cidr&) = default;
};

struct PrefixEntry {
  Cidr prefix;
  std::optional<std::uint32_t> origin_asn;
};

/// Longest-prefix-match table over a binary radix trie keyed on prefix bits.
/// Duplicate prefixes collapse to one entry; the last inserted wins.
class PrefixTable {
 public:
  void insert(const PrefixEntry& entry);
  std::optional<PrefixEntry> longest_match(Ipv4 ip) const;

  const std::vector<PrefixEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// One CIDR per line, optional ",origin_asn". Blank lines are skipped;
  /// malformed lines raise a format error naming the line.
  static PrefixTable load(std::istream& in);

 private:
  struct Node {
    std::int32_t child[2] = {-1, -1};
    std::int32_t entry = -1;
  };
  std::vector<Node> nodes_{Node{}};
  std::vector<PrefixEntry> entries_;
  std::map<Cidr, std::size_t> index_;
};

}  // namespace rttlens
