#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "rttlens/prefix.hpp"

namespace rttlens {

enum class Continent : std::uint8_t { AF, AN, AS, EU, NA, OC, SA };

std::optional<Continent> parse_continent(std::string_view code);
std::string_view to_string(Continent c);

/// ISO-3166 alpha-2 -> continent, from the shipped table. Unknown codes map
/// to nullopt; loaders treat those as unverifiable rather than wrong.
std::optional<Continent> continent_of_country(std::string_view alpha2);

struct EndpointTag {
  std::uint32_t asn = 0;
  std::string city;
  std::string country;  // ISO-3166 alpha-2
  Continent continent = Continent::EU;
};

/// Interpolation donors and cluster features group on the (asn, city) pair.
inline bool same_group(const EndpointTag& a, const EndpointTag& b) {
  return a.asn == b.asn && a.city == b.city;
}

/// Source tags keyed by source_id.
/// CSV header: source_id,asn,city,country,continent
struct TagDirectory {
  std::map<std::string, EndpointTag> by_id;

  std::optional<EndpointTag> lookup(const std::string& id) const;
  static TagDirectory load(std::istream& in);
};

/// Destination tags keyed by prefix or bare IP.
/// CSV header: prefix_or_ip,asn,city,country,continent
/// Lookup tries the exact column id first, then longest-prefix match when the
/// id parses as an IPv4 address.
struct DestinationTags {
  std::map<std::string, EndpointTag> exact;
  PrefixTable prefixes;
  std::map<std::string, EndpointTag> by_prefix;  // canonical CIDR string -> tag

  std::optional<EndpointTag> lookup(const std::string& column_id) const;
  static DestinationTags load(std::istream& in);
};

}  // namespace rttlens
