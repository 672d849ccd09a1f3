#include "rttlens/tags.hpp"

#include <algorithm>
#include <array>
#include <istream>
#include <utility>

#include "rttlens/csv.hpp"
#include "rttlens/errors.hpp"

namespace rttlens {

namespace {

struct CountryRow {
  const char* code;
  Continent continent;
};

// ISO-3166 alpha-2, sorted; continental assignment follows the common
// geodata convention (transcontinental countries take their conventional
// single continent, e.g. RU -> EU, TR -> AS).
constexpr std::array<CountryRow, 250> kCountryTable{{
    {"AD", Continent::EU}, {"AE", Continent::AS}, {"AF", Continent::AS}, {"AG", Continent::NA},
    {"AI", Continent::NA}, {"AL", Continent::EU}, {"AM", Continent::AS}, {"AO", Continent::AF},
    {"AQ", Continent::AN}, {"AR", Continent::SA}, {"AS", Continent::OC}, {"AT", Continent::EU},
    {"AU", Continent::OC}, {"AW", Continent::NA}, {"AX", Continent::EU}, {"AZ", Continent::AS},
    {"BA", Continent::EU}, {"BB", Continent::NA}, {"BD", Continent::AS}, {"BE", Continent::EU},
    {"BF", Continent::AF}, {"BG", Continent::EU}, {"BH", Continent::AS}, {"BI", Continent::AF},
    {"BJ", Continent::AF}, {"BL", Continent::NA}, {"BM", Continent::NA}, {"BN", Continent::AS},
    {"BO", Continent::SA}, {"BQ", Continent::NA}, {"BR", Continent::SA}, {"BS", Continent::NA},
    {"BT", Continent::AS}, {"BV", Continent::AN}, {"BW", Continent::AF}, {"BY", Continent::EU},
    {"BZ", Continent::NA}, {"CA", Continent::NA}, {"CC", Continent::AS}, {"CD", Continent::AF},
    {"CF", Continent::AF}, {"CG", Continent::AF}, {"CH", Continent::EU}, {"CI", Continent::AF},
    {"CK", Continent::OC}, {"CL", Continent::SA}, {"CM", Continent::AF}, {"CN", Continent::AS},
    {"CO", Continent::SA}, {"CR", Continent::NA}, {"CU", Continent::NA}, {"CV", Continent::AF},
    {"CW", Continent::NA}, {"CX", Continent::AS}, {"CY", Continent::EU}, {"CZ", Continent::EU},
    {"DE", Continent::EU}, {"DJ", Continent::AF}, {"DK", Continent::EU}, {"DM", Continent::NA},
    {"DO", Continent::NA}, {"DZ", Continent::AF}, {"EC", Continent::SA}, {"EE", Continent::EU},
    {"EG", Continent::AF}, {"EH", Continent::AF}, {"ER", Continent::AF}, {"ES", Continent::EU},
    {"ET", Continent::AF}, {"FI", Continent::EU}, {"FJ", Continent::OC}, {"FK", Continent::SA},
    {"FM", Continent::OC}, {"FO", Continent::EU}, {"FR", Continent::EU}, {"GA", Continent::AF},
    {"GB", Continent::EU}, {"GD", Continent::NA}, {"GE", Continent::AS}, {"GF", Continent::SA},
    {"GG", Continent::EU}, {"GH", Continent::AF}, {"GI", Continent::EU}, {"GL", Continent::NA},
    {"GM", Continent::AF}, {"GN", Continent::AF}, {"GP", Continent::NA}, {"GQ", Continent::AF},
    {"GR", Continent::EU}, {"GS", Continent::AN}, {"GT", Continent::NA}, {"GU", Continent::OC},
    {"GW", Continent::AF}, {"GY", Continent::SA}, {"HK", Continent::AS}, {"HM", Continent::AN},
    {"HN", Continent::NA}, {"HR", Continent::EU}, {"HT", Continent::NA}, {"HU", Continent::EU},
    {"ID", Continent::AS}, {"IE", Continent::EU}, {"IL", Continent::AS}, {"IM", Continent::EU},
    {"IN", Continent::AS}, {"IO", Continent::AS}, {"IQ", Continent::AS}, {"IR", Continent::AS},
    {"IS", Continent::EU}, {"IT", Continent::EU}, {"JE", Continent::EU}, {"JM", Continent::NA},
    {"JO", Continent::AS}, {"JP", Continent::AS}, {"KE", Continent::AF}, {"KG", Continent::AS},
    {"KH", Continent::AS}, {"KI", Continent::OC}, {"KM", Continent::AF}, {"KN", Continent::NA},
    {"KP", Continent::AS}, {"KR", Continent::AS}, {"KW", Continent::AS}, {"KY", Continent::NA},
    {"KZ", Continent::AS}, {"LA", Continent::AS}, {"LB", Continent::AS}, {"LC", Continent::NA},
    {"LI", Continent::EU}, {"LK", Continent::AS}, {"LR", Continent::AF}, {"LS", Continent::AF},
    {"LT", Continent::EU}, {"LU", Continent::EU}, {"LV", Continent::EU}, {"LY", Continent::AF},
    {"MA", Continent::AF}, {"MC", Continent::EU}, {"MD", Continent::EU}, {"ME", Continent::EU},
    {"MF", Continent::NA}, {"MG", Continent::AF}, {"MH", Continent::OC}, {"MK", Continent::EU},
    {"ML", Continent::AF}, {"MM", Continent::AS}, {"MN", Continent::AS}, {"MO", Continent::AS},
    {"MP", Continent::OC}, {"MQ", Continent::NA}, {"MR", Continent::AF}, {"MS", Continent::NA},
    {"MT", Continent::EU}, {"MU", Continent::AF}, {"MV", Continent::AS}, {"MW", Continent::AF},
    {"MX", Continent::NA}, {"MY", Continent::AS}, {"MZ", Continent::AF}, {"NA", Continent::AF},
    {"NC", Continent::OC}, {"NE", Continent::AF}, {"NF", Continent::OC}, {"NG", Continent::AF},
    {"NI", Continent::NA}, {"NL", Continent::EU}, {"NO", Continent::EU}, {"NP", Continent::AS},
    {"NR", Continent::OC}, {"NU", Continent::OC}, {"NZ", Continent::OC}, {"OM", Continent::AS},
    {"PA", Continent::NA}, {"PE", Continent::SA}, {"PF", Continent::OC}, {"PG", Continent::OC},
    {"PH", Continent::AS}, {"PK", Continent::AS}, {"PL", Continent::EU}, {"PM", Continent::NA},
    {"PN", Continent::OC}, {"PR", Continent::NA}, {"PS", Continent::AS}, {"PT", Continent::EU},
    {"PW", Continent::OC}, {"PY", Continent::SA}, {"QA", Continent::AS}, {"RE", Continent::AF},
    {"RO", Continent::EU}, {"RS", Continent::EU}, {"RU", Continent::EU}, {"RW", Continent::AF},
    {"SA", Continent::AS}, {"SB", Continent::OC}, {"SC", Continent::AF}, {"SD", Continent::AF},
    {"SE", Continent::EU}, {"SG", Continent::AS}, {"SH", Continent::AF}, {"SI", Continent::EU},
    {"SJ", Continent::EU}, {"SK", Continent::EU}, {"SL", Continent::AF}, {"SM", Continent::EU},
    {"SN", Continent::AF}, {"SO", Continent::AF}, {"SR", Continent::SA}, {"SS", Continent::AF},
    {"ST", Continent::AF}, {"SV", Continent::NA}, {"SX", Continent::NA}, {"SY", Continent::AS},
    {"SZ", Continent::AF}, {"TC", Continent::NA}, {"TD", Continent::AF}, {"TF", Continent::AN},
    {"TG", Continent::AF}, {"TH", Continent::AS}, {"TJ", Continent::AS}, {"TK", Continent::OC},
    {"TL", Continent::OC}, {"TM", Continent::AS}, {"TN", Continent::AF}, {"TO", Continent::OC},
    {"TR", Continent::AS}, {"TT", Continent::NA}, {"TV", Continent::OC}, {"TW", Continent::AS},
    {"TZ", Continent::AF}, {"UA", Continent::EU}, {"UG", Continent::AF}, {"UM", Continent::OC},
    {"US", Continent::NA}, {"UY", Continent::SA}, {"UZ", Continent::AS}, {"VA", Continent::EU},
    {"VC", Continent::NA}, {"VE", Continent::SA}, {"VG", Continent::NA}, {"VI", Continent::NA},
    {"VN", Continent::AS}, {"VU", Continent::OC}, {"WF", Continent::OC}, {"WS", Continent::OC},
    {"XK", Continent::EU}, {"YE", Continent::AS}, {"YT", Continent::AF}, {"ZA", Continent::AF},
    {"ZM", Continent::AF}, {"ZW", Continent::AF},
}};

constexpr std::array<std::pair<const char*, Continent>, 7> kContinentCodes{{
    {"AF", Continent::AF},
    {"AN", Continent::AN},
    {"AS", Continent::AS},
    {"EU", Continent::EU},
    {"NA", Continent::NA},
    {"OC", Continent::OC},
    {"SA", Continent::SA},
}};

EndpointTag parse_tag_fields(const std::vector<std::string>& fields, std::size_t offset,
                             std::size_t line_number, const char* context) {
  const auto fail = [&](const std::string& what) -> void {
    throw FormatError(std::string(context) + " line " + std::to_string(line_number) + ": " + what);
  };
  EndpointTag tag;
  const auto asn = csv::to_int(fields[offset]);
  if (!asn || *asn <= 0 || *asn > 0xffffffffLL) fail("invalid asn '" + fields[offset] + "'");
  tag.asn = static_cast<std::uint32_t>(*asn);
  tag.city = fields[offset + 1];
  if (tag.city.empty()) fail("empty city");
  tag.country = fields[offset + 2];
  const auto country_continent = continent_of_country(tag.country);
  if (!country_continent) fail("unknown country code '" + tag.country + "'");
  const auto continent = parse_continent(fields[offset + 3]);
  if (!continent) fail("invalid continent '" + fields[offset + 3] + "'");
  if (*continent != *country_continent) {
    fail("continent " + std::string(to_string(*continent)) + " does not match country " +
         tag.country + " (" + std::string(to_string(*country_continent)) + ")");
  }
  tag.continent = *continent;
  return tag;
}

void require_header(std::istream& in, const char* expected, const char* context) {
  if (!in) throw IoError(std::string(context) + ": unreadable input");
  std::string line;
  if (!std::getline(in, line)) throw FormatError(std::string(context) + ": empty input");
  if (csv::trim(line) != expected) {
    throw FormatError(std::string(context) + ": expected header '" + expected + "'");
  }
}

}  // namespace

std::optional<Continent> parse_continent(std::string_view code) {
  for (const auto& [name, c] : kContinentCodes) {
    if (code == name) return c;
  }
  return std::nullopt;
}

std::string_view to_string(Continent c) {
  return kContinentCodes[static_cast<std::size_t>(c)].first;
}

std::optional<Continent> continent_of_country(std::string_view alpha2) {
  const auto it = std::lower_bound(
      kCountryTable.begin(), kCountryTable.end(), alpha2,
      [](const CountryRow& row, std::string_view key) { return std::string_view(row.code) < key; });
  if (it == kCountryTable.end() || std::string_view(it->code) != alpha2) return std::nullopt;
  return it->continent;
}

std::optional<EndpointTag> TagDirectory::lookup(const std::string& id) const {
  const auto it = by_id.find(id);
  if (it == by_id.end()) return std::nullopt;
  return it->second;
}

TagDirectory TagDirectory::load(std::istream& in) {
  require_header(in, "source_id,asn,city,country,continent", "source tags");
  TagDirectory dir;
  std::string line;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split_line(line);
    if (fields.size() != 5) {
      throw FormatError("source tags line " + std::to_string(line_number) + ": expected 5 fields");
    }
    if (fields[0].empty()) {
      throw FormatError("source tags line " + std::to_string(line_number) + ": empty source_id");
    }
    const EndpointTag tag = parse_tag_fields(fields, 1, line_number, "source tags");
    if (!dir.by_id.emplace(fields[0], tag).second) {
      throw FormatError("source tags line " + std::to_string(line_number) + ": duplicate id '" +
                        fields[0] + "'");
    }
  }
  return dir;
}

std::optional<EndpointTag> DestinationTags::lookup(const std::string& column_id) const {
  if (const auto it = exact.find(column_id); it != exact.end()) return it->second;
  if (const auto cidr = Cidr::parse(column_id)) {
    if (const auto it = by_prefix.find(cidr->to_string()); it != by_prefix.end()) {
      return it->second;
    }
  }
  if (const auto ip = Ipv4::parse(column_id)) {
    if (const auto entry = prefixes.longest_match(*ip)) {
      if (const auto it = by_prefix.find(entry->prefix.to_string()); it != by_prefix.end()) {
        return it->second;
      }
    }
  }
  return std::nullopt;
}

DestinationTags DestinationTags::load(std::istream& in) {
  require_header(in, "prefix_or_ip,asn,city,country,continent", "destination tags");
  DestinationTags tags;
  std::string line;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split_line(line);
    if (fields.size() != 5) {
      throw FormatError("destination tags line " + std::to_string(line_number) +
                        ": expected 5 fields");
    }
    const EndpointTag tag = parse_tag_fields(fields, 1, line_number, "destination tags");
    const std::string& key = fields[0];
    if (const auto cidr = Cidr::parse(key)) {
      tags.prefixes.insert(PrefixEntry{*cidr, tag.asn});
      tags.by_prefix[cidr->to_string()] = tag;
    } else if (!Ipv4::parse(key)) {
      throw FormatError("destination tags line " + std::to_string(line_number) +
                        ": '" + key + "' is neither a CIDR prefix nor an IPv4 address");
    }
    tags.exact[key] = tag;
  }
  return tags;
}

}  // namespace rttlens
