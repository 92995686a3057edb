#include "earlywarn/types.hpp"

#include <fmt/format.h>

#include "earlywarn/errors.hpp"

namespace ew {
namespace {

int digits(const std::string& s, std::size_t pos, std::size_t n) {
  if (pos + n > s.size()) throw DomainError("truncated time value '" + s + "'");
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (s[i] < '0' || s[i] > '9') throw DomainError("bad digit in time value '" + s + "'");
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

Date checked_date(int y, int m, int d, const std::string& text) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw DomainError("invalid calendar date '" + text + "'");
  return sys_days{ymd};
}

}  // namespace

Date parse_date(const std::string& text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-')
    throw DomainError("expected YYYY-MM-DD, got '" + text + "'");
  return checked_date(digits(text, 0, 4), digits(text, 5, 2), digits(text, 8, 2), text);
}

Instant parse_instant(const std::string& text) {
  if (text.size() < 20 || text[10] != 'T' || text[13] != ':' || text[16] != ':')
    throw DomainError("expected ISO-8601 timestamp, got '" + text + "'");
  const Date day = parse_date(text.substr(0, 10));
  const int hh = digits(text, 11, 2), mm = digits(text, 14, 2), ss = digits(text, 17, 2);
  if (hh > 23 || mm > 59 || ss > 59) throw DomainError("invalid time of day '" + text + "'");
  Seconds offset{0};
  const std::string zone = text.substr(19);
  if (zone != "Z") {
    if (zone.size() != 6 || (zone[0] != '+' && zone[0] != '-') || zone[3] != ':')
      throw DomainError("unsupported zone designator in '" + text + "'");
    const int oh = digits(zone, 1, 2), om = digits(zone, 4, 2);
    offset = Seconds{(oh * 3600 + om * 60) * (zone[0] == '+' ? 1 : -1)};
  }
  return Instant{day} + Seconds{hh * 3600 + mm * 60 + ss} - offset;
}

std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  return fmt::format("{:04}-{:02}-{:02}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

std::string format_instant(Instant t) {
  const Date d = std::chrono::floor<std::chrono::days>(t);
  const auto secs = (t - Instant{d}).count();
  return fmt::format("{}T{:02}:{:02}:{:02}Z", format_date(d), secs / 3600, (secs / 60) % 60,
                     secs % 60);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c,
                          std::uint64_t d) {
  std::uint64_t s = splitmix64(base);
  for (std::uint64_t v : {a, b, c, d}) s = splitmix64(s ^ splitmix64(v + 0x632be59bd9b4e019ULL));
  return s;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace ew
