#include "common/time.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

#include "common/error.hpp"

namespace facekey {

namespace {

bool read_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > text.size()) return false;
  auto first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, out);
  return ec == std::errc{} && ptr == first + len;
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  if (!text.empty() && text.find_first_not_of("-0123456789") == std::string_view::npos) {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec == std::errc{} && ptr == text.data() + text.size()) return Timestamp{value};
  }
  int year, month, day, hour, minute, second;
  bool ok = text.size() == 20 && text[4] == '-' && text[7] == '-' && text[10] == 'T' &&
            text[13] == ':' && text[16] == ':' && text[19] == 'Z' &&
            read_int(text, 0, 4, year) && read_int(text, 5, 2, month) &&
            read_int(text, 8, 2, day) && read_int(text, 11, 2, hour) &&
            read_int(text, 14, 2, minute) && read_int(text, 17, 2, second);
  if (!ok || hour > 23 || minute > 59 || second > 59) {
    fail(ErrorCode::InvalidArgument, "invalid UTC timestamp '" + std::string(text) + "'");
  }
  using namespace std::chrono;
  year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                     std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok()) {
    fail(ErrorCode::InvalidArgument, "invalid calendar date '" + std::string(text) + "'");
  }
  auto days = sys_days{ymd}.time_since_epoch().count();
  return Timestamp{static_cast<std::int64_t>(days) * 86400 + hour * 3600 + minute * 60 + second};
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  std::int64_t days = ts.seconds / 86400;
  std::int64_t rem = ts.seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                static_cast<int>(rem % 60));
  return buf;
}

}  // namespace facekey
