#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace facekey {

// UTC instant with one-second resolution. Every timestamp enters the system
// from a request, manifest or test; nothing here reads the wall clock.
struct Timestamp {
  std::int64_t seconds = 0;

  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

// Accepts "YYYY-MM-DDTHH:MM:SSZ" or a plain integer of epoch seconds.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);

}  // namespace facekey
