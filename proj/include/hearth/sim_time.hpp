#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace hearth {

// Simulated wall clock: whole seconds since the Unix epoch, rendered as
// ISO-8601 "YYYY-MM-DDTHH:MM:SS" (UTC, no zone suffix on output; a trailing
// 'Z' is accepted on input).
class SimTime {
 public:
  constexpr SimTime() = default;
  constexpr explicit SimTime(std::int64_t seconds) : seconds_(seconds) {}

  static SimTime parse(std::string_view iso);  // throws Error(ParseError)
  std::string iso() const;

  constexpr std::int64_t seconds() const { return seconds_; }
  int minute_of_day() const;
  SimTime day_start() const;
  SimTime plus_seconds(std::int64_t s) const { return SimTime(seconds_ + s); }

  friend constexpr auto operator<=>(SimTime, SimTime) = default;

 private:
  std::int64_t seconds_ = 0;
};

}  // namespace hearth
