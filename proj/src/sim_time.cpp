#include "hearth/sim_time.hpp"

#include <chrono>
#include <cstdio>

#include <fmt/format.h>

#include "hearth/error.hpp"

namespace hearth {

namespace {

constexpr std::int64_t kDay = 86400;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

SimTime SimTime::parse(std::string_view iso) {
  if (!iso.empty() && iso.back() == 'Z') iso.remove_suffix(1);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char tail = 0;
  const std::string buf(iso);
  if (buf.size() != 19 ||
      std::sscanf(buf.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &y, &mo, &d, &h, &mi, &s, &tail) != 6) {
    throw Error(Errc::ParseError, "bad ISO-8601 timestamp '" + buf + "'");
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) {
    throw Error(Errc::ParseError, "timestamp out of range '" + buf + "'");
  }
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return SimTime(static_cast<std::int64_t>(days) * kDay + h * 3600 + mi * 60 + s);
}

std::string SimTime::iso() const {
  using namespace std::chrono;
  const std::int64_t days = floor_div(seconds_, kDay);
  const std::int64_t rem = seconds_ - days * kDay;
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), rem / 3600,
                     (rem % 3600) / 60, rem % 60);
}

int SimTime::minute_of_day() const {
  const std::int64_t rem = seconds_ - floor_div(seconds_, kDay) * kDay;
  return static_cast<int>(rem / 60);
}

SimTime SimTime::day_start() const { return SimTime(floor_div(seconds_, kDay) * kDay); }

}  // namespace hearth
