#ifndef KERNELCAST_DATES_HPP
#define KERNELCAST_DATES_HPP

#include <cstdint>
#include <string>

namespace kcast {

// Proleptic Gregorian calendar date. Conversions use the classic
// days-from-civil algorithm; day 0 is 1970-01-01.
struct CivilDate {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31

  bool operator==(const CivilDate&) const = default;
  auto operator<=>(const CivilDate&) const = default;
};

std::int64_t days_from_civil(const CivilDate& d);
CivilDate civil_from_days(std::int64_t z);
CivilDate advance(const CivilDate& d, std::int64_t days);

// Monday = 0 .. Sunday = 6.
int weekday_mon0(const CivilDate& d);

std::string format_date(const CivilDate& d);
CivilDate parse_date(const std::string& s);  // "YYYY-MM-DD"

enum class Season { Winter, Spring, Summer, Autumn };
Season season_of_month(int month);  // winter = Jan/Feb/Dec, spring = Mar-May, ...
const char* season_name(Season s);

// One parsed hourly timestamp: the local calendar slot plus the UTC instant.
struct LocalHour {
  CivilDate date;
  int hour = 0;               // local hour-of-day, 0..23
  int offset_minutes = 0;     // UTC offset carried by the timestamp
  std::int64_t utc_epoch_minutes = 0;
};

// ISO-8601 with explicit offset, e.g. "2022-07-17T13:00:00+02:00" (also
// accepts +HHMM, +HH and Z). Throws Err::MalformedRow on anything else.
LocalHour parse_timestamp(const std::string& s);

}  // namespace kcast

#endif
