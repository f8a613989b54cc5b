#include "kernelcast/dates.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

#include "kernelcast/errors.hpp"

namespace kcast {

std::int64_t days_from_civil(const CivilDate& d) {
  std::int64_t y = d.year;
  const int m = d.month;
  const int dd = d.day;
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2) / 5 + dd - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return CivilDate{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

CivilDate advance(const CivilDate& d, std::int64_t days) {
  return civil_from_days(days_from_civil(d) + days);
}

int weekday_mon0(const CivilDate& d) {
  // 1970-01-01 was a Thursday.
  std::int64_t z = days_from_civil(d);
  return static_cast<int>(((z % 7) + 7 + 3) % 7);
}

std::string format_date(const CivilDate& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

namespace {

bool parse_int(const char* begin, const char* end, int& out) {
  auto [p, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && p == end;
}

int days_in_month(int y, int m) {
  static const int dm[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2) {
    bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    return leap ? 29 : 28;
  }
  return dm[m - 1];
}

}  // namespace

CivilDate parse_date(const std::string& s) {
  CivilDate d;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-' ||
      !parse_int(s.data(), s.data() + 4, d.year) ||
      !parse_int(s.data() + 5, s.data() + 7, d.month) ||
      !parse_int(s.data() + 8, s.data() + 10, d.day))
    raise(Err::MalformedRow, "bad date '" + s + "', expected YYYY-MM-DD");
  if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > days_in_month(d.year, d.month))
    raise(Err::MalformedRow, "date out of range: '" + s + "'");
  return d;
}

Season season_of_month(int month) {
  switch (month) {
    case 12: case 1: case 2: return Season::Winter;
    case 3: case 4: case 5: return Season::Spring;
    case 6: case 7: case 8: return Season::Summer;
    default: return Season::Autumn;
  }
}

const char* season_name(Season s) {
  switch (s) {
    case Season::Winter: return "winter";
    case Season::Spring: return "spring";
    case Season::Summer: return "summer";
    case Season::Autumn: return "autumn";
  }
  return "?";
}

LocalHour parse_timestamp(const std::string& s) {
  // YYYY-MM-DDTHH:MM:SS<offset>, offset = Z | +HH:MM | +HHMM | +HH
  if (s.size() < 20 || (s[10] != 'T' && s[10] != ' '))
    raise(Err::MalformedRow, "bad timestamp '" + s + "'");
  LocalHour lh;
  lh.date = parse_date(s.substr(0, 10));
  int minute = 0, second = 0;
  if (s[13] != ':' || s[16] != ':' ||
      !parse_int(s.data() + 11, s.data() + 13, lh.hour) ||
      !parse_int(s.data() + 14, s.data() + 16, minute) ||
      !parse_int(s.data() + 17, s.data() + 19, second))
    raise(Err::MalformedRow, "bad time in '" + s + "'");
  if (lh.hour < 0 || lh.hour > 23 || minute != 0 || second != 0)
    raise(Err::MalformedRow, "timestamp '" + s + "' is not on an hour boundary");

  std::string off = s.substr(19);
  if (off == "Z" || off == "z") {
    lh.offset_minutes = 0;
  } else if ((off[0] == '+' || off[0] == '-') && off.size() >= 3) {
    int oh = 0, om = 0;
    bool ok = parse_int(off.data() + 1, off.data() + 3, oh);
    if (ok && off.size() == 6 && off[3] == ':')
      ok = parse_int(off.data() + 4, off.data() + 6, om);
    else if (ok && off.size() == 5)
      ok = parse_int(off.data() + 3, off.data() + 5, om);
    else if (off.size() != 3)
      ok = false;
    if (!ok || oh > 14 || om > 59)
      raise(Err::MalformedRow, "bad UTC offset in '" + s + "'");
    lh.offset_minutes = (oh * 60 + om) * (off[0] == '-' ? -1 : 1);
  } else {
    raise(Err::MalformedRow, "missing UTC offset in '" + s + "'");
  }
  lh.utc_epoch_minutes =
      (days_from_civil(lh.date) * 24 + lh.hour) * 60 - lh.offset_minutes;
  return lh;
}

}  // namespace kcast
