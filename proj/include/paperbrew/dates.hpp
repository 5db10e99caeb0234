#pragma once

#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

// Calendar helpers over ISO-8601 date strings ("YYYY-MM-DD") and month
// labels ("YYYY-MM"). Both forms sort lexicographically in chronological
// order, so string comparison doubles as date comparison throughout.

namespace paperbrew {

struct Date {
  int year = 0;
  int month = 0;  // 1..12
  int day = 0;    // 1..31

  auto operator<=>(const Date&) const = default;
};

inline bool is_leap_year(int y) {
  return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

inline int days_in_month(int year, int month) {
  static const int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month == 2 && is_leap_year(year)) return 29;
  return lengths[month - 1];
}

inline bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

inline std::optional<Date> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  if (!all_digits(s.substr(0, 4)) || !all_digits(s.substr(5, 2)) ||
      !all_digits(s.substr(8, 2)))
    return std::nullopt;
  Date d;
  d.year = std::stoi(std::string(s.substr(0, 4)));
  d.month = std::stoi(std::string(s.substr(5, 2)));
  d.day = std::stoi(std::string(s.substr(8, 2)));
  if (d.month < 1 || d.month > 12) return std::nullopt;
  if (d.day < 1 || d.day > days_in_month(d.year, d.month)) return std::nullopt;
  return d;
}

inline std::string format_date(const Date& d) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

inline bool is_valid_date(std::string_view s) { return parse_date(s).has_value(); }

// "YYYY-MM" labels.
inline std::optional<int> parse_month_index(std::string_view s) {
  if (s.size() != 7 || s[4] != '-') return std::nullopt;
  if (!all_digits(s.substr(0, 4)) || !all_digits(s.substr(5, 2))) return std::nullopt;
  int y = std::stoi(std::string(s.substr(0, 4)));
  int m = std::stoi(std::string(s.substr(5, 2)));
  if (m < 1 || m > 12) return std::nullopt;
  return y * 12 + (m - 1);
}

inline bool is_valid_month(std::string_view s) { return parse_month_index(s).has_value(); }

inline std::string month_from_index(int idx) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", idx / 12, idx % 12 + 1);
  return buf;
}

inline int month_index_or_throw(std::string_view label) {
  auto idx = parse_month_index(label);
  if (!idx) throw std::invalid_argument("bad month label: " + std::string(label));
  return *idx;
}

inline std::string add_months(std::string_view label, int delta) {
  return month_from_index(month_index_or_throw(label) + delta);
}

// b - a in calendar months.
inline int months_between(std::string_view a, std::string_view b) {
  return month_index_or_throw(b) - month_index_or_throw(a);
}

inline std::string month_of(std::string_view date) { return std::string(date.substr(0, 7)); }

inline std::string first_day_of_month(std::string_view month_label) {
  return std::string(month_label) + "-01";
}

inline std::string last_day_of_month(std::string_view month_label) {
  int idx = month_index_or_throw(month_label);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", idx / 12, idx % 12 + 1,
                days_in_month(idx / 12, idx % 12 + 1));
  return buf;
}

// Days since 1970-01-01 (Hinnant's civil-date algorithm).
inline long days_from_civil(const Date& d) {
  int y = d.year - (d.month <= 2 ? 1 : 0);
  long era = (y >= 0 ? y : y - 399) / 400;
  unsigned yoe = static_cast<unsigned>(y - era * 400);
  unsigned doy =
      (153u * static_cast<unsigned>(d.month + (d.month > 2 ? -3 : 9)) + 2) / 5 +
      static_cast<unsigned>(d.day) - 1;
  unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

// 0 = Monday .. 6 = Sunday.
inline int weekday_of(const Date& d) {
  long days = days_from_civil(d);  // 1970-01-01 was a Thursday
  return static_cast<int>(((days % 7) + 7 + 3) % 7);
}

inline bool is_weekend(const Date& d) { return weekday_of(d) >= 5; }

inline Date next_day(Date d) {
  if (++d.day > days_in_month(d.year, d.month)) {
    d.day = 1;
    if (++d.month > 12) {
      d.month = 1;
      ++d.year;
    }
  }
  return d;
}

}  // namespace paperbrew
