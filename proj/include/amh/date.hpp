#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace amh {

/// Proleptic Gregorian calendar date. Only what the monthly series need:
/// ISO-8601 parsing/formatting, ordering and month-end stepping.
struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  auto operator<=>(const Date&) const = default;

  /// Parses `YYYY-MM-DD`; throws std::invalid_argument on anything else.
  static Date parse(std::string_view text);
  std::string to_string() const;

  bool is_valid() const;
  /// Last day of the month following this date's month.
  Date next_month_end() const;
  /// Days since 1970-01-01.
  long serial() const;
};

int days_in_month(int year, int month);

}  // namespace amh
