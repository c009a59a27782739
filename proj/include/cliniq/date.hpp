#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace cliniq {

// Proleptic Gregorian calendar date. Arithmetic and uniform sampling go
// through days-since-1970-01-01.
struct Date {
  int32_t year = 1970;
  int32_t month = 1;  // 1..12
  int32_t day = 1;    // 1..31, must exist in the month

  // Accepts "YYYY-MM-DD"; a trailing " hh:mm:ss" or "Thh:mm:ss" part is
  // truncated (clinical exports carry timestamps in date columns).
  // Returns nullopt for anything malformed or not a real calendar date.
  static std::optional<Date> parse(std::string_view text);

  static Date from_days(int64_t days_since_epoch);
  int64_t to_days() const;

  bool valid() const;
  std::string to_string() const;  // ISO-8601, zero-padded

  auto operator<=>(const Date&) const = default;
};

// Completed calendar years from dob to reference: year difference, minus one
// when the reference month/day falls before the dob month/day. Throws
// Error(errc::exec_negative_age) when dob is after reference.
int64_t years_between(const Date& dob, const Date& reference);

}  // namespace cliniq
