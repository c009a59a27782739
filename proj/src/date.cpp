#include "cliniq/date.hpp"

#include <chrono>
#include <cstdio>

#include "cliniq/error.hpp"

namespace cliniq {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

int to_int(std::string_view s) {
  int v = 0;
  for (char c : s) v = v * 10 + (c - '0');
  return v;
}

std::chrono::year_month_day to_ymd(const Date& d) {
  return std::chrono::year{d.year} / d.month / d.day;
}

}  // namespace

std::optional<Date> Date::parse(std::string_view text) {
  if (text.size() > 10) {
    char sep = text[10];
    if (sep != ' ' && sep != 'T') return std::nullopt;
    text = text.substr(0, 10);
  }
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  std::string_view y = text.substr(0, 4);
  std::string_view m = text.substr(5, 2);
  std::string_view d = text.substr(8, 2);
  if (!all_digits(y) || !all_digits(m) || !all_digits(d)) return std::nullopt;
  Date out{to_int(y), to_int(m), to_int(d)};
  if (!out.valid()) return std::nullopt;
  return out;
}

Date Date::from_days(int64_t days_since_epoch) {
  std::chrono::sys_days sd{std::chrono::days{days_since_epoch}};
  std::chrono::year_month_day ymd{sd};
  return Date{static_cast<int32_t>(static_cast<int>(ymd.year())),
              static_cast<int32_t>(static_cast<unsigned>(ymd.month())),
              static_cast<int32_t>(static_cast<unsigned>(ymd.day()))};
}

int64_t Date::to_days() const {
  return std::chrono::sys_days{to_ymd(*this)}.time_since_epoch().count();
}

bool Date::valid() const {
  if (year < -9999 || year > 9999) return false;
  return to_ymd(*this).ok();
}

std::string Date::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
  return buf;
}

int64_t years_between(const Date& dob, const Date& reference) {
  if (dob > reference) {
    throw Error(errc::exec_negative_age,
                "reference date " + reference.to_string() +
                    " precedes date of birth " + dob.to_string());
  }
  int64_t years = reference.year - dob.year;
  if (reference.month < dob.month ||
      (reference.month == dob.month && reference.day < dob.day)) {
    --years;
  }
  return years;
}

}  // namespace cliniq
