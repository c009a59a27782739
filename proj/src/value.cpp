#include "cliniq/value.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>

namespace cliniq {

const char* kind_name(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::integer: return "integer";
    case ColumnKind::floating: return "float";
    case ColumnKind::text: return "string";
    case ColumnKind::date: return "date";
    case ColumnKind::boolean: return "boolean";
  }
  return "unknown";
}

std::optional<ColumnKind> kind_from_name(std::string_view name) {
  if (name == "integer") return ColumnKind::integer;
  if (name == "float") return ColumnKind::floating;
  if (name == "string") return ColumnKind::text;
  if (name == "date") return ColumnKind::date;
  if (name == "boolean") return ColumnKind::boolean;
  return std::nullopt;
}

bool integer_literal_shape(std::string_view text) {
  if (!text.empty() && text.front() == '-') text.remove_prefix(1);
  if (text.empty() || text.size() > 19) return false;
  for (char c : text) {
    if (c < '0' || c > '9') return false;
  }
  return text.size() == 1 || text.front() != '0';
}

namespace {

// [-]? ( 0 | [1-9][0-9]* ) ( . [0-9]+ )? ( [eE] [+-]? [0-9]+ )?
// The no-leading-zeros integer part keeps code fields (NDC, ICD9) out of the
// float bucket; the explicit shape keeps from_chars from accepting inf/nan.
bool float_literal_shape(std::string_view text) {
  size_t i = 0;
  auto digit = [&](size_t k) { return k < text.size() && text[k] >= '0' && text[k] <= '9'; };
  if (i < text.size() && text[i] == '-') ++i;
  if (!digit(i)) return false;
  if (text[i] == '0') {
    ++i;
  } else {
    while (digit(i)) ++i;
  }
  if (i < text.size() && text[i] == '.') {
    ++i;
    if (!digit(i)) return false;
    while (digit(i)) ++i;
  }
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) ++i;
    if (!digit(i)) return false;
    while (digit(i)) ++i;
  }
  return i == text.size();
}

bool ci_equal(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    char x = a[i], y = b[i];
    if (x >= 'A' && x <= 'Z') x += 32;
    if (y >= 'A' && y <= 'Z') y += 32;
    if (x != y) return false;
  }
  return true;
}

}  // namespace

std::optional<Value> parse_cell(std::string_view text, ColumnKind kind) {
  switch (kind) {
    case ColumnKind::integer: {
      if (!integer_literal_shape(text)) return std::nullopt;
      int64_t v = 0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || p != text.data() + text.size()) return std::nullopt;
      return Value{v};
    }
    case ColumnKind::floating: {
      if (!float_literal_shape(text)) return std::nullopt;
      double v = 0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || p != text.data() + text.size()) return std::nullopt;
      if (!std::isfinite(v)) return std::nullopt;
      return Value{v};
    }
    case ColumnKind::text:
      return Value{std::string(text)};
    case ColumnKind::date: {
      auto d = Date::parse(text);
      if (!d) return std::nullopt;
      return Value{*d};
    }
    case ColumnKind::boolean: {
      if (ci_equal(text, "true")) return Value{true};
      if (ci_equal(text, "false")) return Value{false};
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::string to_persisted_text(const Value& v) {
  switch (v.index()) {
    case 0: return "";
    case 1: return std::to_string(std::get<int64_t>(v));
    case 2: {
      char buf[32];
      auto [p, ec] = std::to_chars(buf, buf + sizeof buf, std::get<double>(v));
      (void)ec;
      return std::string(buf, p);
    }
    case 3: return std::get<std::string>(v);
    case 4: return std::get<Date>(v).to_string();
    case 5: return std::get<bool>(v) ? "true" : "false";
  }
  return "";
}

std::string render_scalar(const Value& v) {
  switch (v.index()) {
    case 0: return "null";
    case 1: return std::to_string(std::get<int64_t>(v));
    case 2: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.6g", std::get<double>(v));
      if (std::strcmp(buf, "-0") == 0) return "0";
      return buf;
    }
    case 3: return std::get<std::string>(v);
    case 4: return std::get<Date>(v).to_string();
    case 5: return std::get<bool>(v) ? "true" : "false";
  }
  return "";
}

int compare_values(const Value& a, const Value& b) {
  bool an = is_null(a), bn = is_null(b);
  if (an || bn) return an == bn ? 0 : (an ? -1 : 1);

  auto as_double = [](const Value& v) {
    return std::holds_alternative<int64_t>(v)
               ? static_cast<double>(std::get<int64_t>(v))
               : std::get<double>(v);
  };
  bool a_num = std::holds_alternative<int64_t>(a) || std::holds_alternative<double>(a);
  bool b_num = std::holds_alternative<int64_t>(b) || std::holds_alternative<double>(b);
  if (a_num && b_num) {
    if (std::holds_alternative<int64_t>(a) && std::holds_alternative<int64_t>(b)) {
      int64_t x = std::get<int64_t>(a), y = std::get<int64_t>(b);
      return x < y ? -1 : (x > y ? 1 : 0);
    }
    double x = as_double(a), y = as_double(b);
    return x < y ? -1 : (x > y ? 1 : 0);
  }

  if (a.index() != b.index()) return a.index() < b.index() ? -1 : 1;
  switch (a.index()) {
    case 3: {
      int c = std::get<std::string>(a).compare(std::get<std::string>(b));
      return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    case 4: {
      const Date &x = std::get<Date>(a), &y = std::get<Date>(b);
      return x < y ? -1 : (x > y ? 1 : 0);
    }
    case 5: {
      bool x = std::get<bool>(a), y = std::get<bool>(b);
      return x == y ? 0 : (x ? 1 : -1);
    }
  }
  return 0;
}

}  // namespace cliniq
