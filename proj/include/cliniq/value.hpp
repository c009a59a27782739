#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "cliniq/date.hpp"

namespace cliniq {

enum class ColumnKind { integer, floating, text, date, boolean };

// Canonical kind names: "integer", "float", "string", "date", "boolean".
const char* kind_name(ColumnKind kind);
std::optional<ColumnKind> kind_from_name(std::string_view name);

// One cell. monostate encodes null.
using Value = std::variant<std::monostate, int64_t, double, std::string, Date, bool>;

inline bool is_null(const Value& v) {
  return std::holds_alternative<std::monostate>(v);
}

// Strict per-kind cell parse; nullopt when the text is not of that kind.
// Callers decide what a failed parse means (inference vs. null-with-warning).
std::optional<Value> parse_cell(std::string_view text, ColumnKind kind);

// Integer literal shape used by type inference: optional '-', then "0" or a
// nonzero-leading digit run. Rejecting leading zeros keeps code fields
// (NDC, ICD9) as strings.
bool integer_literal_shape(std::string_view text);

// Exact text for CSV/JSON persistence; floats use shortest round-trip form.
std::string to_persisted_text(const Value& v);

// Canonical scalar rendering for answers: integers bare, floats with up to
// six significant digits and no trailing zeros, dates ISO-8601, booleans
// true/false.
std::string render_scalar(const Value& v);

// Total order used by sort, min/max and group keys: null before everything;
// int and float compare numerically; otherwise values of different kinds
// order by variant index. Returns <0, 0, >0.
int compare_values(const Value& a, const Value& b);

inline bool values_equal(const Value& a, const Value& b) {
  return compare_values(a, b) == 0;
}

struct ValueLess {
  bool operator()(const Value& a, const Value& b) const {
    return compare_values(a, b) < 0;
  }
};

}  // namespace cliniq
