#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cliniq/value.hpp"

namespace cliniq {

struct Column {
  std::string name;
  ColumnKind kind;
  bool operator==(const Column&) const = default;
};

struct Schema {
  std::vector<Column> columns;

  size_t arity() const { return columns.size(); }
  std::optional<size_t> index_of(std::string_view name) const;
  bool contains(std::string_view name) const { return index_of(name).has_value(); }

  // Throws Error(errc::schema_error) on empty or duplicate column names.
  void require_valid() const;

  bool operator==(const Schema&) const = default;
};

using Row = std::vector<Value>;

// Tables are immutable by convention: every operation takes const& and
// returns a fresh Table.
struct Table {
  Schema schema;
  std::vector<Row> rows;

  size_t row_count() const { return rows.size(); }
  size_t column_count() const { return schema.arity(); }

  // Schema validity plus per-row arity. Throws Error(errc::schema_error).
  void require_valid() const;
};

}  // namespace cliniq
