#include "cliniq/table.hpp"

#include <unordered_set>

#include "cliniq/error.hpp"

namespace cliniq {

std::optional<size_t> Schema::index_of(std::string_view name) const {
  for (size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  return std::nullopt;
}

void Schema::require_valid() const {
  std::unordered_set<std::string_view> seen;
  for (const Column& c : columns) {
    if (c.name.empty()) {
      throw Error(errc::schema_error, "schema has an empty column name");
    }
    if (!seen.insert(c.name).second) {
      throw Error(errc::schema_error, "duplicate column name \"" + c.name + "\"");
    }
  }
}

void Table::require_valid() const {
  schema.require_valid();
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != schema.arity()) {
      throw Error(errc::schema_error,
                  "row " + std::to_string(i) + " has " +
                      std::to_string(rows[i].size()) + " cells, schema has " +
                      std::to_string(schema.arity()));
    }
  }
}

}  // namespace cliniq
