#pragma once

#include <optional>
#include <string>

#include "cliniq/table.hpp"

namespace cliniq::tabular {

struct CsvReadStats {
  size_t data_rows = 0;
  // Cells that failed to parse under a hinted kind and were read as null.
  size_t coercion_warnings = 0;
};

// RFC-4180 reader: quoted fields, "" escapes, embedded newlines and commas,
// LF or CRLF records, UTF-8 content, optional BOM. First record is the
// header. Without a schema hint, column kinds are inferred over the data
// cells with precedence integer > float > date > boolean > string; a column
// whose non-empty cells all parse as an earlier kind gets that kind. Empty
// cells (quoted or not) are null. With a hint, header names must match the
// hint exactly and unparseable cells become null (counted in stats).
//
// Errors (errc::io_error / errc::csv_error) name the path and, for ragged
// rows or quoting problems, the 1-based line where the record starts.
Table load_csv(const std::string& path,
               const std::optional<Schema>& schema_hint = std::nullopt,
               CsvReadStats* stats = nullptr);

void write_csv(const Table& table, const std::string& path);
std::string csv_to_string(const Table& table);

// Sidecar schema file: one "name,kind" line per column, in order.
void write_schema_sidecar(const Schema& schema, const std::string& path);
Schema read_schema_sidecar(const std::string& path);

}  // namespace cliniq::tabular
