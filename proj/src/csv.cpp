#include "cliniq/csv.hpp"

#include <array>
#include <string_view>

#include "cliniq/error.hpp"
#include "cliniq/ioutil.hpp"

namespace cliniq::tabular {

namespace {

struct RawRecord {
  std::vector<std::string> fields;
  size_t start_line;  // 1-based physical line where the record begins
};

[[noreturn]] void fail(const std::string& path, size_t line, const std::string& what) {
  throw Error(errc::csv_error, path + ":" + std::to_string(line) + ": " + what);
}

std::vector<RawRecord> parse_records(const std::string& content, const std::string& path) {
  std::vector<RawRecord> records;
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  bool record_has_content = false;
  size_t line = 1;
  size_t record_start = 1;

  size_t i = 0;
  if (content.size() >= 3 && content.compare(0, 3, "\xef\xbb\xbf") == 0) i = 3;

  auto end_field = [&] {
    fields.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back({std::move(fields), record_start});
    fields.clear();
    record_has_content = false;
  };

  for (; i < content.size(); ++i) {
    char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted) {
          fail(path, line, "quote inside an unquoted field");
        }
        in_quotes = true;
        field_was_quoted = true;
        record_has_content = true;
        break;
      case ',':
        end_field();
        record_has_content = true;
        break;
      case '\r':
        if (i + 1 < content.size() && content[i + 1] == '\n') break;  // CRLF: handled at \n
        if (field_was_quoted) fail(path, line, "content after closing quote");
        field += c;  // lone CR is data
        record_has_content = true;
        break;
      case '\n':
        end_record();
        ++line;
        record_start = line;
        break;
      default:
        if (field_was_quoted) fail(path, line, "content after closing quote");
        field += c;
        record_has_content = true;
        break;
    }
  }
  if (in_quotes) fail(path, record_start, "unterminated quoted field");
  if (record_has_content || !fields.empty()) end_record();
  return records;
}

const std::array<ColumnKind, 4> kInferenceOrder = {
    ColumnKind::integer, ColumnKind::floating, ColumnKind::date, ColumnKind::boolean};

}  // namespace

Table load_csv(const std::string& path, const std::optional<Schema>& schema_hint,
               CsvReadStats* stats) {
  std::string content = read_file(path);
  std::vector<RawRecord> records = parse_records(content, path);
  if (records.empty()) {
    throw Error(errc::csv_error, path + ": no header record");
  }

  const RawRecord& header = records.front();
  Schema schema;
  if (schema_hint) {
    if (schema_hint->arity() != header.fields.size()) {
      fail(path, header.start_line,
           "header has " + std::to_string(header.fields.size()) +
               " columns, schema expects " + std::to_string(schema_hint->arity()));
    }
    for (size_t c = 0; c < header.fields.size(); ++c) {
      if (header.fields[c] != schema_hint->columns[c].name) {
        fail(path, header.start_line,
             "header column " + std::to_string(c + 1) + " is \"" + header.fields[c] +
                 "\", schema expects \"" + schema_hint->columns[c].name + "\"");
      }
    }
    schema = *schema_hint;
  } else {
    for (const std::string& name : header.fields) {
      schema.columns.push_back({name, ColumnKind::text});
    }
  }
  schema.require_valid();

  for (size_t r = 1; r < records.size(); ++r) {
    if (records[r].fields.size() != header.fields.size()) {
      fail(path, records[r].start_line,
           "record has " + std::to_string(records[r].fields.size()) +
               " fields, header has " + std::to_string(header.fields.size()));
    }
  }

  if (!schema_hint) {
    for (size_t c = 0; c < schema.arity(); ++c) {
      std::array<bool, 4> viable = {true, true, true, true};
      bool any_cell = false;
      for (size_t r = 1; r < records.size(); ++r) {
        const std::string& cell = records[r].fields[c];
        if (cell.empty()) continue;
        any_cell = true;
        for (size_t k = 0; k < kInferenceOrder.size(); ++k) {
          if (viable[k] && !parse_cell(cell, kInferenceOrder[k])) viable[k] = false;
        }
      }
      if (any_cell) {
        for (size_t k = 0; k < kInferenceOrder.size(); ++k) {
          if (viable[k]) {
            schema.columns[c].kind = kInferenceOrder[k];
            break;
          }
        }
      }
    }
  }

  Table table;
  table.schema = schema;
  table.rows.reserve(records.size() - 1);
  for (size_t r = 1; r < records.size(); ++r) {
    Row row(schema.arity());
    for (size_t c = 0; c < schema.arity(); ++c) {
      const std::string& cell = records[r].fields[c];
      if (cell.empty()) continue;  // null
      auto v = parse_cell(cell, schema.columns[c].kind);
      if (v) {
        row[c] = std::move(*v);
      } else if (schema_hint) {
        if (stats) ++stats->coercion_warnings;
      } else {
        fail(path, records[r].start_line,
             "cell \"" + cell + "\" does not parse as inferred kind " +
                 kind_name(schema.columns[c].kind));
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (stats) stats->data_rows = table.rows.size();
  return table;
}

namespace {

void append_csv_field(std::string& out, const std::string& text) {
  bool needs_quotes = text.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs_quotes) {
    out += text;
    return;
  }
  out += '"';
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

}  // namespace

std::string csv_to_string(const Table& table) {
  std::string out;
  for (size_t c = 0; c < table.schema.arity(); ++c) {
    if (c) out += ',';
    append_csv_field(out, table.schema.columns[c].name);
  }
  out += '\n';
  for (const Row& row : table.rows) {
    for (size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      append_csv_field(out, to_persisted_text(row[c]));
    }
    out += '\n';
  }
  return out;
}

void write_csv(const Table& table, const std::string& path) {
  write_file_atomic(path, csv_to_string(table));
}

void write_schema_sidecar(const Schema& schema, const std::string& path) {
  std::string out;
  for (const Column& c : schema.columns) {
    out += c.name;
    out += ',';
    out += kind_name(c.kind);
    out += '\n';
  }
  write_file_atomic(path, out);
}

Schema read_schema_sidecar(const std::string& path) {
  std::string content = read_file(path);
  Schema schema;
  size_t pos = 0, line_no = 0;
  while (pos < content.size()) {
    size_t eol = content.find('\n', pos);
    if (eol == std::string::npos) eol = content.size();
    std::string_view line(content.data() + pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    pos = eol + 1;
    if (line.empty()) continue;
    size_t comma = line.rfind(',');
    if (comma == std::string_view::npos || comma == 0) {
      throw Error(errc::schema_error,
                  path + ":" + std::to_string(line_no) + ": expected \"name,kind\"");
    }
    std::string_view name = line.substr(0, comma);
    auto kind = kind_from_name(line.substr(comma + 1));
    if (!kind) {
      throw Error(errc::schema_error,
                  path + ":" + std::to_string(line_no) + ": unknown kind \"" +
                      std::string(line.substr(comma + 1)) + "\"");
    }
    schema.columns.push_back({std::string(name), *kind});
  }
  schema.require_valid();
  return schema;
}

}  // namespace cliniq::tabular
