#include "cliniq/cohort.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "cliniq/error.hpp"
#include "cliniq/rng.hpp"

namespace cliniq::tabular {

namespace {

size_t require_column(const Table& t, const std::string& name, const std::string& role) {
  auto idx = t.schema.index_of(name);
  if (!idx) {
    throw Error(errc::schema_error, role + " table has no " + name + " column");
  }
  return *idx;
}

// First free name among base, base_2, base_3, ...
std::string disambiguate(const Schema& schema, const std::string& base) {
  if (!schema.contains(base)) return base;
  for (int k = 2;; ++k) {
    std::string candidate = base + "_" + std::to_string(k);
    if (!schema.contains(candidate)) return candidate;
  }
}

}  // namespace

Table sample_cohort(const Table& patients, const CohortConfig& cfg) {
  size_t key = require_column(patients, "SUBJECT_ID", "patients");

  std::map<Value, size_t, ValueLess> seen;
  for (size_t r = 0; r < patients.rows.size(); ++r) {
    auto [it, inserted] = seen.emplace(patients.rows[r][key], r);
    if (!inserted) {
      throw Error(errc::data_error,
                  "duplicate SUBJECT_ID " + render_scalar(patients.rows[r][key]) +
                      " at rows " + std::to_string(it->second) + " and " +
                      std::to_string(r));
    }
  }

  Table out;
  out.schema = patients.schema;
  if (patients.rows.size() <= cfg.n_patients) {
    out.rows = patients.rows;
    return out;
  }

  // Seeded partial Fisher-Yates picks the subjects; emission keeps input order.
  SplitMix64 rng(cfg.seed);
  std::vector<size_t> indices(patients.rows.size());
  std::iota(indices.begin(), indices.end(), size_t{0});
  for (size_t i = 0; i < cfg.n_patients; ++i) {
    size_t j = i + rng.below(indices.size() - i);
    std::swap(indices[i], indices[j]);
  }
  indices.resize(cfg.n_patients);
  std::sort(indices.begin(), indices.end());

  out.rows.reserve(cfg.n_patients);
  for (size_t idx : indices) out.rows.push_back(patients.rows[idx]);
  return out;
}

Table synthesize_dob(const Table& table, const CohortConfig& cfg) {
  if (table.rows.empty()) {
    throw Error(errc::data_error, "cannot synthesize dates for an empty table");
  }
  if (table.schema.contains(cfg.dob_column_name)) {
    throw Error(errc::schema_error,
                "column \"" + cfg.dob_column_name + "\" already exists");
  }
  int64_t lo = cfg.dob_start.to_days();
  int64_t hi = cfg.dob_end.to_days();
  if (lo > hi) {
    throw Error(errc::data_error, "date range start " + cfg.dob_start.to_string() +
                                      " is after end " + cfg.dob_end.to_string());
  }

  SplitMix64 rng(cfg.seed);
  uint64_t span = static_cast<uint64_t>(hi - lo) + 1;

  Table out;
  out.schema = table.schema;
  out.schema.columns.push_back({cfg.dob_column_name, ColumnKind::date});
  out.rows.reserve(table.rows.size());
  for (const Row& row : table.rows) {
    Row next = row;
    next.emplace_back(Date::from_days(lo + static_cast<int64_t>(rng.below(span))));
    out.rows.push_back(std::move(next));
  }
  return out;
}

Table left_join(const Table& left, const Table& right, const std::string& key) {
  size_t lk = require_column(left, key, "left");
  size_t rk = require_column(right, key, "right");
  if (left.schema.columns[lk].kind != right.schema.columns[rk].kind) {
    throw Error(errc::data_error,
                "join key " + key + " is " + kind_name(left.schema.columns[lk].kind) +
                    " on the left but " + kind_name(right.schema.columns[rk].kind) +
                    " on the right");
  }

  Table out;
  out.schema = left.schema;
  std::vector<size_t> right_cols;
  for (size_t c = 0; c < right.schema.arity(); ++c) {
    if (c == rk) continue;
    right_cols.push_back(c);
    out.schema.columns.push_back({disambiguate(out.schema, right.schema.columns[c].name),
                                  right.schema.columns[c].kind});
  }

  std::map<Value, std::vector<size_t>, ValueLess> matches;
  for (size_t r = 0; r < right.rows.size(); ++r) {
    const Value& v = right.rows[r][rk];
    if (is_null(v)) continue;  // null keys never match
    matches[v].push_back(r);
  }

  auto emit = [&](const Row& lrow, const Row* rrow) {
    Row row = lrow;
    row.reserve(out.schema.arity());
    for (size_t c : right_cols) {
      row.push_back(rrow ? (*rrow)[c] : Value{});
    }
    out.rows.push_back(std::move(row));
  };

  for (const Row& lrow : left.rows) {
    const Value& v = lrow[lk];
    auto it = is_null(v) ? matches.end() : matches.find(v);
    if (it == matches.end()) {
      emit(lrow, nullptr);
    } else {
      for (size_t r : it->second) emit(lrow, &right.rows[r]);
    }
  }
  return out;
}

Table join_cohort(const Table& patients, const Table& prescriptions,
                  const Table& diagnoses, const Table& d_icd) {
  require_column(patients, "SUBJECT_ID", "patients");
  require_column(prescriptions, "SUBJECT_ID", "prescriptions");
  require_column(diagnoses, "SUBJECT_ID", "diagnoses");
  require_column(diagnoses, "ICD9_CODE", "diagnoses");
  require_column(d_icd, "ICD9_CODE", "diagnosis dictionary");

  Table merged = left_join(patients, prescriptions, "SUBJECT_ID");
  merged = left_join(merged, diagnoses, "SUBJECT_ID");
  return left_join(merged, d_icd, "ICD9_CODE");
}

Table project_columns(const Table& table, const std::vector<std::string>& keep) {
  std::vector<size_t> indices;
  std::string missing;
  for (const std::string& name : keep) {
    auto idx = table.schema.index_of(name);
    if (!idx) {
      if (!missing.empty()) missing += ", ";
      missing += name;
    } else {
      indices.push_back(*idx);
    }
  }
  if (!missing.empty()) {
    throw Error(errc::schema_error, "unknown columns: " + missing);
  }

  Table out;
  for (size_t idx : indices) out.schema.columns.push_back(table.schema.columns[idx]);
  out.schema.require_valid();
  out.rows.reserve(table.rows.size());
  for (const Row& row : table.rows) {
    Row next;
    next.reserve(indices.size());
    for (size_t idx : indices) next.push_back(row[idx]);
    out.rows.push_back(std::move(next));
  }
  return out;
}

}  // namespace cliniq::tabular
