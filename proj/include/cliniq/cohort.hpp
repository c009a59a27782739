#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cliniq/date.hpp"
#include "cliniq/table.hpp"

namespace cliniq::tabular {

struct CohortConfig {
  size_t n_patients = 101;
  uint64_t seed = 0;
  Date dob_start{1930, 1, 1};
  Date dob_end{2000, 12, 31};
  std::string dob_column_name = "DOB_Demo";
};

// Seeded sample of n_patients rows without replacement, emitted in the input
// row order. Requires a SUBJECT_ID column with no duplicate values; when the
// table has <= n_patients rows the whole table comes back.
Table sample_cohort(const Table& patients, const CohortConfig& cfg);

// Appends a date column of uniform random dates in [dob_start, dob_end],
// one per row, deterministic in cfg.seed. The clinical DOB stays untouched;
// downstream age math reads this column.
Table synthesize_dob(const Table& table, const CohortConfig& cfg);

// Hash left join on an equality key present in both tables with the same
// kind. Multiple right matches multiply rows (right-table order); no match
// or a null key keeps the left row with nulls on the right side. Right-side
// column names that collide get _2/_3/... suffixes.
Table left_join(const Table& left, const Table& right, const std::string& key);

// patients |> prescriptions (SUBJECT_ID) |> diagnoses (SUBJECT_ID)
//          |> d_icd (ICD9_CODE). Errors name the table missing its key.
Table join_cohort(const Table& patients, const Table& prescriptions,
                  const Table& diagnoses, const Table& d_icd);

// Keeps exactly the named columns, in the given order. Unknown names are an
// error listing every offender.
Table project_columns(const Table& table, const std::vector<std::string>& keep);

}  // namespace cliniq::tabular
