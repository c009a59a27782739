#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cliniq/testcase.hpp"

namespace cliniq::eval {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;  // 0 when precision + recall == 0, else harmonic mean

  bool operator==(const RougeScore&) const = default;
};

// One pipeline answer joined with its test case, as persisted by `run`.
struct RunRecord {
  std::string case_id;
  std::string modality;  // "structured" | "unstructured"
  std::string model_id;
  std::string question;
  std::string final_answer;
  std::string gold_answer;
  std::optional<std::string> program_text;           // structured
  std::optional<std::string> failure;                // failure kind when the case failed
  std::optional<std::vector<size_t>> retrieved_ids;  // unstructured
};

enum class Grade { satisfactory, partially_satisfactory, not_satisfactory };

const char* grade_name(Grade g);

struct AnnotationRecord {
  std::string case_id;
  std::string model_id;
  std::string annotator_id;
  std::optional<bool> code_correct;       // structured
  std::optional<Grade> content_grade;     // structured
  std::optional<bool> content_correct;    // unstructured
};

// Per-model aggregate rows. Annotation-derived fields are unset when no
// annotations cover the (model, modality) pair; reports print them as "n/a".
struct StructuredRow {
  std::string model_id;
  int64_t cases = 0;
  int64_t exact_matches = 0;
  double exact_match_pct = 0.0;
  int64_t annotated = 0;
  std::optional<double> code_correct_pct;
  std::optional<double> satisfactory_pct;
  std::optional<double> partially_satisfactory_pct;
  std::optional<double> not_satisfactory_pct;
};

struct UnstructuredRow {
  std::string model_id;
  int64_t cases = 0;
  int64_t annotated = 0;
  std::optional<double> content_correct_pct;
  RougeScore rouge1;  // macro average over all cases
  RougeScore rouge2;
  RougeScore rouge_l;
};

struct EvalReport {
  std::vector<StructuredRow> structured;      // sorted by model_id
  std::vector<UnstructuredRow> unstructured;  // sorted by model_id
};

// Canonical-form equality: trim, collapse internal whitespace, ASCII case
// fold; when both canonical forms are numbers, compare with rel. tol. 1e-9.
// strict=true demands byte equality instead.
bool exact_match(const std::string& expected, const std::string& actual,
                 bool strict = false);

// Clipped n-gram overlap on lowercased tokens, no stemming or stopwording.
// Empty candidate or reference yields all zeros.
RougeScore rouge_n(const std::string& candidate, const std::string& reference, size_t n);

// Longest-common-subsequence variant over the same token streams.
RougeScore rouge_l(const std::string& candidate, const std::string& reference);

// Line-JSON persistence for run records; read validates with line numbers.
void write_run_records(const std::vector<RunRecord>& records, const std::string& path);
std::vector<RunRecord> read_run_records(const std::string& path);

// Reads annotator judgments, validating every line against the suite:
// unknown case ids, modality-mismatched fields, bad grade tokens, and
// duplicate (case, model, annotator) triples are all collected and reported
// together with their line numbers before aborting.
std::vector<AnnotationRecord> ingest_annotations(const std::string& path,
                                                 const std::vector<TestCase>& suite);

// Order-independent per-model aggregation. Failed cases count as non-matches
// (and score ROUGE against their empty answers), never as missing rows.
EvalReport aggregate_report(const std::vector<RunRecord>& records,
                            const std::vector<AnnotationRecord>& annotations,
                            const std::vector<TestCase>& suite,
                            bool strict_exact = false);

// Fixed-width text tables (one per modality), a TSV export, and a JSON
// export with the same numbers.
std::string render_structured_table(const EvalReport& report);
std::string render_unstructured_table(const EvalReport& report);
std::string report_to_tsv(const EvalReport& report);
std::string report_to_json(const EvalReport& report);

// "50%" for integral percentages, otherwise one decimal ("53.3%").
std::string format_pct(double pct);

}  // namespace cliniq::eval
