#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cliniq {

// The three axes a structured question can vary on.
struct Complexity {
  bool preprocessing_required = false;      // needs a derived column (e.g. age)
  std::optional<std::string> aggregation;   // aggregate function, if any
  int64_t operation_count = 0;              // pipeline stages in the gold program

  bool operator==(const Complexity&) const = default;
};

struct TestCase {
  std::string case_id;
  std::string modality;  // "structured" | "unstructured"
  std::string question;
  std::string gold_answer;
  std::optional<Complexity> complexity;          // structured only
  std::optional<size_t> source_segment_id;       // unstructured only
  std::optional<std::string> gold_program_text;  // structured only

  bool operator==(const TestCase&) const = default;
};

// Line-delimited JSON, one case per line; read validates every record and
// reports offending 1-based line numbers.
void write_suite(const std::vector<TestCase>& suite, const std::string& path);
std::vector<TestCase> read_suite(const std::string& path);

}  // namespace cliniq
