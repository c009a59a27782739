#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cliniq/gateway.hpp"
#include "cliniq/query.hpp"
#include "cliniq/table.hpp"
#include "cliniq/testcase.hpp"

namespace cliniq::testgen {

// Token-range segment of a document. Segments partition the token stream:
// concatenating the texts with single spaces and re-tokenizing reproduces
// the document's tokens.
struct Segment {
  size_t segment_id = 0;  // 0-based ordinal
  size_t token_start = 0;
  size_t token_end = 0;  // exclusive
  std::string text;

  bool operator==(const Segment&) const = default;
};

// One question template: the question pattern and the program pattern that
// computes its gold answer, plus optional documentation tags checked against
// the instantiated program. Placeholders ({STRCOL}, {STRVAL}, {NUMCOL},
// {DATECOL}, {AGG}, {AGG_NAME}, {INT:lo:hi}) are substituted in both
// patterns from a single set of draws.
struct QuestionTemplate {
  std::string question;
  std::string program;
  std::optional<bool> tag_preprocessing;
  std::optional<std::string> tag_aggregation;
  std::optional<int64_t> tag_ops;
};

// Parses the human-editable template file format: [template] blocks of
// "key = value" lines, '#' comments. Errors carry 1-based line numbers.
std::vector<QuestionTemplate> parse_templates(const std::string& text);
std::vector<QuestionTemplate> load_templates(const std::string& path);

// Optional model hook for the generation paths that can use one. All
// generators run fully offline when it is absent.
struct ModelRef {
  gw::Gateway* gateway = nullptr;
  const gw::EndpointConfig* endpoint = nullptr;
  std::string model_id;

  bool usable() const { return gateway != nullptr && endpoint != nullptr; }
};

struct SuiteResult {
  std::vector<TestCase> cases;
  std::vector<std::string> skipped;  // one report line per dropped case
};

// Complexity of a concrete program: stage count, whether it derives a value
// with YEARS_BETWEEN, and the aggregate function if any.
Complexity complexity_of(const query::QueryProgram& program);

// Instantiates templates round-robin until n case slots are consumed. Each
// slot gets up to eight placeholder draws; the instantiated program must
// parse, validate and execute (the engine output is the gold answer), or the
// slot is skipped with a report. Fixed seed -> bit-identical suite.
SuiteResult generate_structured_suite(const Table& table,
                                      const query::ExecutionContext& ctx,
                                      const std::vector<QuestionTemplate>& templates,
                                      uint64_t seed, size_t n = 30);

// Splits doc into n token-range segments. With a usable model, the model
// proposes the n-1 cut points (validated: strictly increasing, in range);
// unusable proposals fall back to the deterministic equal split unless
// allow_fallback is false, which turns them into an error instead.
std::vector<Segment> segment_document(const std::string& doc, size_t n,
                                      const ModelRef& model = {},
                                      bool allow_fallback = true);

// One QA pair per segment. With a usable model, the model writes the pair
// (two-line "Q:/A:" reply, one retry on malformed output, then skip with a
// report). Without one, a deterministic template keeps the pipeline
// testable: the question embeds the segment text verbatim and the gold
// answer is the segment text, so the gold is always a substring of its
// source segment.
SuiteResult generate_unstructured_suite(const std::vector<Segment>& segments,
                                        const ModelRef& model = {});

// Writes one scripted-stub rule per unique question: hash-matched, replying
// with the case's gold program (structured) or gold answer (unstructured).
// Lets a run replay the suite offline with exact answers.
void emit_stub_script(const std::vector<TestCase>& suite, const std::string& path);

}  // namespace cliniq::testgen
