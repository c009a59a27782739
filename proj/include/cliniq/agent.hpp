#pragma once

#include <optional>
#include <string>

#include "cliniq/gateway.hpp"
#include "cliniq/query.hpp"

namespace cliniq::agent {

enum class FailureKind { generation, parse, validation, execution, postprocess };

const char* failure_kind_name(FailureKind kind);

struct Failure {
  FailureKind kind;
  std::string detail;
};

struct RepairPolicy {
  int64_t max_repairs = 1;  // extra generation rounds after a parse/validation error
};

// Full per-question trace of the generate -> validate -> execute -> phrase
// pipeline. Exactly one of raw_result / failure is set.
struct AgentAnswer {
  std::string question;
  std::string program_text;  // last program text extracted from the model
  std::optional<query::ValidatedProgram> program;
  std::optional<query::QueryResult> raw_result;
  std::string final_answer;  // empty when failure is set
  std::optional<Failure> failure;
  int64_t attempts = 1;  // generation calls made (1 + repairs used)
};

// Deterministic prompt: every column name with its kind exactly once, the
// grammar summary, and the reply-with-program-only instruction. Identical
// schema -> byte-identical prompt, regardless of endpoint.
std::string build_system_prompt(const Schema& schema, const std::string& grammar_doc);

// First fenced code block if the reply has one (optional language tag),
// otherwise the whole reply trimmed.
std::string extract_program_text(const std::string& reply);

// Runs one question through the full structured pipeline. Parse/validation
// failures trigger up to policy.max_repairs repair rounds (the error text is
// appended and the model re-asked). Nothing runs without passing
// validate_program first. After execution a second model call phrases the
// result; a stub with no phrasing rule falls back to the canonical rendering.
AgentAnswer answer_structured_question(const std::string& question, const Table& table,
                                       const query::ExecutionContext& ctx,
                                       gw::Gateway& gateway,
                                       const gw::EndpointConfig& endpoint,
                                       const std::string& model_id,
                                       const RepairPolicy& policy = {});

}  // namespace cliniq::agent
