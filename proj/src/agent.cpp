#include "cliniq/agent.hpp"

#include <algorithm>
#include <cctype>

#include "cliniq/value.hpp"

namespace cliniq::agent {

const char* failure_kind_name(FailureKind kind) {
  switch (kind) {
    case FailureKind::generation: return "generation";
    case FailureKind::parse: return "parse";
    case FailureKind::validation: return "validation";
    case FailureKind::execution: return "execution";
    case FailureKind::postprocess: return "postprocess";
  }
  return "?";
}

std::string build_system_prompt(const Schema& schema, const std::string& grammar_doc) {
  if (schema.columns.empty()) {
    throw Error(errc::schema_error, "cannot build a prompt for an empty schema");
  }
  std::string prompt =
      "You translate questions about one clinical data table into programs in the "
      "query language described below. Reply with a single program only: no prose, "
      "no explanation, no code fences.\n\nTable columns (name: type):\n";
  for (const Column& c : schema.columns) {
    prompt += "  ";
    prompt += c.name;
    prompt += ": ";
    prompt += kind_name(c.kind);
    prompt += '\n';
  }
  prompt += '\n';
  prompt += grammar_doc;
  return prompt;
}

std::string extract_program_text(const std::string& reply) {
  static const std::string fence = "```";
  size_t open = reply.find(fence);
  std::string body;
  if (open != std::string::npos) {
    size_t content = open + fence.size();
    size_t close = reply.find(fence, content);
    if (close != std::string::npos) {
      body = reply.substr(content, close - content);
      // Drop a language tag occupying the rest of the fence line.
      size_t nl = body.find('\n');
      if (nl != std::string::npos) {
        std::string first = body.substr(0, nl);
        bool tag = !first.empty();
        for (char c : first) {
          if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) {
            tag = false;
            break;
          }
        }
        if (tag) body = body.substr(nl + 1);
      }
    } else {
      body = reply.substr(content);
    }
  } else {
    body = reply;
  }
  size_t begin = body.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  size_t end = body.find_last_not_of(" \t\r\n");
  return body.substr(begin, end - begin + 1);
}

namespace {

AgentAnswer fail(AgentAnswer answer, FailureKind kind, std::string detail) {
  answer.failure = Failure{kind, std::move(detail)};
  answer.raw_result.reset();
  answer.final_answer.clear();
  return answer;
}

}  // namespace

AgentAnswer answer_structured_question(const std::string& question, const Table& table,
                                       const query::ExecutionContext& ctx,
                                       gw::Gateway& gateway,
                                       const gw::EndpointConfig& endpoint,
                                       const std::string& model_id,
                                       const RepairPolicy& policy) {
  AgentAnswer answer;
  answer.question = question;

  gw::ChatRequest request;
  request.model_id = model_id;
  request.messages = {{"system", build_system_prompt(table.schema, query::grammar_summary())},
                      {"user", question}};

  const int64_t max_attempts = 1 + std::max<int64_t>(0, policy.max_repairs);
  for (answer.attempts = 1;; ++answer.attempts) {
    std::string reply;
    try {
      reply = gateway.complete(endpoint, request).content;
    } catch (const Error& e) {
      return fail(std::move(answer), FailureKind::generation, e.what());
    }
    answer.program_text = extract_program_text(reply);

    std::string problem;
    FailureKind kind = FailureKind::parse;
    try {
      query::QueryProgram parsed = query::parse_program(answer.program_text);
      kind = FailureKind::validation;
      answer.program = query::validate_program(parsed, table.schema);
      break;  // validated; leave the repair loop
    } catch (const Error& e) {
      problem = e.what();
    }
    if (answer.attempts >= max_attempts) {
      return fail(std::move(answer), kind, problem);
    }
    // Repair round: show the model its own reply and the error.
    request.messages.push_back({"assistant", reply});
    request.messages.push_back(
        {"user", std::string("That program was rejected (") +
                     (kind == FailureKind::parse ? "parse" : "validation") +
                     " error): " + problem + "\nReply with a corrected program only."});
  }

  try {
    answer.raw_result = query::execute_program(*answer.program, table, ctx);
  } catch (const Error& e) {
    return fail(std::move(answer), FailureKind::execution, e.what());
  }
  const std::string rendered = query::render_result(*answer.raw_result);

  // Second call: phrase the raw result as a direct answer to the question.
  gw::ChatRequest phrasing;
  phrasing.model_id = model_id;
  phrasing.messages = {
      {"system",
       "You turn query results into direct answers. Reply with one short sentence "
       "answering the question from the result; do not add information."},
      {"user", "Question: " + question + "\nResult:\n" + rendered +
                   "\nAnswer the question directly."}};
  try {
    answer.final_answer = gateway.complete(endpoint, phrasing).content;
  } catch (const Error& e) {
    if (e.code() == errc::gw_no_script_match) {
      // Scripted endpoint without a phrasing rule: canonical rendering.
      answer.final_answer = rendered;
    } else {
      return fail(std::move(answer), FailureKind::postprocess,
                  std::string(e.what()) + " (result was: " + rendered + ")");
    }
  }
  return answer;
}

}  // namespace cliniq::agent
