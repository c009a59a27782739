#include "cliniq/testcase.hpp"

#include <fstream>

#include "cliniq/error.hpp"
#include "cliniq/ioutil.hpp"
#include "json.hpp"

namespace cliniq {

using nlohmann::json;

void write_suite(const std::vector<TestCase>& suite, const std::string& path) {
  std::string out;
  for (const TestCase& c : suite) {
    json rec = {{"case_id", c.case_id},
                {"modality", c.modality},
                {"question", c.question},
                {"gold_answer", c.gold_answer}};
    if (c.complexity) {
      json cx = {{"preprocessing_required", c.complexity->preprocessing_required},
                 {"operation_count", c.complexity->operation_count}};
      if (c.complexity->aggregation) cx["aggregation"] = *c.complexity->aggregation;
      rec["complexity"] = cx;
    }
    if (c.source_segment_id) rec["source_segment_id"] = *c.source_segment_id;
    if (c.gold_program_text) rec["gold_program_text"] = *c.gold_program_text;
    out += rec.dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<TestCase> read_suite(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::io_error, "cannot open suite file " + path);
  std::vector<TestCase> suite;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto bad = [&](const std::string& why) {
      throw Error(errc::data_error,
                  "suite " + path + " line " + std::to_string(line_no) + ": " + why);
    };
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) bad("not a JSON object");
    for (const char* field : {"case_id", "modality", "question", "gold_answer"}) {
      if (!rec.contains(field) || !rec[field].is_string()) {
        bad(std::string("missing string \"") + field + "\"");
      }
    }
    TestCase c;
    c.case_id = rec["case_id"].get<std::string>();
    c.modality = rec["modality"].get<std::string>();
    c.question = rec["question"].get<std::string>();
    c.gold_answer = rec["gold_answer"].get<std::string>();
    if (c.modality != "structured" && c.modality != "unstructured") {
      bad("modality must be structured or unstructured (got \"" + c.modality + "\")");
    }
    if (c.gold_answer.empty()) bad("gold_answer must be non-empty");
    if (rec.contains("complexity")) {
      const json& cx = rec["complexity"];
      if (!cx.is_object() || !cx.contains("preprocessing_required") ||
          !cx.contains("operation_count")) {
        bad("malformed complexity");
      }
      Complexity out;
      out.preprocessing_required = cx["preprocessing_required"].get<bool>();
      out.operation_count = cx["operation_count"].get<int64_t>();
      if (cx.contains("aggregation")) out.aggregation = cx["aggregation"].get<std::string>();
      c.complexity = out;
    }
    if (rec.contains("source_segment_id")) {
      c.source_segment_id = rec["source_segment_id"].get<size_t>();
    }
    if (rec.contains("gold_program_text")) {
      c.gold_program_text = rec["gold_program_text"].get<std::string>();
    }
    if (c.modality == "structured" && (!c.complexity || !c.gold_program_text)) {
      bad("structured case needs complexity and gold_program_text");
    }
    if (c.modality == "unstructured" && !c.source_segment_id) {
      bad("unstructured case needs source_segment_id");
    }
    suite.push_back(std::move(c));
  }
  return suite;
}

}  // namespace cliniq
