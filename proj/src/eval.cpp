#include "cliniq/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cliniq/error.hpp"
#include "cliniq/ioutil.hpp"
#include "cliniq/text.hpp"
#include "json.hpp"

namespace cliniq::eval {

using nlohmann::json;

const char* grade_name(Grade g) {
  switch (g) {
    case Grade::satisfactory: return "satisfactory";
    case Grade::partially_satisfactory: return "partially_satisfactory";
    case Grade::not_satisfactory: return "not_satisfactory";
  }
  return "?";
}

namespace {

std::optional<Grade> parse_grade(const std::string& token) {
  if (token == "satisfactory") return Grade::satisfactory;
  if (token == "partially_satisfactory") return Grade::partially_satisfactory;
  if (token == "not_satisfactory") return Grade::not_satisfactory;
  return std::nullopt;
}

std::string canonicalize(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

bool parse_full_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(begin, &end);
  if (end != begin + s.size() || errno == ERANGE) return false;
  if (!std::isfinite(v)) return false;
  out = v;
  return true;
}

RougeScore make_rouge(double precision, double recall) {
  RougeScore r;
  r.precision = precision;
  r.recall = recall;
  r.f1 = (precision + recall == 0.0)
             ? 0.0
             : 2.0 * precision * recall / (precision + recall);
  return r;
}

std::vector<std::string> lower_tokens(const std::string& s) {
  std::vector<std::string> toks = tokenize(s);
  for (auto& t : toks) t = to_lower(std::move(t));
  return toks;
}

// n-grams keyed by their tokens joined with an unprintable separator, which
// cannot collide because tokens never contain control bytes from tokenize's
// whitespace splitting.
std::map<std::string, int64_t> ngram_counts(const std::vector<std::string>& toks,
                                            size_t n) {
  std::map<std::string, int64_t> counts;
  if (toks.size() < n) return counts;
  for (size_t i = 0; i + n <= toks.size(); ++i) {
    std::string key;
    for (size_t j = 0; j < n; ++j) {
      if (j) key.push_back('\x1f');
      key += toks[i + j];
    }
    ++counts[key];
  }
  return counts;
}

std::string format_rouge(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string opt_pct(const std::optional<double>& v) {
  return v ? format_pct(*v) : std::string("n/a");
}

// Left-aligns `model` cells, right-aligns everything else.
std::string pad(const std::string& s, size_t width, bool left) {
  if (s.size() >= width) return s;
  std::string fill(width - s.size(), ' ');
  return left ? s + fill : fill + s;
}

json rouge_to_json(const RougeScore& r) {
  return json{{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}};
}

json opt_to_json(const std::optional<double>& v) {
  if (v) return json(*v);
  return json(nullptr);
}

}  // namespace

bool exact_match(const std::string& expected, const std::string& actual,
                 bool strict) {
  if (strict) return expected == actual;
  const std::string a = canonicalize(expected);
  const std::string b = canonicalize(actual);
  double x = 0.0, y = 0.0;
  if (parse_full_number(a, x) && parse_full_number(b, y)) {
    if (x == y) return true;
    return std::fabs(x - y) <= 1e-9 * std::max(std::fabs(x), std::fabs(y));
  }
  return a == b;
}

RougeScore rouge_n(const std::string& candidate, const std::string& reference,
                   size_t n) {
  if (n == 0) throw Error(errc::data_error, "rouge_n: order must be >= 1");
  const auto cand = ngram_counts(lower_tokens(candidate), n);
  const auto ref = ngram_counts(lower_tokens(reference), n);
  int64_t cand_total = 0, ref_total = 0, overlap = 0;
  for (const auto& [key, count] : cand) cand_total += count;
  for (const auto& [key, count] : ref) ref_total += count;
  if (cand_total == 0 || ref_total == 0) return RougeScore{};
  for (const auto& [key, count] : cand) {
    auto it = ref.find(key);
    if (it != ref.end()) overlap += std::min(count, it->second);
  }
  return make_rouge(static_cast<double>(overlap) / cand_total,
                    static_cast<double>(overlap) / ref_total);
}

RougeScore rouge_l(const std::string& candidate, const std::string& reference) {
  const auto cand = lower_tokens(candidate);
  const auto ref = lower_tokens(reference);
  if (cand.empty() || ref.empty()) return RougeScore{};
  // DP over two rows: lcs[j] = LCS length of cand[0..i) vs ref[0..j).
  std::vector<int64_t> prev(ref.size() + 1, 0), cur(ref.size() + 1, 0);
  for (size_t i = 1; i <= cand.size(); ++i) {
    for (size_t j = 1; j <= ref.size(); ++j) {
      if (cand[i - 1] == ref[j - 1]) {
        cur[j] = prev[j - 1] + 1;
      } else {
        cur[j] = std::max(prev[j], cur[j - 1]);
      }
    }
    std::swap(prev, cur);
  }
  const double lcs = static_cast<double>(prev[ref.size()]);
  return make_rouge(lcs / cand.size(), lcs / ref.size());
}

void write_run_records(const std::vector<RunRecord>& records,
                       const std::string& path) {
  std::string out;
  for (const auto& r : records) {
    json j{{"case_id", r.case_id},
           {"modality", r.modality},
           {"model_id", r.model_id},
           {"question", r.question},
           {"final_answer", r.final_answer},
           {"gold_answer", r.gold_answer}};
    if (r.program_text) j["program_text"] = *r.program_text;
    if (r.failure) j["failure"] = *r.failure;
    if (r.retrieved_ids) j["retrieved_chunk_ids"] = *r.retrieved_ids;
    out += j.dump();
    out.push_back('\n');
  }
  write_file_atomic(path, out);
}

std::vector<RunRecord> read_run_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::io_error, "cannot open run records: " + path);
  std::vector<RunRecord> records;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& what) {
    throw Error(errc::data_error,
                path + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail("not a JSON object");
    RunRecord r;
    for (const char* key :
         {"case_id", "modality", "model_id", "question", "gold_answer"}) {
      if (!j.contains(key) || !j[key].is_string()) {
        fail(std::string(key) + " must be a string");
      }
    }
    r.case_id = j["case_id"].get<std::string>();
    r.modality = j["modality"].get<std::string>();
    if (r.modality != "structured" && r.modality != "unstructured") {
      fail("modality must be structured or unstructured");
    }
    r.model_id = j["model_id"].get<std::string>();
    r.question = j["question"].get<std::string>();
    r.gold_answer = j["gold_answer"].get<std::string>();
    if (!j.contains("final_answer") || !j["final_answer"].is_string()) {
      fail("final_answer must be a string");
    }
    r.final_answer = j["final_answer"].get<std::string>();
    if (j.contains("program_text")) {
      if (!j["program_text"].is_string()) fail("program_text must be a string");
      r.program_text = j["program_text"].get<std::string>();
    }
    if (j.contains("failure")) {
      if (!j["failure"].is_string()) fail("failure must be a string");
      r.failure = j["failure"].get<std::string>();
    }
    if (j.contains("retrieved_chunk_ids")) {
      if (!j["retrieved_chunk_ids"].is_array()) {
        fail("retrieved_chunk_ids must be an array");
      }
      std::vector<size_t> ids;
      for (const auto& e : j["retrieved_chunk_ids"]) {
        if (!e.is_number_unsigned()) {
          fail("retrieved_chunk_ids entries must be non-negative integers");
        }
        ids.push_back(e.get<size_t>());
      }
      r.retrieved_ids = std::move(ids);
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<AnnotationRecord> ingest_annotations(
    const std::string& path, const std::vector<TestCase>& suite) {
  std::ifstream in(path);
  if (!in) throw Error(errc::io_error, "cannot open annotations: " + path);

  std::map<std::string, std::string> modality_of;
  for (const auto& tc : suite) modality_of[tc.case_id] = tc.modality;

  std::vector<AnnotationRecord> records;
  std::vector<std::string> errors;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  std::string line;
  int line_no = 0;
  auto complain = [&](const std::string& what) {
    errors.push_back("line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      complain("not a JSON object");
      continue;
    }
    bool shape_ok = true;
    for (const char* key : {"case_id", "model_id", "annotator_id"}) {
      if (!j.contains(key) || !j[key].is_string()) {
        complain(std::string(key) + " must be a string");
        shape_ok = false;
      }
    }
    if (!shape_ok) continue;
    AnnotationRecord r;
    r.case_id = j["case_id"].get<std::string>();
    r.model_id = j["model_id"].get<std::string>();
    r.annotator_id = j["annotator_id"].get<std::string>();

    auto it = modality_of.find(r.case_id);
    if (it == modality_of.end()) {
      complain("unknown case_id \"" + r.case_id + "\"");
      continue;
    }
    const std::string& modality = it->second;
    bool ok = true;
    if (modality == "structured") {
      if (j.contains("content_correct")) {
        complain("content_correct is an unstructured field, but case \"" +
                 r.case_id + "\" is structured");
        ok = false;
      }
      if (!j.contains("content_grade") || !j["content_grade"].is_string()) {
        complain("content_grade must be a string on structured cases");
        ok = false;
      } else {
        auto grade = parse_grade(j["content_grade"].get<std::string>());
        if (!grade) {
          complain("content_grade must be one of satisfactory, "
                   "partially_satisfactory, not_satisfactory");
          ok = false;
        } else {
          r.content_grade = grade;
        }
      }
      if (j.contains("code_correct")) {
        if (!j["code_correct"].is_boolean()) {
          complain("code_correct must be a boolean");
          ok = false;
        } else {
          r.code_correct = j["code_correct"].get<bool>();
        }
      }
    } else {
      for (const char* key : {"content_grade", "code_correct"}) {
        if (j.contains(key)) {
          complain(std::string(key) + " is a structured field, but case \"" +
                   r.case_id + "\" is unstructured");
          ok = false;
        }
      }
      if (!j.contains("content_correct") || !j["content_correct"].is_boolean()) {
        complain("content_correct must be a boolean on unstructured cases");
        ok = false;
      } else {
        r.content_correct = j["content_correct"].get<bool>();
      }
    }
    auto triple = std::make_tuple(r.case_id, r.model_id, r.annotator_id);
    if (!seen.insert(triple).second) {
      complain("duplicate annotation for (" + r.case_id + ", " + r.model_id +
               ", " + r.annotator_id + ")");
      ok = false;
    }
    if (ok) records.push_back(std::move(r));
  }
  if (!errors.empty()) {
    std::string msg = "invalid annotations in " + path + ":";
    for (const auto& e : errors) msg += "\n  " + e;
    throw Error(errc::data_error, msg);
  }
  return records;
}

EvalReport aggregate_report(const std::vector<RunRecord>& records,
                            const std::vector<AnnotationRecord>& annotations,
                            const std::vector<TestCase>& suite,
                            bool strict_exact) {
  if (records.empty()) {
    throw Error(errc::data_error, "empty run: no records to aggregate");
  }
  std::map<std::string, std::string> modality_of;
  for (const auto& tc : suite) modality_of[tc.case_id] = tc.modality;
  for (const auto& r : records) {
    auto it = modality_of.find(r.case_id);
    if (it == modality_of.end()) {
      throw Error(errc::data_error,
                  "run record references unknown case_id \"" + r.case_id + "\"");
    }
    if (it->second != r.modality) {
      throw Error(errc::data_error, "run record for case \"" + r.case_id +
                                        "\" has modality " + r.modality +
                                        " but the suite says " + it->second);
    }
  }

  // Sorting up front makes the fold independent of input order.
  std::vector<RunRecord> sorted = records;
  std::sort(sorted.begin(), sorted.end(),
            [](const RunRecord& a, const RunRecord& b) {
              return std::tie(a.modality, a.model_id, a.case_id) <
                     std::tie(b.modality, b.model_id, b.case_id);
            });

  struct StructuredAccum {
    int64_t cases = 0;
    int64_t exact = 0;
    int64_t annotated = 0;
    int64_t with_code = 0;
    int64_t code_correct = 0;
    int64_t grades[3] = {0, 0, 0};
  };
  struct UnstructuredAccum {
    int64_t cases = 0;
    int64_t annotated = 0;
    int64_t content_correct = 0;
    double sums[3][3] = {};  // [r1, r2, rl][precision, recall, f1]
  };
  std::map<std::string, StructuredAccum> structured;
  std::map<std::string, UnstructuredAccum> unstructured;

  for (const auto& r : sorted) {
    if (r.modality == "structured") {
      auto& acc = structured[r.model_id];
      ++acc.cases;
      // Failures count as non-matches, never as missing rows.
      if (!r.failure && exact_match(r.gold_answer, r.final_answer, strict_exact)) {
        ++acc.exact;
      }
    } else {
      auto& acc = unstructured[r.model_id];
      ++acc.cases;
      const std::string candidate = r.failure ? std::string() : r.final_answer;
      const RougeScore scores[3] = {rouge_n(candidate, r.gold_answer, 1),
                                    rouge_n(candidate, r.gold_answer, 2),
                                    rouge_l(candidate, r.gold_answer)};
      for (int m = 0; m < 3; ++m) {
        acc.sums[m][0] += scores[m].precision;
        acc.sums[m][1] += scores[m].recall;
        acc.sums[m][2] += scores[m].f1;
      }
    }
  }

  // Annotation tallies use per-record denominators: each (case,
  // model, annotator) judgment counts once, so double-annotated cases weigh double.
  for (const auto& a : annotations) {
    auto it = modality_of.find(a.case_id);
    if (it == modality_of.end()) continue;
    if (it->second == "structured") {
      auto sit = structured.find(a.model_id);
      if (sit == structured.end()) continue;
      auto& acc = sit->second;
      ++acc.annotated;
      if (a.content_grade) ++acc.grades[static_cast<int>(*a.content_grade)];
      if (a.code_correct.has_value()) {
        ++acc.with_code;
        if (*a.code_correct) ++acc.code_correct;
      }
    } else {
      auto uit = unstructured.find(a.model_id);
      if (uit == unstructured.end()) continue;
      auto& acc = uit->second;
      ++acc.annotated;
      if (a.content_correct && *a.content_correct) ++acc.content_correct;
    }
  }

  EvalReport report;
  for (const auto& [model, acc] : structured) {
    StructuredRow row;
    row.model_id = model;
    row.cases = acc.cases;
    row.exact_matches = acc.exact;
    row.exact_match_pct = 100.0 * acc.exact / acc.cases;
    row.annotated = acc.annotated;
    if (acc.with_code > 0) {
      row.code_correct_pct = 100.0 * acc.code_correct / acc.with_code;
    }
    if (acc.annotated > 0) {
      row.satisfactory_pct = 100.0 * acc.grades[0] / acc.annotated;
      row.partially_satisfactory_pct = 100.0 * acc.grades[1] / acc.annotated;
      row.not_satisfactory_pct = 100.0 * acc.grades[2] / acc.annotated;
    }
    report.structured.push_back(std::move(row));
  }
  for (const auto& [model, acc] : unstructured) {
    UnstructuredRow row;
    row.model_id = model;
    row.cases = acc.cases;
    row.annotated = acc.annotated;
    if (acc.annotated > 0) {
      row.content_correct_pct = 100.0 * acc.content_correct / acc.annotated;
    }
    RougeScore* out[3] = {&row.rouge1, &row.rouge2, &row.rouge_l};
    for (int m = 0; m < 3; ++m) {
      out[m]->precision = acc.sums[m][0] / acc.cases;
      out[m]->recall = acc.sums[m][1] / acc.cases;
      out[m]->f1 = acc.sums[m][2] / acc.cases;
    }
    report.unstructured.push_back(std::move(row));
  }
  return report;
}

std::string format_pct(double pct) {
  char buf[32];
  const double rounded = std::round(pct);
  if (std::fabs(pct - rounded) < 1e-9) {
    std::snprintf(buf, sizeof(buf), "%d%%", static_cast<int>(rounded));
  } else {
    std::snprintf(buf, sizeof(buf), "%.1f%%", pct);
  }
  return buf;
}

std::string render_structured_table(const EvalReport& report) {
  const std::vector<std::string> headers = {
      "Model",        "Exact Match", "Code Correctness",
      "Satisfactory", "Partially Satisfactory", "Not Satisfactory"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : report.structured) {
    rows.push_back({r.model_id, format_pct(r.exact_match_pct),
                    opt_pct(r.code_correct_pct), opt_pct(r.satisfactory_pct),
                    opt_pct(r.partially_satisfactory_pct),
                    opt_pct(r.not_satisfactory_pct)});
  }
  std::vector<size_t> widths(headers.size());
  for (size_t c = 0; c < headers.size(); ++c) {
    widths[c] = headers[c].size();
    for (const auto& row : rows) widths[c] = std::max(widths[c], row[c].size());
  }
  std::string out;
  auto emit = [&](const std::vector<std::string>& cells) {
    for (size_t c = 0; c < cells.size(); ++c) {
      if (c) out += "  ";
      out += pad(cells[c], widths[c], c == 0);
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out.push_back('\n');
  };
  emit(headers);
  for (const auto& row : rows) emit(row);
  return out;
}

std::string render_unstructured_table(const EvalReport& report) {
  // Two header lines: metric groups, then the R1/R2/RL sub-columns.
  std::string out;
  size_t model_w = std::string("Model").size();
  size_t content_w = std::string("Content Correct").size();
  for (const auto& r : report.unstructured) {
    model_w = std::max(model_w, r.model_id.size());
    content_w = std::max(content_w, opt_pct(r.content_correct_pct).size());
  }
  const size_t cell_w = 4;  // "0.67"
  const size_t group_w = 3 * cell_w + 2 * 2;

  out += pad("Model", model_w, true);
  out += "  " + pad("Content Correct", content_w, true);
  for (const char* group : {"Precision", "Recall", "F1"}) {
    out += "  " + pad(group, group_w, true);
  }
  while (out.back() == ' ') out.pop_back();
  out.push_back('\n');

  out += std::string(model_w, ' ') + "  " + std::string(content_w, ' ');
  for (int g = 0; g < 3; ++g) {
    for (const char* sub : {"R1", "R2", "RL"}) {
      out += "  " + pad(sub, cell_w, false);
    }
  }
  out.push_back('\n');

  for (const auto& r : report.unstructured) {
    out += pad(r.model_id, model_w, true);
    out += "  " + pad(opt_pct(r.content_correct_pct), content_w, false);
    const RougeScore* scores[3] = {&r.rouge1, &r.rouge2, &r.rouge_l};
    const double RougeScore::* fields[3] = {
        &RougeScore::precision, &RougeScore::recall, &RougeScore::f1};
    for (int g = 0; g < 3; ++g) {
      for (int m = 0; m < 3; ++m) {
        out += "  " + pad(format_rouge(scores[m]->*fields[g]), cell_w, false);
      }
    }
    out.push_back('\n');
  }
  return out;
}

std::string report_to_tsv(const EvalReport& report) {
  // Long format: one metric per line, uniform across both modalities.
  std::string out = "modality\tmodel\tmetric\tvalue\n";
  auto line = [&](const std::string& modality, const std::string& model,
                  const std::string& metric, const std::string& value) {
    out += modality + "\t" + model + "\t" + metric + "\t" + value + "\n";
  };
  auto num = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };
  auto opt_num = [&](const std::optional<double>& v) {
    return v ? num(*v) : std::string("n/a");
  };
  for (const auto& r : report.structured) {
    line("structured", r.model_id, "cases", std::to_string(r.cases));
    line("structured", r.model_id, "exact_match_pct", num(r.exact_match_pct));
    line("structured", r.model_id, "annotated", std::to_string(r.annotated));
    line("structured", r.model_id, "code_correct_pct",
         opt_num(r.code_correct_pct));
    line("structured", r.model_id, "satisfactory_pct",
         opt_num(r.satisfactory_pct));
    line("structured", r.model_id, "partially_satisfactory_pct",
         opt_num(r.partially_satisfactory_pct));
    line("structured", r.model_id, "not_satisfactory_pct",
         opt_num(r.not_satisfactory_pct));
  }
  for (const auto& r : report.unstructured) {
    line("unstructured", r.model_id, "cases", std::to_string(r.cases));
    line("unstructured", r.model_id, "annotated", std::to_string(r.annotated));
    line("unstructured", r.model_id, "content_correct_pct",
         opt_num(r.content_correct_pct));
    const RougeScore* scores[3] = {&r.rouge1, &r.rouge2, &r.rouge_l};
    const char* names[3] = {"rouge1", "rouge2", "rouge_l"};
    for (int m = 0; m < 3; ++m) {
      line("unstructured", r.model_id, std::string(names[m]) + "_precision",
           num(scores[m]->precision));
      line("unstructured", r.model_id, std::string(names[m]) + "_recall",
           num(scores[m]->recall));
      line("unstructured", r.model_id, std::string(names[m]) + "_f1",
           num(scores[m]->f1));
    }
  }
  return out;
}

std::string report_to_json(const EvalReport& report) {
  json j{{"structured", json::array()}, {"unstructured", json::array()}};
  for (const auto& r : report.structured) {
    j["structured"].push_back(
        {{"model_id", r.model_id},
         {"cases", r.cases},
         {"exact_matches", r.exact_matches},
         {"exact_match_pct", r.exact_match_pct},
         {"annotated", r.annotated},
         {"code_correct_pct", opt_to_json(r.code_correct_pct)},
         {"satisfactory_pct", opt_to_json(r.satisfactory_pct)},
         {"partially_satisfactory_pct",
          opt_to_json(r.partially_satisfactory_pct)},
         {"not_satisfactory_pct", opt_to_json(r.not_satisfactory_pct)}});
  }
  for (const auto& r : report.unstructured) {
    j["unstructured"].push_back(
        {{"model_id", r.model_id},
         {"cases", r.cases},
         {"annotated", r.annotated},
         {"content_correct_pct", opt_to_json(r.content_correct_pct)},
         {"rouge1", rouge_to_json(r.rouge1)},
         {"rouge2", rouge_to_json(r.rouge2)},
         {"rouge_l", rouge_to_json(r.rouge_l)}});
  }
  return j.dump(2) + "\n";
}

}  // namespace cliniq::eval
