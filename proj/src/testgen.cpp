#include "cliniq/testgen.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "cliniq/error.hpp"
#include "cliniq/ioutil.hpp"
#include "cliniq/rng.hpp"
#include "cliniq/text.hpp"
#include "json.hpp"

namespace cliniq::testgen {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

[[noreturn]] void template_error(int line, const std::string& what) {
  throw Error(errc::config_error,
              "templates, line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::vector<QuestionTemplate> parse_templates(const std::string& text) {
  std::vector<QuestionTemplate> templates;
  std::optional<QuestionTemplate> current;
  int block_start_line = 0;

  auto flush = [&]() {
    if (!current) return;
    if (current->question.empty() || current->program.empty()) {
      template_error(block_start_line,
                     "[template] block needs both question and program");
    }
    templates.push_back(std::move(*current));
    current.reset();
  };

  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    if (stripped == "[template]") {
      flush();
      current = QuestionTemplate{};
      block_start_line = line_no;
      continue;
    }
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      template_error(line_no, "expected \"key = value\" or [template]");
    }
    if (!current) {
      template_error(line_no, "key outside of a [template] block");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key == "question") {
      current->question = value;
    } else if (key == "program") {
      current->program = value;
    } else if (key == "tags") {
      size_t start = 0;
      while (start <= value.size()) {
        size_t comma = value.find(',', start);
        std::string item =
            trim(value.substr(start, comma == std::string::npos ? comma : comma - start));
        start = comma == std::string::npos ? value.size() + 1 : comma + 1;
        if (item.empty()) continue;
        if (item == "preprocessing") {
          current->tag_preprocessing = true;
        } else if (item.rfind("ops=", 0) == 0) {
          try {
            current->tag_ops = std::stoll(item.substr(4));
          } catch (const std::exception&) {
            template_error(line_no, "ops tag needs an integer: " + item);
          }
        } else if (item.rfind("aggregation=", 0) == 0) {
          current->tag_aggregation = item.substr(12);
        } else {
          template_error(line_no, "unknown tag \"" + item + "\"");
        }
      }
    } else {
      template_error(line_no, "unknown key \"" + key + "\"");
    }
  }
  flush();
  if (templates.empty()) {
    throw Error(errc::config_error, "templates: no [template] blocks found");
  }
  return templates;
}

std::vector<QuestionTemplate> load_templates(const std::string& path) {
  return parse_templates(read_file(path));
}

Complexity complexity_of(const query::QueryProgram& program) {
  Complexity c;
  c.operation_count = static_cast<int64_t>(program.stages.size());
  for (const auto& stage : program.stages) {
    if (const auto* d = std::get_if<query::DeriveStage>(&stage)) {
      if (std::holds_alternative<query::YearsBetween>(d->expr)) {
        c.preprocessing_required = true;
      }
    } else if (const auto* a = std::get_if<query::AggregateStage>(&stage)) {
      c.aggregation = to_lower(query::agg_func_name(a->func));
    }
  }
  return c;
}

namespace {

// Column pools and per-column distinct values used by placeholder draws.
struct DrawPools {
  std::vector<size_t> text_cols;
  std::vector<size_t> num_cols;
  std::vector<size_t> date_cols;
  // Distinct usable values per text column, first-appearance order.
  std::vector<std::vector<std::string>> text_values;
};

DrawPools build_pools(const Table& table) {
  DrawPools pools;
  pools.text_values.resize(table.schema.arity());
  for (size_t c = 0; c < table.schema.arity(); ++c) {
    const ColumnKind kind = table.schema.columns[c].kind;
    size_t non_null = 0;
    if (kind == ColumnKind::text) {
      std::set<std::string> seen;
      for (const auto& row : table.rows) {
        const auto* s = std::get_if<std::string>(&row[c]);
        if (!s || s->empty()) continue;
        ++non_null;
        // Values embedded in a program literal must not need escaping.
        if (s->find('"') != std::string::npos ||
            s->find('\\') != std::string::npos ||
            s->find('\n') != std::string::npos) {
          continue;
        }
        if (seen.insert(*s).second) pools.text_values[c].push_back(*s);
      }
      if (!pools.text_values[c].empty()) pools.text_cols.push_back(c);
    } else if (kind == ColumnKind::integer || kind == ColumnKind::floating) {
      for (const auto& row : table.rows) non_null += !is_null(row[c]);
      if (non_null > 0) pools.num_cols.push_back(c);
    } else if (kind == ColumnKind::date) {
      for (const auto& row : table.rows) non_null += !is_null(row[c]);
      if (non_null > 0) pools.date_cols.push_back(c);
    }
  }
  return pools;
}

struct AggChoice {
  const char* func;
  const char* english;
};
constexpr AggChoice kAggChoices[] = {
    {"MEAN", "mean"},   {"MEDIAN", "median"}, {"MIN", "minimum"},
    {"MAX", "maximum"}, {"SUM", "total"},
};

// All {INT:lo:hi} specs in the template, in first-appearance order.
std::vector<std::string> int_specs(const std::string& combined) {
  std::vector<std::string> specs;
  size_t pos = 0;
  while ((pos = combined.find("{INT:", pos)) != std::string::npos) {
    const size_t end = combined.find('}', pos);
    if (end == std::string::npos) break;
    const std::string spec = combined.substr(pos, end - pos + 1);
    if (std::find(specs.begin(), specs.end(), spec) == specs.end()) {
      specs.push_back(spec);
    }
    pos = end + 1;
  }
  return specs;
}

}  // namespace

SuiteResult generate_structured_suite(const Table& table,
                                      const query::ExecutionContext& ctx,
                                      const std::vector<QuestionTemplate>& templates,
                                      uint64_t seed, size_t n) {
  if (templates.empty()) {
    throw Error(errc::config_error, "structured suite needs at least one template");
  }
  table.require_valid();
  const DrawPools pools = build_pools(table);
  SplitMix64 rng(seed);
  SuiteResult result;

  for (size_t slot = 0; slot < n; ++slot) {
    const QuestionTemplate& tmpl = templates[slot % templates.size()];
    const std::string combined = tmpl.question + "\n" + tmpl.program;
    const bool needs_strcol = combined.find("{STRCOL}") != std::string::npos ||
                              combined.find("{STRVAL}") != std::string::npos;
    const bool needs_numcol = combined.find("{NUMCOL}") != std::string::npos;
    const bool needs_datecol = combined.find("{DATECOL}") != std::string::npos;
    const bool needs_agg = combined.find("{AGG}") != std::string::npos ||
                           combined.find("{AGG_NAME}") != std::string::npos;
    const std::vector<std::string> specs = int_specs(combined);

    auto slot_report = [&](const std::string& why) {
      result.skipped.push_back("case slot " + std::to_string(slot + 1) +
                               " (template " + std::to_string(slot % templates.size() + 1) +
                               "): " + why);
    };
    if (needs_strcol && pools.text_cols.empty()) {
      slot_report("no text column with usable values");
      continue;
    }
    if (needs_numcol && pools.num_cols.empty()) {
      slot_report("no numeric column with values");
      continue;
    }
    if (needs_datecol && pools.date_cols.empty()) {
      slot_report("no date column with values");
      continue;
    }

    bool emitted = false;
    bool abandoned = false;  // template defect: retrying cannot help
    std::string last_error;
    for (int attempt = 0; attempt < 8 && !emitted && !abandoned; ++attempt) {
      std::string question = tmpl.question;
      std::string program_text = tmpl.program;
      auto substitute = [&](const std::string& from, const std::string& to) {
        replace_all(question, from, to);
        replace_all(program_text, from, to);
      };
      // Fixed draw order keeps regeneration bit-identical.
      if (needs_strcol) {
        const size_t col = pools.text_cols[rng.below(pools.text_cols.size())];
        const auto& values = pools.text_values[col];
        substitute("{STRCOL}", table.schema.columns[col].name);
        substitute("{STRVAL}", values[rng.below(values.size())]);
      }
      if (needs_numcol) {
        const size_t col = pools.num_cols[rng.below(pools.num_cols.size())];
        substitute("{NUMCOL}", table.schema.columns[col].name);
      }
      if (needs_datecol) {
        const size_t col = pools.date_cols[rng.below(pools.date_cols.size())];
        substitute("{DATECOL}", table.schema.columns[col].name);
      }
      if (needs_agg) {
        const AggChoice& agg = kAggChoices[rng.below(std::size(kAggChoices))];
        substitute("{AGG_NAME}", agg.english);
        substitute("{AGG}", agg.func);
      }
      for (const auto& spec : specs) {
        // spec = "{INT:lo:hi}"
        const size_t c1 = spec.find(':');
        const size_t c2 = spec.find(':', c1 + 1);
        int64_t lo = 0, hi = 0;
        try {
          lo = std::stoll(spec.substr(c1 + 1, c2 - c1 - 1));
          hi = std::stoll(spec.substr(c2 + 1, spec.size() - c2 - 2));
        } catch (const std::exception&) {
          lo = 1;
          hi = 0;
        }
        if (hi < lo) {
          slot_report("bad integer placeholder " + spec);
          abandoned = true;
          break;
        }
        substitute(spec, std::to_string(
                             lo + static_cast<int64_t>(rng.below(hi - lo + 1))));
      }
      if (abandoned) break;

      try {
        const query::QueryProgram program = query::parse_program(program_text);
        const query::ValidatedProgram vp =
            query::validate_program(program, table.schema);
        const query::QueryResult res = query::execute_program(vp, table, ctx);
        const Complexity complexity = complexity_of(program);
        if ((tmpl.tag_ops && *tmpl.tag_ops != complexity.operation_count) ||
            (tmpl.tag_preprocessing &&
             *tmpl.tag_preprocessing != complexity.preprocessing_required) ||
            (tmpl.tag_aggregation &&
             tmpl.tag_aggregation != complexity.aggregation)) {
          slot_report("template tags disagree with instantiated program \"" +
                      program_text + "\"");
          abandoned = true;
          break;
        }
        TestCase tc;
        char id[16];
        std::snprintf(id, sizeof(id), "S%03zu", result.cases.size() + 1);
        tc.case_id = id;
        tc.modality = "structured";
        tc.question = question;
        tc.gold_answer = query::render_result(res);
        tc.complexity = complexity;
        tc.gold_program_text = query::print_program(program);
        result.cases.push_back(std::move(tc));
        emitted = true;
      } catch (const Error& e) {
        last_error = e.what();
      }
    }
    if (!emitted && !abandoned) {
      slot_report("no draw produced an executable program (last error: " +
                  last_error + ")");
    }
  }
  return result;
}

namespace {

std::vector<size_t> parse_cut_points(const std::string& reply) {
  std::vector<size_t> cuts;
  size_t i = 0;
  while (i < reply.size()) {
    if (std::isdigit(static_cast<unsigned char>(reply[i]))) {
      size_t j = i;
      while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j]))) {
        ++j;
      }
      if (j - i > 9) return {};  // absurd value: reject the whole proposal
      cuts.push_back(static_cast<size_t>(std::stoull(reply.substr(i, j - i))));
      i = j;
    } else {
      ++i;
    }
  }
  return cuts;
}

bool valid_cuts(const std::vector<size_t>& cuts, size_t n, size_t tokens) {
  if (cuts.size() + 1 != n) return false;
  size_t prev = 0;
  for (size_t c : cuts) {
    if (c <= prev || c >= tokens) return false;
    prev = c;
  }
  return true;
}

std::vector<Segment> segments_from_boundaries(const std::vector<std::string>& tokens,
                                              const std::vector<size_t>& starts) {
  std::vector<Segment> segments;
  for (size_t i = 0; i < starts.size(); ++i) {
    Segment seg;
    seg.segment_id = i;
    seg.token_start = starts[i];
    seg.token_end = i + 1 < starts.size() ? starts[i + 1] : tokens.size();
    seg.text = join_tokens(tokens, seg.token_start, seg.token_end);
    segments.push_back(std::move(seg));
  }
  return segments;
}

}  // namespace

std::vector<Segment> segment_document(const std::string& doc, size_t n,
                                      const ModelRef& model, bool allow_fallback) {
  if (n == 0) throw Error(errc::data_error, "segment count must be positive");
  const std::vector<std::string> tokens = tokenize(doc);
  if (tokens.size() < n) {
    throw Error(errc::data_error,
                "document has " + std::to_string(tokens.size()) +
                    " tokens, fewer than the " + std::to_string(n) +
                    " segments requested");
  }

  std::vector<size_t> starts;
  if (model.usable() && n > 1) {
    gw::ChatRequest req;
    req.model_id = model.model_id;
    req.messages = {
        {"system",
         "You split clinical documents into semantically coherent segments."},
        {"user",
         "Document with " + std::to_string(tokens.size()) + " tokens:\n" + doc +
             "\n\nPropose " + std::to_string(n - 1) +
             " cut points as strictly increasing token indices between 1 and " +
             std::to_string(tokens.size() - 1) +
             ". Reply with the integers separated by spaces, nothing else."},
    };
    std::vector<size_t> cuts;
    bool proposal_ok = false;
    try {
      const gw::ChatResponse resp = model.gateway->complete(*model.endpoint, req);
      cuts = parse_cut_points(resp.content);
      proposal_ok = valid_cuts(cuts, n, tokens.size());
    } catch (const Error& e) {
      if (!allow_fallback) throw;
      proposal_ok = false;
    }
    if (proposal_ok) {
      starts.push_back(0);
      starts.insert(starts.end(), cuts.begin(), cuts.end());
    } else if (!allow_fallback) {
      throw Error(errc::data_error,
                  "model cut points were unusable and fallback is disabled");
    }
  }
  if (starts.empty()) {
    // Equal token split; the first (tokens % n) segments get one extra.
    const size_t base = tokens.size() / n;
    const size_t rem = tokens.size() % n;
    size_t pos = 0;
    for (size_t i = 0; i < n; ++i) {
      starts.push_back(pos);
      pos += base + (i < rem ? 1 : 0);
    }
  }
  return segments_from_boundaries(tokens, starts);
}

namespace {

constexpr const char* kAnchorPhrase = "intubated and sedated";
constexpr const char* kAnchorQuestion =
    "Why was the pre-surgical physical exam not obtained?";
constexpr const char* kAnchorAnswer = "the patient was intubated and sedated";

// Extracts the "Q: ... / A: ..." pair from a model reply.
std::optional<std::pair<std::string, std::string>> parse_qa(const std::string& reply) {
  std::string question, answer;
  size_t pos = 0;
  while (pos <= reply.size()) {
    size_t nl = reply.find('\n', pos);
    std::string line =
        reply.substr(pos, nl == std::string::npos ? nl : nl - pos);
    pos = nl == std::string::npos ? reply.size() + 1 : nl + 1;
    const std::string stripped = trim(line);
    if (question.empty() && stripped.rfind("Q:", 0) == 0) {
      question = trim(stripped.substr(2));
    } else if (!question.empty() && stripped.rfind("A:", 0) == 0) {
      answer = trim(stripped.substr(2));
      break;
    }
  }
  if (question.empty() || answer.empty()) return std::nullopt;
  return std::make_pair(question, answer);
}

}  // namespace

SuiteResult generate_unstructured_suite(const std::vector<Segment>& segments,
                                        const ModelRef& model) {
  SuiteResult result;
  for (const Segment& seg : segments) {
    std::string question, answer;
    if (model.usable()) {
      gw::ChatRequest req;
      req.model_id = model.model_id;
      req.messages = {
          {"system",
           "You write one question and answer pair grounded in a clinical note "
           "excerpt. The question must be answerable from the excerpt alone. "
           "Reply with exactly two lines:\nQ: <question>\nA: <answer>"},
          {"user", "Excerpt:\n" + seg.text},
      };
      std::optional<std::pair<std::string, std::string>> qa;
      try {
        const gw::ChatResponse first = model.gateway->complete(*model.endpoint, req);
        qa = parse_qa(first.content);
        if (!qa) {
          req.messages.push_back({"assistant", first.content});
          req.messages.push_back(
              {"user",
               "Your reply was not in the required format. Reply with exactly "
               "two lines starting with \"Q: \" and \"A: \"."});
          qa = parse_qa(model.gateway->complete(*model.endpoint, req).content);
        }
      } catch (const Error& e) {
        result.skipped.push_back("segment " + std::to_string(seg.segment_id) +
                                 ": endpoint failed (" + e.what() + ")");
        continue;
      }
      if (!qa) {
        result.skipped.push_back("segment " + std::to_string(seg.segment_id) +
                                 ": reply was not a Q:/A: pair after one retry");
        continue;
      }
      question = qa->first;
      answer = qa->second;
    } else if (seg.text.find(kAnchorPhrase) != std::string::npos) {
      question = kAnchorQuestion;
      answer = kAnchorAnswer;
    } else {
      question = "According to the note, is it true that " + seg.text + "?";
      answer = seg.text;
    }

    TestCase tc;
    char id[16];
    std::snprintf(id, sizeof(id), "U%03zu", result.cases.size() + 1);
    tc.case_id = id;
    tc.modality = "unstructured";
    tc.question = std::move(question);
    tc.gold_answer = std::move(answer);
    tc.source_segment_id = seg.segment_id;
    result.cases.push_back(std::move(tc));
  }
  return result;
}

void emit_stub_script(const std::vector<TestCase>& suite, const std::string& path) {
  std::string out;
  std::set<std::string> seen;
  for (const TestCase& tc : suite) {
    const std::string key = fnv1a64_hex(tc.question);
    if (!seen.insert(key).second) continue;
    const std::string& reply =
        tc.modality == "structured" && tc.gold_program_text ? *tc.gold_program_text
                                                            : tc.gold_answer;
    nlohmann::json rule{{"match", "hash"}, {"key", key}, {"reply", reply}};
    out += rule.dump();
    out.push_back('\n');
  }
  write_file_atomic(path, out);
}

}  // namespace cliniq::testgen
