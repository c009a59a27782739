#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "cliniq/agent.hpp"
#include "cliniq/cohort.hpp"
#include "cliniq/config.hpp"
#include "cliniq/csv.hpp"
#include "cliniq/error.hpp"
#include "cliniq/eval.hpp"
#include "cliniq/fixtures.hpp"
#include "cliniq/gateway.hpp"
#include "cliniq/ioutil.hpp"
#include "cliniq/query.hpp"
#include "cliniq/rag.hpp"
#include "cliniq/testcase.hpp"
#include "cliniq/testgen.hpp"

namespace fs = std::filesystem;
using namespace cliniq;

namespace {

// Exit codes: 0 success, 1 usage/config, 2 data, 3 endpoint, 4 partial run.
int exit_code_for(const Error& e) {
  if (e.code() == errc::config_error) return 1;
  if (is_gateway_error(e.code())) return 3;
  return 2;
}

const std::string& require_path(const std::string& value, const char* key) {
  if (value.empty()) {
    throw Error(errc::config_error, std::string(key) + " is not set in the config");
  }
  return value;
}

std::string out_path(const cfg::RunConfig& config, const std::string& name) {
  return (fs::path(config.output_dir) / name).string();
}

std::string suite_path(const cfg::RunConfig& config, const std::string& modality) {
  return out_path(config, "suite_" + modality + ".jsonl");
}

const gw::EndpointConfig& require_endpoint(const cfg::RunConfig& config,
                                           const std::string& id) {
  const gw::EndpointConfig* ep = config.find_endpoint(id);
  if (!ep) {
    throw Error(errc::config_error, "unknown model \"" + id + "\"; configured: " +
                                        (config.endpoints.empty()
                                             ? std::string("(none)")
                                             : config.endpoint_ids()));
  }
  return *ep;
}

std::shared_ptr<gw::Journal> open_journal(const cfg::RunConfig& config) {
  fs::create_directories(config.output_dir);
  return std::make_shared<gw::Journal>(out_path(config, "journal.jsonl"));
}

// The persisted merge: schema sidecar first so column kinds never depend on
// re-inference.
Table load_merged(const cfg::RunConfig& config) {
  const std::string csv = out_path(config, "merged.csv");
  const std::string sidecar = out_path(config, "merged.schema");
  if (!fs::exists(csv) || !fs::exists(sidecar)) {
    throw Error(errc::data_error,
                "no ingested table at " + csv + "; run the ingest command first");
  }
  return tabular::load_csv(csv, tabular::read_schema_sidecar(sidecar));
}

std::vector<testgen::QuestionTemplate> load_question_templates(
    const cfg::RunConfig& config) {
  if (config.templates_path.empty()) {
    return testgen::parse_templates(fixtures::default_templates_text());
  }
  return testgen::load_templates(config.templates_path);
}

int cmd_ingest(const cfg::RunConfig& config) {
  const Table patients =
      tabular::load_csv(require_path(config.patients_csv, "patients_csv"));
  const Table rx =
      tabular::load_csv(require_path(config.prescriptions_csv, "prescriptions_csv"));
  const Table dx =
      tabular::load_csv(require_path(config.diagnoses_csv, "diagnoses_csv"));
  const Table dict = tabular::load_csv(
      require_path(config.diagnosis_dictionary_csv, "diagnosis_dictionary_csv"));

  Table cohort = tabular::sample_cohort(patients, config.cohort);
  cohort = tabular::synthesize_dob(cohort, config.cohort);
  Table merged = tabular::join_cohort(cohort, rx, dx, dict);
  if (!config.keep_columns.empty()) {
    merged = tabular::project_columns(merged, config.keep_columns);
  }

  fs::create_directories(config.output_dir);
  tabular::write_csv(merged, out_path(config, "merged.csv"));
  tabular::write_schema_sidecar(merged.schema, out_path(config, "merged.schema"));
  std::cout << "rows=" << merged.row_count() << ", cols=" << merged.column_count()
            << "\n";
  return 0;
}

int cmd_testgen(const cfg::RunConfig& config, const std::string& modality,
                const std::string& endpoint_id, const std::string& emit_stub_path,
                int64_t count) {
  gw::Gateway gateway(endpoint_id.empty() ? nullptr : open_journal(config));
  testgen::ModelRef model;
  if (!endpoint_id.empty()) {
    model = {&gateway, &require_endpoint(config, endpoint_id), endpoint_id};
  }

  testgen::SuiteResult result;
  if (modality == "structured") {
    const Table merged = load_merged(config);
    const auto templates = load_question_templates(config);
    const size_t n = count > 0 ? static_cast<size_t>(count) : 30;
    result = testgen::generate_structured_suite(merged, {config.reference_date},
                                                templates, config.seed, n);
  } else {
    const std::string note = read_file(require_path(config.note_txt, "note_txt"));
    const size_t n = count > 0 ? static_cast<size_t>(count) : 50;
    const auto segments = testgen::segment_document(note, n, model);
    result = testgen::generate_unstructured_suite(segments, model);
  }

  for (const auto& report : result.skipped) {
    std::cerr << "skipped: " << report << "\n";
  }
  if (result.cases.empty()) {
    throw Error(errc::data_error, "no cases were generated");
  }

  fs::create_directories(config.output_dir);
  const std::string path = suite_path(config, modality);
  write_suite(result.cases, path);
  if (!emit_stub_path.empty()) {
    testgen::emit_stub_script(result.cases, emit_stub_path);
  }
  std::cout << "cases=" << result.cases.size() << ", suite=" << path << "\n";
  return 0;
}

int cmd_run(const cfg::RunConfig& config, const std::string& modality,
            const std::string& model_id, int64_t workers_flag,
            std::string suite_file) {
  const gw::EndpointConfig& endpoint = require_endpoint(config, model_id);
  if (endpoint.kind == gw::EndpointKind::scripted_stub &&
      !endpoint.script_path.empty()) {
    gw::load_stub_script(endpoint.script_path);  // fail before any case does
  }

  if (suite_file.empty()) suite_file = suite_path(config, modality);
  const std::vector<TestCase> suite = read_suite(suite_file);
  if (suite.empty()) {
    throw Error(errc::data_error, suite_file + ": suite is empty");
  }
  for (const TestCase& tc : suite) {
    if (tc.modality != modality) {
      throw Error(errc::data_error, suite_file + ": case " + tc.case_id + " is " +
                                        tc.modality + ", expected " + modality);
    }
  }

  gw::Gateway gateway(open_journal(config));
  std::vector<eval::RunRecord> records(suite.size());

  auto base_record = [&](const TestCase& tc) {
    eval::RunRecord r;
    r.case_id = tc.case_id;
    r.modality = tc.modality;
    r.model_id = model_id;
    r.question = tc.question;
    r.gold_answer = tc.gold_answer;
    return r;
  };

  std::function<void(size_t)> run_case;
  // Keep the per-modality state alive for the workers' whole lifetime.
  Table merged;
  std::vector<rag::Chunk> chunks;
  rag::HashEmbedder embedder;
  std::unique_ptr<rag::VectorIndex> index;

  if (modality == "structured") {
    merged = load_merged(config);
    const query::ExecutionContext ctx{config.reference_date};
    run_case = [&, ctx](size_t i) {
      eval::RunRecord r = base_record(suite[i]);
      try {
        const agent::AgentAnswer answer = agent::answer_structured_question(
            suite[i].question, merged, ctx, gateway, endpoint, model_id);
        r.final_answer = answer.final_answer;
        if (!answer.program_text.empty()) r.program_text = answer.program_text;
        if (answer.failure) r.failure = agent::failure_kind_name(answer.failure->kind);
      } catch (const Error&) {
        r.failure = "generation";
      }
      records[i] = std::move(r);
    };
  } else {
    const std::string note = read_file(require_path(config.note_txt, "note_txt"));
    chunks = rag::chunk_document(note, "note", config.chunking);
    index = std::make_unique<rag::VectorIndex>(rag::VectorIndex::build(
        rag::embed_chunks(chunks, embedder), embedder.dimension(), embedder.id()));
    run_case = [&](size_t i) {
      eval::RunRecord r = base_record(suite[i]);
      try {
        const rag::RagAnswer answer = rag::answer_unstructured_question(
            suite[i].question, *index, chunks, embedder, gateway, endpoint,
            config.retrieval, model_id);
        r.final_answer = answer.answer;
        std::vector<size_t> ids;
        ids.reserve(answer.retrieved.size());
        for (const rag::Hit& hit : answer.retrieved) ids.push_back(hit.chunk_id);
        r.retrieved_ids = std::move(ids);
      } catch (const Error&) {
        r.failure = "generation";
      }
      records[i] = std::move(r);
    };
  }

  const size_t workers = static_cast<size_t>(
      std::max<int64_t>(1, workers_flag > 0 ? workers_flag : config.workers));
  if (workers <= 1 || suite.size() <= 1) {
    for (size_t i = 0; i < suite.size(); ++i) run_case(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    const size_t n_threads = std::min(workers, suite.size());
    pool.reserve(n_threads);
    for (size_t t = 0; t < n_threads; ++t) {
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < suite.size(); i = next.fetch_add(1)) {
          run_case(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  // Records land in suite (case_id) order no matter which worker ran them.
  const std::string records_path =
      out_path(config, "run_" + modality + "_" + model_id + ".jsonl");
  eval::write_run_records(records, records_path);

  size_t failures = 0;
  for (const auto& r : records) failures += r.failure.has_value();
  std::cout << "cases=" << records.size() << ", failures=" << failures
            << ", records=" << records_path << "\n";
  return failures == 0 ? 0 : 4;
}

int cmd_eval(const cfg::RunConfig& config, const std::vector<std::string>& record_files,
             std::vector<std::string> suite_files, const std::string& annotations_file,
             bool strict_exact) {
  if (suite_files.empty()) {
    for (const char* modality : {"structured", "unstructured"}) {
      const std::string path = suite_path(config, modality);
      if (fs::exists(path)) suite_files.push_back(path);
    }
    if (suite_files.empty()) {
      throw Error(errc::data_error,
                  "no suite files under " + config.output_dir +
                      "; run testgen first or pass --suite");
    }
  }

  std::vector<TestCase> suite;
  for (const auto& path : suite_files) {
    const auto part = read_suite(path);
    suite.insert(suite.end(), part.begin(), part.end());
  }
  std::vector<eval::RunRecord> records;
  for (const auto& path : record_files) {
    const auto part = eval::read_run_records(path);
    records.insert(records.end(), part.begin(), part.end());
  }
  std::vector<eval::AnnotationRecord> annotations;
  if (!annotations_file.empty()) {
    annotations = eval::ingest_annotations(annotations_file, suite);
  }

  const eval::EvalReport report =
      eval::aggregate_report(records, annotations, suite, strict_exact);

  std::string text;
  if (!report.structured.empty()) {
    text += "Structured querying\n";
    text += eval::render_structured_table(report);
    text += "\n";
  }
  if (!report.unstructured.empty()) {
    if (!text.empty()) text += "\n";
    text += "Unstructured extraction\n";
    text += eval::render_unstructured_table(report);
    text += "\n";
  }

  fs::create_directories(config.output_dir);
  write_file_atomic(out_path(config, "report.txt"), text);
  write_file_atomic(out_path(config, "report.json"), eval::report_to_json(report));
  write_file_atomic(out_path(config, "report.tsv"), eval::report_to_tsv(report));
  std::cout << text;
  std::cerr << "report=" << out_path(config, "report.txt") << "\n";
  return 0;
}

int cmd_query(const cfg::RunConfig& config, const std::string& question,
              const std::string& model_id) {
  const gw::EndpointConfig& endpoint = require_endpoint(config, model_id);
  const Table merged = load_merged(config);
  gw::Gateway gateway(open_journal(config));
  const agent::AgentAnswer answer = agent::answer_structured_question(
      question, merged, {config.reference_date}, gateway, endpoint, model_id);

  std::cout << "program: "
            << (answer.program_text.empty() ? "(none)" : answer.program_text) << "\n";
  if (answer.raw_result) {
    std::cout << "result: " << query::render_result(*answer.raw_result) << "\n";
  }
  if (answer.failure) {
    std::cerr << "failed (" << agent::failure_kind_name(answer.failure->kind)
              << "): " << answer.failure->detail << "\n";
    return answer.failure->kind == agent::FailureKind::generation ? 3 : 2;
  }
  std::cout << "answer: " << answer.final_answer << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clinical-data question pipelines: ingest, generate, run, score"};
  app.require_subcommand(1);
  std::string config_path = "run.conf";
  app.add_option("-c,--config", config_path, "Run configuration file")
      ->capture_default_str();

  auto* ingest = app.add_subcommand(
      "ingest", "Join the source tables into the merged feature table");

  auto* testgen_cmd =
      app.add_subcommand("testgen", "Generate a question suite with gold answers");
  std::string modality;
  std::string endpoint_id;
  std::string emit_stub_path;
  int64_t count = 0;
  testgen_cmd->add_option("--modality", modality, "structured or unstructured")
      ->required()
      ->check(CLI::IsMember({"structured", "unstructured"}));
  testgen_cmd->add_option("--endpoint", endpoint_id,
                          "Endpoint id for model-assisted generation");
  testgen_cmd->add_option("--emit-stub", emit_stub_path,
                          "Also write a scripted-stub rule file replaying the suite");
  testgen_cmd->add_option("--count", count,
                          "Cases (structured) or segments (unstructured); "
                          "default 30/50");

  auto* run = app.add_subcommand("run", "Run a suite against one endpoint");
  std::string run_modality;
  std::string run_model;
  std::string run_suite;
  int64_t run_workers = 0;
  run->add_option("--modality", run_modality, "structured or unstructured")
      ->required()
      ->check(CLI::IsMember({"structured", "unstructured"}));
  run->add_option("--model", run_model, "Endpoint id to answer with")->required();
  run->add_option("--suite", run_suite, "Suite file (default: from output_dir)");
  run->add_option("--workers", run_workers, "Concurrent cases (default: config)");

  auto* eval_cmd = app.add_subcommand("eval", "Score run records into reports");
  std::vector<std::string> record_files;
  std::vector<std::string> suite_files;
  std::string annotations_file;
  bool strict_exact = false;
  eval_cmd->add_option("--records", record_files, "Run-record files (repeatable)")
      ->required();
  eval_cmd->add_option("--suite", suite_files,
                       "Suite files (default: those in output_dir)");
  eval_cmd->add_option("--annotations", annotations_file,
                       "Annotation file for correctness/grade columns");
  eval_cmd->add_flag("--strict-exact", strict_exact,
                     "Byte-equality exact match instead of canonical");

  auto* query_cmd =
      app.add_subcommand("query", "Answer one structured question interactively");
  std::string question;
  std::string query_model;
  query_cmd->add_option("--question", question, "Natural-language question")
      ->required();
  query_cmd->add_option("--model", query_model, "Endpoint id to answer with")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const cfg::RunConfig config = cfg::load_config(config_path);
    if (ingest->parsed()) return cmd_ingest(config);
    if (testgen_cmd->parsed()) {
      return cmd_testgen(config, modality, endpoint_id, emit_stub_path, count);
    }
    if (run->parsed()) {
      return cmd_run(config, run_modality, run_model, run_workers, run_suite);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(config, record_files, suite_files, annotations_file,
                      strict_exact);
    }
    if (query_cmd->parsed()) return cmd_query(config, question, query_model);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
