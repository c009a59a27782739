#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cliniq/cohort.hpp"
#include "cliniq/date.hpp"
#include "cliniq/gateway.hpp"
#include "cliniq/rag.hpp"

namespace cliniq::cfg {

// Everything one run needs, from a single human-editable key-value file.
// Paths are used as written (relative paths resolve against the working
// directory); commands check the files they actually need.
struct RunConfig {
  std::string patients_csv;
  std::string prescriptions_csv;
  std::string diagnoses_csv;
  std::string diagnosis_dictionary_csv;
  std::string note_txt;
  std::string templates_path;  // empty = built-in default templates
  std::string output_dir = "out";
  // Columns the ingest step keeps from the raw join (in order); empty keeps
  // the full joined schema.
  std::vector<std::string> keep_columns;

  tabular::CohortConfig cohort;
  Date reference_date{2026, 1, 1};
  rag::ChunkingConfig chunking;
  rag::RetrievalConfig retrieval;

  uint64_t seed = 0;
  int64_t workers = 1;

  // Order = file order. Endpoint ids double as model ids and are unique.
  std::vector<gw::EndpointConfig> endpoints;

  const gw::EndpointConfig* find_endpoint(const std::string& id) const;
  // Comma-separated id list for usage errors.
  std::string endpoint_ids() const;
};

// "key = value" lines, '#' comments, blank lines ignored. Endpoint blocks
// use dotted keys: endpoint.<id>.<field>. Unknown keys, malformed values,
// and duplicate endpoint definitions are config errors naming the 1-based
// line.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace cliniq::cfg
