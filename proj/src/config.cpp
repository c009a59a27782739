#include "cliniq/config.hpp"

#include <set>

#include "cliniq/error.hpp"
#include "cliniq/ioutil.hpp"

namespace cliniq::cfg {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void config_fail(int line, const std::string& what) {
  throw Error(errc::config_error,
              "config, line " + std::to_string(line) + ": " + what);
}

int64_t parse_int(const std::string& value, int line, const std::string& key) {
  try {
    size_t used = 0;
    const int64_t v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    config_fail(line, key + " needs an integer, got \"" + value + "\"");
  }
}

int64_t parse_nonneg(const std::string& value, int line, const std::string& key) {
  const int64_t v = parse_int(value, line, key);
  if (v < 0) config_fail(line, key + " must be >= 0");
  return v;
}

Date parse_date_value(const std::string& value, int line, const std::string& key) {
  const auto d = Date::parse(value);
  if (!d) config_fail(line, key + " needs a YYYY-MM-DD date, got \"" + value + "\"");
  return *d;
}

gw::EndpointConfig& endpoint_slot(RunConfig& config, const std::string& id) {
  for (auto& ep : config.endpoints) {
    if (ep.id == id) return ep;
  }
  gw::EndpointConfig ep;
  ep.id = id;
  config.endpoints.push_back(std::move(ep));
  return config.endpoints.back();
}

void set_endpoint_field(gw::EndpointConfig& ep, const std::string& field,
                        const std::string& value, int line) {
  if (field == "kind") {
    if (value == "http_chat") {
      ep.kind = gw::EndpointKind::http_chat;
    } else if (value == "scripted_stub") {
      ep.kind = gw::EndpointKind::scripted_stub;
    } else {
      config_fail(line, "endpoint kind must be http_chat or scripted_stub");
    }
  } else if (field == "base_url") {
    ep.base_url = value;
  } else if (field == "credential_env") {
    ep.credential_env = value;
  } else if (field == "timeout_ms") {
    ep.timeout_ms = parse_nonneg(value, line, "timeout_ms");
  } else if (field == "max_retries") {
    ep.max_retries = parse_nonneg(value, line, "max_retries");
  } else if (field == "budget_tokens") {
    ep.budget_tokens = parse_nonneg(value, line, "budget_tokens");
  } else if (field == "script_path") {
    ep.script_path = value;
  } else if (field == "fallback") {
    if (value == "error") {
      ep.fallback = gw::StubFallback::error;
    } else if (value == "fixed") {
      ep.fallback = gw::StubFallback::fixed;
    } else if (value == "echo") {
      ep.fallback = gw::StubFallback::echo;
    } else {
      config_fail(line, "endpoint fallback must be error, fixed, or echo");
    }
  } else if (field == "fallback_text") {
    ep.fallback_text = value;
  } else {
    config_fail(line, "unknown endpoint field \"" + field + "\"");
  }
}

}  // namespace

const gw::EndpointConfig* RunConfig::find_endpoint(const std::string& id) const {
  for (const auto& ep : endpoints) {
    if (ep.id == id) return &ep;
  }
  return nullptr;
}

std::string RunConfig::endpoint_ids() const {
  std::string out;
  for (const auto& ep : endpoints) {
    if (!out.empty()) out += ", ";
    out += ep.id;
  }
  return out;
}

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  std::set<std::string> seen_keys;

  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    const size_t nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      config_fail(line_no, "expected \"key = value\"");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) config_fail(line_no, "empty key");
    if (!seen_keys.insert(key).second) {
      config_fail(line_no, "duplicate key \"" + key + "\"");
    }

    if (key.rfind("endpoint.", 0) == 0) {
      const std::string rest = key.substr(9);
      const size_t dot = rest.find('.');
      if (dot == std::string::npos || dot == 0 || dot + 1 >= rest.size()) {
        config_fail(line_no, "endpoint keys look like endpoint.<id>.<field>");
      }
      set_endpoint_field(endpoint_slot(config, rest.substr(0, dot)),
                         rest.substr(dot + 1), value, line_no);
      continue;
    }

    if (key == "patients_csv") {
      config.patients_csv = value;
    } else if (key == "prescriptions_csv") {
      config.prescriptions_csv = value;
    } else if (key == "diagnoses_csv") {
      config.diagnoses_csv = value;
    } else if (key == "diagnosis_dictionary_csv") {
      config.diagnosis_dictionary_csv = value;
    } else if (key == "note_txt") {
      config.note_txt = value;
    } else if (key == "templates_path") {
      config.templates_path = value;
    } else if (key == "output_dir") {
      config.output_dir = value;
    } else if (key == "keep_columns") {
      size_t start = 0;
      while (start <= value.size()) {
        const size_t comma = value.find(',', start);
        const std::string name =
            trim(value.substr(start, comma == std::string::npos ? comma : comma - start));
        start = comma == std::string::npos ? value.size() + 1 : comma + 1;
        if (!name.empty()) config.keep_columns.push_back(name);
      }
      if (config.keep_columns.empty()) {
        config_fail(line_no, "keep_columns needs at least one column name");
      }
    } else if (key == "cohort.n_patients") {
      config.cohort.n_patients =
          static_cast<size_t>(parse_nonneg(value, line_no, key));
    } else if (key == "cohort.seed") {
      config.cohort.seed = static_cast<uint64_t>(parse_nonneg(value, line_no, key));
    } else if (key == "cohort.dob_start") {
      config.cohort.dob_start = parse_date_value(value, line_no, key);
    } else if (key == "cohort.dob_end") {
      config.cohort.dob_end = parse_date_value(value, line_no, key);
    } else if (key == "cohort.dob_column_name") {
      if (value.empty()) config_fail(line_no, "cohort.dob_column_name is empty");
      config.cohort.dob_column_name = value;
    } else if (key == "reference_date") {
      config.reference_date = parse_date_value(value, line_no, key);
    } else if (key == "chunking.size") {
      config.chunking.chunk_size =
          static_cast<size_t>(parse_nonneg(value, line_no, key));
    } else if (key == "chunking.overlap") {
      config.chunking.overlap =
          static_cast<size_t>(parse_nonneg(value, line_no, key));
    } else if (key == "retrieval.k") {
      config.retrieval.k = static_cast<size_t>(parse_nonneg(value, line_no, key));
    } else if (key == "seed") {
      config.seed = static_cast<uint64_t>(parse_nonneg(value, line_no, key));
    } else if (key == "workers") {
      config.workers = parse_int(value, line_no, key);
      if (config.workers < 1) config_fail(line_no, "workers must be >= 1");
    } else {
      config_fail(line_no, "unknown key \"" + key + "\"");
    }
  }

  if (config.cohort.dob_end < config.cohort.dob_start) {
    throw Error(errc::config_error, "config: cohort.dob_end precedes cohort.dob_start");
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  try {
    return parse_config(read_file(path));
  } catch (const Error& e) {
    if (e.code() == errc::config_error) {
      throw Error(errc::config_error, path + ": " + e.what());
    }
    throw;
  }
}

}  // namespace cliniq::cfg
