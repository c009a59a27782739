#include "cliniq/error.hpp"

namespace cliniq {

const char* errc_name(errc code) {
  switch (code) {
    case errc::io_error: return "io_error";
    case errc::csv_error: return "csv_error";
    case errc::schema_error: return "schema_error";
    case errc::config_error: return "config_error";
    case errc::data_error: return "data_error";
    case errc::parse_error: return "parse_error";
    case errc::validate_error: return "validate_error";
    case errc::exec_div_by_zero: return "exec_div_by_zero";
    case errc::exec_empty_aggregate: return "exec_empty_aggregate";
    case errc::exec_negative_age: return "exec_negative_age";
    case errc::gw_timeout: return "gw_timeout";
    case errc::gw_transport: return "gw_transport";
    case errc::gw_budget_exhausted: return "gw_budget_exhausted";
    case errc::gw_protocol: return "gw_protocol";
    case errc::gw_script: return "gw_script";
    case errc::gw_no_script_match: return "gw_no_script_match";
  }
  return "unknown";
}

}  // namespace cliniq
