#pragma once

#include <stdexcept>
#include <string>

namespace cliniq {

// Error categories. The structured agent and the CLI map these to failure
// classifications and exit codes, so additions here ripple into both.
enum class errc {
  io_error,
  csv_error,
  schema_error,
  config_error,
  data_error,
  parse_error,
  validate_error,
  exec_div_by_zero,
  exec_empty_aggregate,
  exec_negative_age,
  gw_timeout,
  gw_transport,
  gw_budget_exhausted,
  gw_protocol,
  gw_script,
  gw_no_script_match,
};

const char* errc_name(errc code);

inline bool is_exec_error(errc c) {
  return c == errc::exec_div_by_zero || c == errc::exec_empty_aggregate ||
         c == errc::exec_negative_age;
}

inline bool is_gateway_error(errc c) {
  return c == errc::gw_timeout || c == errc::gw_transport ||
         c == errc::gw_budget_exhausted || c == errc::gw_protocol ||
         c == errc::gw_script || c == errc::gw_no_script_match;
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

// Syntax errors carry the 1-based line/column and the offending token so
// callers can build repair feedback without re-lexing the program.
class ParseError : public Error {
 public:
  ParseError(int line, int column, std::string token, const std::string& message)
      : Error(errc::parse_error, message),
        line_(line),
        column_(column),
        token_(std::move(token)) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }
  const std::string& token() const noexcept { return token_; }

 private:
  int line_;
  int column_;
  std::string token_;
};

}  // namespace cliniq
