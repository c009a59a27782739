#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cliniq/table.hpp"

namespace cliniq::query {

// Pipeline DSL over one table. Stages are applied left to right; the full
// grammar lives in docs/grammar.md and grammar_summary() is the compact form
// given to models.

enum class Comparator { eq, ne, lt, le, gt, ge, contains };
enum class AggFunc { count, sum, mean, median, min, max, count_distinct };
enum class SortDir { asc, desc };

const char* comparator_text(Comparator c);
const char* agg_func_name(AggFunc f);

// Arithmetic expression tree for DERIVE. Nodes are immutable; shared_ptr
// makes stage copies cheap. Equality is structural (arith_equal).
struct ArithNode;
using ArithPtr = std::shared_ptr<const ArithNode>;

struct ArithNode {
  enum class Op { column, literal, add, sub, mul, div, neg };
  Op op;
  std::string column;   // op == column
  Value literal;        // op == literal (int64 or double)
  ArithPtr lhs, rhs;    // binary ops; neg uses lhs only
};

bool arith_equal(const ArithPtr& a, const ArithPtr& b);

// YEARS_BETWEEN(date_column, @ref | literal date). nullopt reference means
// the execution context supplies it.
struct YearsBetween {
  std::string date_column;
  std::optional<Date> reference;
  bool operator==(const YearsBetween&) const = default;
};

using DeriveExpr = std::variant<YearsBetween, ArithPtr>;

struct FilterStage {
  std::string column;
  Comparator cmp;
  Value literal;
  bool operator==(const FilterStage&) const = default;
};
struct DeriveStage {
  std::string new_column;
  DeriveExpr expr;
  bool operator==(const DeriveStage& o) const;
};
struct GroupByStage {
  std::vector<std::string> columns;
  bool operator==(const GroupByStage&) const = default;
};
struct AggregateStage {
  AggFunc func;
  std::optional<std::string> target;  // nullopt = '*' (COUNT only)
  bool operator==(const AggregateStage&) const = default;
};
struct SelectStage {
  std::vector<std::string> columns;
  bool operator==(const SelectStage&) const = default;
};
struct SortStage {
  std::string column;
  SortDir dir = SortDir::asc;
  bool operator==(const SortStage&) const = default;
};
struct LimitStage {
  int64_t n = 0;
  bool operator==(const LimitStage&) const = default;
};

using Stage = std::variant<FilterStage, DeriveStage, GroupByStage, AggregateStage,
                           SelectStage, SortStage, LimitStage>;

struct QueryProgram {
  std::vector<Stage> stages;
  bool operator==(const QueryProgram&) const = default;
};

// Hard caps; programs beyond them are rejected at parse time so adversarial
// inputs fail closed.
inline constexpr size_t kMaxProgramBytes = 64 * 1024;
inline constexpr size_t kMaxProgramStages = 64;

// Recursive-descent parse. Keywords are case-insensitive. Errors are
// ParseError with 1-based line/column and the offending token.
QueryProgram parse_program(std::string_view text);

// Canonical form: upper-case keywords, single spaces, " | " between stages.
// parse_program(print_program(p)) == p.
std::string print_program(const QueryProgram& program);

// Stage count; suites report it as query complexity.
size_t operation_count(const QueryProgram& program);

// Compact grammar description for system prompts. Placeholder identifiers
// only, so prompts can promise each schema column appears exactly once.
std::string grammar_summary();

// --- validation ---------------------------------------------------------

// Compiled DERIVE expression: column references resolved to indices.
struct ExprNode {
  enum class Op { column, literal, add, sub, mul, div, neg, years_between };
  Op op;
  size_t col = SIZE_MAX;           // column / years_between source
  Value literal;                   // literal
  std::optional<Date> reference;   // years_between: nullopt = context date
  ColumnKind result_kind = ColumnKind::integer;
  std::vector<ExprNode> kids;
};

struct ValidatedStage {
  size_t col = SIZE_MAX;              // filter / aggregate target / sort
  ColumnKind col_kind = ColumnKind::text;
  std::vector<size_t> cols;           // group by / select
  std::optional<ExprNode> expr;       // derive
};

// A program bound to an input schema: every column reference resolved
// against the schema as it evolves stage by stage.
struct ValidatedProgram {
  QueryProgram program;
  Schema input_schema;
  std::vector<ValidatedStage> stages;
  bool scalar_result = false;
  ColumnKind scalar_kind = ColumnKind::integer;  // when scalar_result
  Schema output_schema;                          // when tabular
};

// Structural and type checks; throws Error(errc::validate_error) naming the
// 1-based stage and column. Rules beyond column resolution: at most one
// GROUP BY and it must be immediately followed by AGGREGATE; an ungrouped
// AGGREGATE ends the program; after a grouped AGGREGATE only SORT/LIMIT;
// '*' only with COUNT; DERIVE may not redefine an existing column.
ValidatedProgram validate_program(const QueryProgram& program, const Schema& schema);

// --- execution ----------------------------------------------------------

struct ExecutionContext {
  Date reference_date;
};

using QueryResult = std::variant<Value, Table>;

// Deterministic evaluation. Filters drop null cells; aggregates skip nulls
// (COUNT(*) counts rows, COUNT(col) counts non-nulls, empty input is an
// error except COUNT -> 0); MEDIAN of an even count is the mean of the two
// middle values; division by zero and negative ages abort with the row
// index; sorts are stable with nulls first ascending.
QueryResult execute_program(const ValidatedProgram& vp, const Table& input,
                            const ExecutionContext& ctx);

// Scalar -> canonical scalar text; table -> CSV text (no trailing newline).
std::string render_result(const QueryResult& result);

}  // namespace cliniq::query
