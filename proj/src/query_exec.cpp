#include <algorithm>
#include <map>
#include <set>

#include "cliniq/csv.hpp"
#include "cliniq/error.hpp"
#include "cliniq/query.hpp"

namespace cliniq::query {

namespace {

[[noreturn]] void exec_fail(errc code, size_t stage_idx, size_t row_idx,
                            const std::string& what) {
  throw Error(code, "stage " + std::to_string(stage_idx + 1) + ", row " +
                        std::to_string(row_idx) + ": " + what);
}

double as_double(const Value& v) {
  return std::holds_alternative<int64_t>(v) ? static_cast<double>(std::get<int64_t>(v))
                                            : std::get<double>(v);
}

bool filter_keep(const FilterStage& st, const Value& cell) {
  if (is_null(cell)) return false;  // null never satisfies a filter
  if (st.cmp == Comparator::contains) {
    return std::get<std::string>(cell).find(std::get<std::string>(st.literal)) !=
           std::string::npos;
  }
  int c = compare_values(cell, st.literal);
  switch (st.cmp) {
    case Comparator::eq: return c == 0;
    case Comparator::ne: return c != 0;
    case Comparator::lt: return c < 0;
    case Comparator::le: return c <= 0;
    case Comparator::gt: return c > 0;
    case Comparator::ge: return c >= 0;
    default: return false;
  }
}

// Nulls propagate; arithmetic follows the validated result kinds.
Value eval_expr(const ExprNode& e, const Row& row, const ExecutionContext& ctx,
                size_t stage_idx, size_t row_idx) {
  switch (e.op) {
    case ExprNode::Op::column:
      return row[e.col];
    case ExprNode::Op::literal:
      return e.literal;
    case ExprNode::Op::years_between: {
      const Value& cell = row[e.col];
      if (is_null(cell)) return Value{};
      Date ref = e.reference ? *e.reference : ctx.reference_date;
      try {
        return Value{years_between(std::get<Date>(cell), ref)};
      } catch (const Error& err) {
        exec_fail(err.code(), stage_idx, row_idx, err.what());
      }
    }
    case ExprNode::Op::neg: {
      Value v = eval_expr(e.kids[0], row, ctx, stage_idx, row_idx);
      if (is_null(v)) return v;
      if (std::holds_alternative<int64_t>(v)) return Value{-std::get<int64_t>(v)};
      return Value{-std::get<double>(v)};
    }
    default: {
      Value a = eval_expr(e.kids[0], row, ctx, stage_idx, row_idx);
      Value b = eval_expr(e.kids[1], row, ctx, stage_idx, row_idx);
      if (is_null(a) || is_null(b)) return Value{};
      if (e.op == ExprNode::Op::div) {
        double d = as_double(b);
        if (d == 0.0) {
          exec_fail(errc::exec_div_by_zero, stage_idx, row_idx, "division by zero");
        }
        return Value{as_double(a) / d};
      }
      if (e.result_kind == ColumnKind::integer) {
        int64_t x = std::get<int64_t>(a), y = std::get<int64_t>(b);
        switch (e.op) {
          case ExprNode::Op::add: return Value{x + y};
          case ExprNode::Op::sub: return Value{x - y};
          default: return Value{x * y};
        }
      }
      double x = as_double(a), y = as_double(b);
      switch (e.op) {
        case ExprNode::Op::add: return Value{x + y};
        case ExprNode::Op::sub: return Value{x - y};
        default: return Value{x * y};
      }
    }
  }
}

// Aggregate over the target cells of the given rows. row_indices selects the
// group; col == SIZE_MAX means COUNT(*).
Value aggregate_rows(const AggregateStage& st, const std::vector<Row>& rows,
                     const std::vector<size_t>& row_indices, size_t col,
                     ColumnKind col_kind, size_t stage_idx) {
  if (!st.target) {  // COUNT(*)
    return Value{static_cast<int64_t>(row_indices.size())};
  }

  std::vector<const Value*> cells;
  cells.reserve(row_indices.size());
  for (size_t r : row_indices) {
    if (!is_null(rows[r][col])) cells.push_back(&rows[r][col]);
  }

  if (st.func == AggFunc::count) return Value{static_cast<int64_t>(cells.size())};
  if (st.func == AggFunc::count_distinct) {
    std::set<Value, ValueLess> distinct;
    for (const Value* v : cells) distinct.insert(*v);
    return Value{static_cast<int64_t>(distinct.size())};
  }

  if (cells.empty()) {
    throw Error(errc::exec_empty_aggregate,
                "stage " + std::to_string(stage_idx + 1) + ": " +
                    agg_func_name(st.func) + "(" + *st.target +
                    ") over zero non-null values");
  }

  switch (st.func) {
    case AggFunc::sum: {
      if (col_kind == ColumnKind::integer) {
        int64_t acc = 0;
        for (const Value* v : cells) acc += std::get<int64_t>(*v);
        return Value{acc};
      }
      double acc = 0;
      for (const Value* v : cells) acc += as_double(*v);
      return Value{acc};
    }
    case AggFunc::mean: {
      double acc = 0;
      for (const Value* v : cells) acc += as_double(*v);
      return Value{acc / static_cast<double>(cells.size())};
    }
    case AggFunc::median: {
      std::vector<double> xs;
      xs.reserve(cells.size());
      for (const Value* v : cells) xs.push_back(as_double(*v));
      std::sort(xs.begin(), xs.end());
      size_t n = xs.size();
      if (n % 2 == 1) return Value{xs[n / 2]};
      return Value{(xs[n / 2 - 1] + xs[n / 2]) / 2.0};
    }
    case AggFunc::min:
    case AggFunc::max: {
      const Value* best = cells[0];
      for (const Value* v : cells) {
        int c = compare_values(*v, *best);
        if (st.func == AggFunc::min ? c < 0 : c > 0) best = v;
      }
      return *best;
    }
    default:
      throw Error(errc::validate_error, "unreachable aggregate");
  }
}

}  // namespace

QueryResult execute_program(const ValidatedProgram& vp, const Table& input,
                            const ExecutionContext& ctx) {
  if (input.schema != vp.input_schema) {
    throw Error(errc::validate_error,
                "table schema does not match the schema the program was validated against");
  }

  Table work = input;
  std::vector<size_t> pending_group;  // column indices from a GROUP BY stage

  for (size_t i = 0; i < vp.program.stages.size(); ++i) {
    const Stage& stage = vp.program.stages[i];
    const ValidatedStage& vs = vp.stages[i];

    if (const auto* st = std::get_if<FilterStage>(&stage)) {
      std::vector<Row> kept;
      kept.reserve(work.rows.size());
      for (Row& row : work.rows) {
        if (filter_keep(*st, row[vs.col])) kept.push_back(std::move(row));
      }
      work.rows = std::move(kept);

    } else if (const auto* st = std::get_if<DeriveStage>(&stage)) {
      work.schema.columns.push_back({st->new_column, vs.expr->result_kind});
      for (size_t r = 0; r < work.rows.size(); ++r) {
        work.rows[r].push_back(eval_expr(*vs.expr, work.rows[r], ctx, i, r));
      }

    } else if (std::holds_alternative<GroupByStage>(stage)) {
      pending_group = vs.cols;

    } else if (const auto* st = std::get_if<AggregateStage>(&stage)) {
      if (pending_group.empty()) {
        std::vector<size_t> all(work.rows.size());
        for (size_t r = 0; r < all.size(); ++r) all[r] = r;
        return aggregate_rows(*st, work.rows, all, vs.col, vs.col_kind, i);
      }
      // Groups in first-appearance order.
      std::map<Row, size_t, bool (*)(const Row&, const Row&)> group_of(
          [](const Row& a, const Row& b) {
            for (size_t k = 0; k < a.size(); ++k) {
              int c = compare_values(a[k], b[k]);
              if (c) return c < 0;
            }
            return false;
          });
      std::vector<Row> keys;
      std::vector<std::vector<size_t>> members;
      for (size_t r = 0; r < work.rows.size(); ++r) {
        Row key;
        key.reserve(pending_group.size());
        for (size_t c : pending_group) key.push_back(work.rows[r][c]);
        auto [it, inserted] = group_of.try_emplace(std::move(key), keys.size());
        if (inserted) {
          keys.push_back(it->first);
          members.emplace_back();
        }
        members[it->second].push_back(r);
      }

      Table next;
      for (size_t c : pending_group) next.schema.columns.push_back(work.schema.columns[c]);
      std::string agg_name = agg_func_name(st->func);
      if (st->target) agg_name += "_" + *st->target;
      if (next.schema.contains(agg_name)) agg_name += "_2";
      ColumnKind agg_kind;
      {
        // Mirror the validator's result-kind rule.
        switch (st->func) {
          case AggFunc::count:
          case AggFunc::count_distinct: agg_kind = ColumnKind::integer; break;
          case AggFunc::sum:
            agg_kind = vs.col_kind == ColumnKind::integer ? ColumnKind::integer
                                                          : ColumnKind::floating;
            break;
          case AggFunc::mean:
          case AggFunc::median: agg_kind = ColumnKind::floating; break;
          default: agg_kind = vs.col_kind; break;
        }
      }
      next.schema.columns.push_back({agg_name, agg_kind});
      next.rows.reserve(keys.size());
      for (size_t g = 0; g < keys.size(); ++g) {
        Row row = keys[g];
        row.push_back(aggregate_rows(*st, work.rows, members[g], vs.col, vs.col_kind, i));
        next.rows.push_back(std::move(row));
      }
      work = std::move(next);
      pending_group.clear();

    } else if (const auto* st = std::get_if<SelectStage>(&stage)) {
      (void)st;
      Table next;
      for (size_t c : vs.cols) next.schema.columns.push_back(work.schema.columns[c]);
      next.rows.reserve(work.rows.size());
      for (const Row& row : work.rows) {
        Row out;
        out.reserve(vs.cols.size());
        for (size_t c : vs.cols) out.push_back(row[c]);
        next.rows.push_back(std::move(out));
      }
      work = std::move(next);

    } else if (const auto* st = std::get_if<SortStage>(&stage)) {
      bool asc = st->dir == SortDir::asc;
      std::stable_sort(work.rows.begin(), work.rows.end(),
                       [&](const Row& a, const Row& b) {
                         int c = compare_values(a[vs.col], b[vs.col]);
                         return asc ? c < 0 : c > 0;
                       });

    } else if (const auto* st = std::get_if<LimitStage>(&stage)) {
      if (static_cast<size_t>(st->n) < work.rows.size()) {
        work.rows.resize(static_cast<size_t>(st->n));
      }
    }
  }

  return work;
}

std::string render_result(const QueryResult& result) {
  if (const auto* v = std::get_if<Value>(&result)) return render_scalar(*v);
  std::string text = tabular::csv_to_string(std::get<Table>(result));
  if (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

}  // namespace cliniq::query
