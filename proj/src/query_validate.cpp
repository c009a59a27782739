#include "cliniq/error.hpp"
#include "cliniq/query.hpp"

#include <set>

namespace cliniq::query {

namespace {

[[noreturn]] void fail(size_t stage_idx, const std::string& what) {
  throw Error(errc::validate_error,
              "stage " + std::to_string(stage_idx + 1) + ": " + what);
}

bool is_numeric(ColumnKind k) {
  return k == ColumnKind::integer || k == ColumnKind::floating;
}

struct Checker {
  const Schema& input;
  ValidatedProgram out;
  Schema cur;                 // schema after the stages seen so far
  bool grouped = false;       // a GROUP BY was consumed by its AGGREGATE
  bool aggregated = false;    // an AGGREGATE ran (cur reflects its output)
  bool scalar = false;        // ungrouped aggregate: result is one value

  size_t resolve(size_t idx, const std::string& name) {
    auto col = cur.index_of(name);
    if (!col) fail(idx, "unknown column \"" + name + "\"");
    return *col;
  }

  ColumnKind literal_kind(const Value& v) {
    switch (v.index()) {
      case 1: return ColumnKind::integer;
      case 2: return ColumnKind::floating;
      case 3: return ColumnKind::text;
      case 4: return ColumnKind::date;
      default: return ColumnKind::boolean;
    }
  }

  void check_filter(size_t idx, const FilterStage& st, ValidatedStage& vs) {
    vs.col = resolve(idx, st.column);
    ColumnKind ck = cur.columns[vs.col].kind;
    ColumnKind lk = literal_kind(st.literal);
    vs.col_kind = ck;

    if (st.cmp == Comparator::contains) {
      if (ck != ColumnKind::text || lk != ColumnKind::text) {
        fail(idx, "CONTAINS needs a string column and a string literal; \"" +
                      st.column + "\" is " + kind_name(ck));
      }
      return;
    }
    bool ordered = st.cmp == Comparator::lt || st.cmp == Comparator::le ||
                   st.cmp == Comparator::gt || st.cmp == Comparator::ge;
    if (is_numeric(ck)) {
      if (!is_numeric(lk)) {
        fail(idx, "column \"" + st.column + "\" is " + std::string(kind_name(ck)) +
                      " but the literal is " + kind_name(lk));
      }
      return;
    }
    if (ck == ColumnKind::date) {
      if (lk != ColumnKind::date) {
        fail(idx, "column \"" + st.column + "\" is a date but the literal is " +
                      std::string(kind_name(lk)));
      }
      return;
    }
    if (ordered) {
      fail(idx, "ordering comparison on " + std::string(kind_name(ck)) +
                    " column \"" + st.column + "\"");
    }
    if (ck != lk) {
      fail(idx, "column \"" + st.column + "\" is " + std::string(kind_name(ck)) +
                    " but the literal is " + kind_name(lk));
    }
  }

  ExprNode compile_arith(size_t idx, const ArithPtr& node) {
    ExprNode e;
    switch (node->op) {
      case ArithNode::Op::column: {
        e.op = ExprNode::Op::column;
        e.col = resolve(idx, node->column);
        ColumnKind k = cur.columns[e.col].kind;
        if (!is_numeric(k)) {
          fail(idx, "arithmetic over non-numeric column \"" + node->column +
                        "\" (" + kind_name(k) + ")");
        }
        e.result_kind = k;
        return e;
      }
      case ArithNode::Op::literal:
        e.op = ExprNode::Op::literal;
        e.literal = node->literal;
        e.result_kind = std::holds_alternative<int64_t>(node->literal)
                            ? ColumnKind::integer
                            : ColumnKind::floating;
        return e;
      case ArithNode::Op::neg:
        e.op = ExprNode::Op::neg;
        e.kids.push_back(compile_arith(idx, node->lhs));
        e.result_kind = e.kids[0].result_kind;
        return e;
      default: {
        switch (node->op) {
          case ArithNode::Op::add: e.op = ExprNode::Op::add; break;
          case ArithNode::Op::sub: e.op = ExprNode::Op::sub; break;
          case ArithNode::Op::mul: e.op = ExprNode::Op::mul; break;
          default: e.op = ExprNode::Op::div; break;
        }
        e.kids.push_back(compile_arith(idx, node->lhs));
        e.kids.push_back(compile_arith(idx, node->rhs));
        // Division always widens; other ops stay integral on integral inputs.
        if (e.op == ExprNode::Op::div ||
            e.kids[0].result_kind == ColumnKind::floating ||
            e.kids[1].result_kind == ColumnKind::floating) {
          e.result_kind = ColumnKind::floating;
        } else {
          e.result_kind = ColumnKind::integer;
        }
        return e;
      }
    }
  }

  void check_derive(size_t idx, const DeriveStage& st, ValidatedStage& vs) {
    if (cur.contains(st.new_column)) {
      fail(idx, "column \"" + st.new_column + "\" already exists");
    }
    ExprNode compiled;
    if (const auto* yb = std::get_if<YearsBetween>(&st.expr)) {
      compiled.op = ExprNode::Op::years_between;
      compiled.col = resolve(idx, yb->date_column);
      if (cur.columns[compiled.col].kind != ColumnKind::date) {
        fail(idx, "YEARS_BETWEEN needs a date column; \"" + yb->date_column +
                      "\" is " + kind_name(cur.columns[compiled.col].kind));
      }
      compiled.reference = yb->reference;
      compiled.result_kind = ColumnKind::integer;
    } else {
      compiled = compile_arith(idx, std::get<ArithPtr>(st.expr));
    }
    cur.columns.push_back({st.new_column, compiled.result_kind});
    vs.expr = std::move(compiled);
  }

  void check_group_by(size_t idx, const GroupByStage& st, ValidatedStage& vs,
                      const QueryProgram& prog) {
    std::set<std::string> seen;
    for (const std::string& name : st.columns) {
      if (!seen.insert(name).second) {
        fail(idx, "duplicate column \"" + name + "\" in GROUP BY");
      }
      vs.cols.push_back(resolve(idx, name));
    }
    if (idx + 1 >= prog.stages.size() ||
        !std::holds_alternative<AggregateStage>(prog.stages[idx + 1])) {
      fail(idx, "GROUP BY must be immediately followed by AGGREGATE");
    }
  }

  void check_aggregate(size_t idx, const AggregateStage& st, ValidatedStage& vs,
                       const std::vector<size_t>& group_cols) {
    if (!st.target) {
      if (st.func != AggFunc::count) {
        fail(idx, std::string(agg_func_name(st.func)) + "(*) is not defined; only COUNT(*)");
      }
      vs.col = SIZE_MAX;
    } else {
      vs.col = resolve(idx, *st.target);
      ColumnKind k = cur.columns[vs.col].kind;
      vs.col_kind = k;
      switch (st.func) {
        case AggFunc::sum:
        case AggFunc::mean:
        case AggFunc::median:
          if (!is_numeric(k)) {
            fail(idx, std::string(agg_func_name(st.func)) + " needs a numeric column; \"" +
                          *st.target + "\" is " + kind_name(k));
          }
          break;
        case AggFunc::min:
        case AggFunc::max:
          if (!is_numeric(k) && k != ColumnKind::date) {
            fail(idx, std::string(agg_func_name(st.func)) +
                          " needs a numeric or date column; \"" + *st.target + "\" is " +
                          kind_name(k));
          }
          break;
        default:
          break;  // COUNT / COUNT_DISTINCT accept any kind
      }
    }

    ColumnKind result;
    switch (st.func) {
      case AggFunc::count:
      case AggFunc::count_distinct: result = ColumnKind::integer; break;
      case AggFunc::sum:
        result = vs.col_kind == ColumnKind::integer ? ColumnKind::integer
                                                    : ColumnKind::floating;
        break;
      case AggFunc::mean:
      case AggFunc::median: result = ColumnKind::floating; break;
      default: result = vs.col_kind; break;  // MIN / MAX keep the column kind
    }

    if (!group_cols.empty()) {
      Schema next;
      for (size_t c : group_cols) next.columns.push_back(cur.columns[c]);
      std::string agg_name = agg_func_name(st.func);
      if (st.target) agg_name += "_" + *st.target;
      if (next.contains(agg_name)) agg_name += "_2";
      next.columns.push_back({agg_name, result});
      cur = std::move(next);
      grouped = true;
    } else {
      scalar = true;
      out.scalar_kind = result;
    }
    aggregated = true;
  }

  ValidatedProgram run(const QueryProgram& prog) {
    if (prog.stages.empty()) {
      throw Error(errc::validate_error, "program has no stages");
    }
    if (prog.stages.size() > kMaxProgramStages) {
      throw Error(errc::validate_error, "program exceeds stage limit");
    }
    input.require_valid();
    out.program = prog;
    out.input_schema = input;
    cur = input;

    bool seen_group_by = false;
    std::vector<size_t> pending_group;

    for (size_t i = 0; i < prog.stages.size(); ++i) {
      ValidatedStage vs;
      const Stage& stage = prog.stages[i];

      if (scalar) {
        fail(i, "no stage may follow an ungrouped AGGREGATE (scalar result)");
      }
      if (aggregated && !std::holds_alternative<SortStage>(stage) &&
          !std::holds_alternative<LimitStage>(stage)) {
        fail(i, "only SORT or LIMIT may follow AGGREGATE");
      }

      if (const auto* st = std::get_if<FilterStage>(&stage)) {
        check_filter(i, *st, vs);
      } else if (const auto* st = std::get_if<DeriveStage>(&stage)) {
        check_derive(i, *st, vs);
      } else if (const auto* st = std::get_if<GroupByStage>(&stage)) {
        if (seen_group_by) fail(i, "a program may contain at most one GROUP BY");
        seen_group_by = true;
        check_group_by(i, *st, vs, prog);
        pending_group = vs.cols;
      } else if (const auto* st = std::get_if<AggregateStage>(&stage)) {
        check_aggregate(i, *st, vs, pending_group);
        pending_group.clear();
      } else if (const auto* st = std::get_if<SelectStage>(&stage)) {
        std::set<std::string> seen;
        for (const std::string& name : st->columns) {
          if (!seen.insert(name).second) {
            fail(i, "duplicate column \"" + name + "\" in SELECT");
          }
          vs.cols.push_back(resolve(i, name));
        }
        Schema next;
        for (size_t c : vs.cols) next.columns.push_back(cur.columns[c]);
        cur = std::move(next);
      } else if (const auto* st = std::get_if<SortStage>(&stage)) {
        vs.col = resolve(i, st->column);
        vs.col_kind = cur.columns[vs.col].kind;
      } else if (const auto* st = std::get_if<LimitStage>(&stage)) {
        if (st->n < 0) fail(i, "LIMIT must be non-negative");
      }

      out.stages.push_back(std::move(vs));
    }

    out.scalar_result = scalar;
    if (!scalar) out.output_schema = cur;
    return out;
  }
};

}  // namespace

ValidatedProgram validate_program(const QueryProgram& program, const Schema& schema) {
  Checker checker{schema, {}, {}, false, false, false};
  return checker.run(program);
}

}  // namespace cliniq::query
