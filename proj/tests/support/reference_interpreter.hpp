#pragma once

// Independent row-scan interpreter used as the oracle for the query engine.
// It works directly off the parsed AST with name-keyed rows (no resolved
// indices, no shared execution code) and an iterative year-walk for ages, so
// agreement with the engine is meaningful.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "cliniq/query.hpp"
#include "cliniq/table.hpp"

namespace refinterp {

using cliniq::ColumnKind;
using cliniq::Date;
using cliniq::Row;
using cliniq::Table;
using cliniq::Value;

struct RefResult {
  bool failed = false;
  std::string error_category;  // validate | div_zero | empty_aggregate | negative_age
  bool is_scalar = false;
  Value scalar;
  Table table;
};

namespace detail {

struct RefError {
  std::string category;
};

// Named-cell row model: every lookup goes through the column-name map.
struct Frame {
  std::vector<std::string> order;            // column order
  std::map<std::string, ColumnKind> kinds;   // by name
  std::vector<std::map<std::string, Value>> rows;

  static Frame from_table(const Table& t) {
    Frame f;
    for (const auto& c : t.schema.columns) {
      f.order.push_back(c.name);
      f.kinds[c.name] = c.kind;
    }
    for (const Row& row : t.rows) {
      std::map<std::string, Value> named;
      for (size_t i = 0; i < row.size(); ++i) named[f.order[i]] = row[i];
      f.rows.push_back(std::move(named));
    }
    return f;
  }

  Table to_table() const {
    Table t;
    for (const std::string& name : order) {
      t.schema.columns.push_back({name, kinds.at(name)});
    }
    for (const auto& named : rows) {
      Row row;
      for (const std::string& name : order) row.push_back(named.at(name));
      t.rows.push_back(std::move(row));
    }
    return t;
  }
};

inline bool numeric_kind(ColumnKind k) {
  return k == ColumnKind::integer || k == ColumnKind::floating;
}

inline double number_of(const Value& v) {
  if (std::holds_alternative<int64_t>(v)) return double(std::get<int64_t>(v));
  return std::get<double>(v);
}

// Count anniversaries of dob that have occurred by ref, walking year by
// year and comparing month/day pairs.
inline int64_t year_walk(const Date& dob, const Date& ref) {
  if (dob.year > ref.year ||
      (dob.year == ref.year &&
       (dob.month > ref.month || (dob.month == ref.month && dob.day > ref.day)))) {
    throw RefError{"negative_age"};
  }
  int64_t age = 0;
  for (int32_t y = dob.year + 1; y <= ref.year; ++y) {
    bool reached = y < ref.year || dob.month < ref.month ||
                   (dob.month == ref.month && dob.day <= ref.day);
    if (reached) ++age;
  }
  return age;
}

inline int ref_compare(const Value& a, const Value& b) {
  bool an = cliniq::is_null(a), bn = cliniq::is_null(b);
  if (an || bn) return an == bn ? 0 : (an ? -1 : 1);
  bool a_num = std::holds_alternative<int64_t>(a) || std::holds_alternative<double>(a);
  bool b_num = std::holds_alternative<int64_t>(b) || std::holds_alternative<double>(b);
  if (a_num && b_num) {
    if (std::holds_alternative<int64_t>(a) && std::holds_alternative<int64_t>(b)) {
      auto x = std::get<int64_t>(a), y = std::get<int64_t>(b);
      return x < y ? -1 : x > y ? 1 : 0;
    }
    double x = number_of(a), y = number_of(b);
    return x < y ? -1 : x > y ? 1 : 0;
  }
  if (a.index() != b.index()) return a.index() < b.index() ? -1 : 1;
  if (std::holds_alternative<std::string>(a)) {
    return std::get<std::string>(a).compare(std::get<std::string>(b));
  }
  if (std::holds_alternative<Date>(a)) {
    const Date &x = std::get<Date>(a), &y = std::get<Date>(b);
    return x < y ? -1 : x > y ? 1 : 0;
  }
  if (std::holds_alternative<bool>(a)) {
    bool x = std::get<bool>(a), y = std::get<bool>(b);
    return x == y ? 0 : x ? 1 : -1;
  }
  return 0;
}

struct Engine {
  const cliniq::query::ExecutionContext& ctx;

  Value eval_arith(const cliniq::query::ArithPtr& node,
                   const std::map<std::string, Value>& row, bool& is_float) {
    using Op = cliniq::query::ArithNode::Op;
    switch (node->op) {
      case Op::column: {
        const Value& v = row.at(node->column);
        is_float = std::holds_alternative<double>(v) || is_float;
        return v;
      }
      case Op::literal:
        is_float = std::holds_alternative<double>(node->literal) || is_float;
        return node->literal;
      case Op::neg: {
        Value v = eval_arith(node->lhs, row, is_float);
        if (cliniq::is_null(v)) return v;
        if (std::holds_alternative<int64_t>(v)) return Value{-std::get<int64_t>(v)};
        return Value{-std::get<double>(v)};
      }
      default: {
        bool lf = false, rf = false;
        Value a = eval_arith(node->lhs, row, lf);
        Value b = eval_arith(node->rhs, row, rf);
        is_float = is_float || lf || rf || node->op == Op::div;
        if (cliniq::is_null(a) || cliniq::is_null(b)) return Value{};
        if (node->op == Op::div) {
          double d = number_of(b);
          if (d == 0.0) throw RefError{"div_zero"};
          return Value{number_of(a) / d};
        }
        if (!lf && !rf) {
          int64_t x = std::get<int64_t>(a), y = std::get<int64_t>(b);
          if (node->op == Op::add) return Value{x + y};
          if (node->op == Op::sub) return Value{x - y};
          return Value{x * y};
        }
        double x = number_of(a), y = number_of(b);
        if (node->op == Op::add) return Value{x + y};
        if (node->op == Op::sub) return Value{x - y};
        return Value{x * y};
      }
    }
  }

  Value aggregate(const cliniq::query::AggregateStage& st, const Frame& f,
                  const std::vector<size_t>& members) {
    using cliniq::query::AggFunc;
    if (!st.target) return Value{int64_t(members.size())};
    std::vector<Value> cells;
    for (size_t r : members) {
      const Value& v = f.rows[r].at(*st.target);
      if (!cliniq::is_null(v)) cells.push_back(v);
    }
    if (st.func == AggFunc::count) return Value{int64_t(cells.size())};
    if (st.func == AggFunc::count_distinct) {
      std::vector<Value> sorted = cells;
      std::sort(sorted.begin(), sorted.end(),
                [](const Value& a, const Value& b) { return ref_compare(a, b) < 0; });
      sorted.erase(std::unique(sorted.begin(), sorted.end(),
                               [](const Value& a, const Value& b) {
                                 return ref_compare(a, b) == 0;
                               }),
                   sorted.end());
      return Value{int64_t(sorted.size())};
    }
    if (cells.empty()) throw RefError{"empty_aggregate"};
    switch (st.func) {
      case AggFunc::sum: {
        bool any_float = false;
        for (const Value& v : cells) any_float |= std::holds_alternative<double>(v);
        if (!any_float) {
          int64_t acc = 0;
          for (const Value& v : cells) acc += std::get<int64_t>(v);
          return Value{acc};
        }
        double acc = 0;
        for (const Value& v : cells) acc += number_of(v);
        return Value{acc};
      }
      case AggFunc::mean: {
        double acc = 0;
        for (const Value& v : cells) acc += number_of(v);
        return Value{acc / double(cells.size())};
      }
      case AggFunc::median: {
        std::vector<double> xs;
        for (const Value& v : cells) xs.push_back(number_of(v));
        std::sort(xs.begin(), xs.end());
        size_t n = xs.size();
        return n % 2 ? Value{xs[n / 2]} : Value{(xs[n / 2 - 1] + xs[n / 2]) / 2.0};
      }
      case AggFunc::min:
      case AggFunc::max: {
        Value best = cells[0];
        for (const Value& v : cells) {
          int c = ref_compare(v, best);
          if (st.func == AggFunc::min ? c < 0 : c > 0) best = v;
        }
        return best;
      }
      default:
        throw RefError{"validate"};
    }
  }
};

}  // namespace detail

inline RefResult run_reference(const cliniq::query::QueryProgram& prog,
                               const Table& input,
                               const cliniq::query::ExecutionContext& ctx) {
  using namespace detail;
  using namespace cliniq::query;

  RefResult out;
  Frame f = Frame::from_table(input);
  Engine eng{ctx};
  std::vector<std::string> pending_group;

  try {
    for (size_t i = 0; i < prog.stages.size(); ++i) {
      const Stage& stage = prog.stages[i];

      if (const auto* st = std::get_if<FilterStage>(&stage)) {
        std::vector<std::map<std::string, Value>> kept;
        for (auto& row : f.rows) {
          const Value& cell = row.at(st->column);
          if (cliniq::is_null(cell)) continue;
          bool keep = false;
          if (st->cmp == Comparator::contains) {
            keep = std::get<std::string>(cell).find(std::get<std::string>(st->literal)) !=
                   std::string::npos;
          } else {
            int c = ref_compare(cell, st->literal);
            switch (st->cmp) {
              case Comparator::eq: keep = c == 0; break;
              case Comparator::ne: keep = c != 0; break;
              case Comparator::lt: keep = c < 0; break;
              case Comparator::le: keep = c <= 0; break;
              case Comparator::gt: keep = c > 0; break;
              case Comparator::ge: keep = c >= 0; break;
              default: break;
            }
          }
          if (keep) kept.push_back(std::move(row));
        }
        f.rows = std::move(kept);

      } else if (const auto* st = std::get_if<DeriveStage>(&stage)) {
        if (const auto* yb = std::get_if<YearsBetween>(&st->expr)) {
          Date ref = yb->reference ? *yb->reference : ctx.reference_date;
          for (auto& row : f.rows) {
            const Value& v = row.at(yb->date_column);
            row[st->new_column] =
                cliniq::is_null(v) ? Value{} : Value{year_walk(std::get<Date>(v), ref)};
          }
          f.kinds[st->new_column] = ColumnKind::integer;
        } else {
          const auto& expr = std::get<ArithPtr>(st->expr);
          std::vector<Value> results;
          for (auto& row : f.rows) {
            bool rf = false;
            Value v = eng.eval_arith(expr, row, rf);
            results.push_back(std::move(v));
          }
          // Kind depends on the expression, not on row data: recompute like
          // the printer sees it (div or any float literal/column).
          std::function<bool(const ArithPtr&)> has_float = [&](const ArithPtr& n) {
            using Op = ArithNode::Op;
            switch (n->op) {
              case Op::column: return f.kinds.at(n->column) == ColumnKind::floating;
              case Op::literal: return std::holds_alternative<double>(n->literal);
              case Op::neg: return has_float(n->lhs);
              case Op::div: return true;
              default: return has_float(n->lhs) || has_float(n->rhs);
            }
          };
          bool is_float = has_float(expr);
          for (size_t r = 0; r < f.rows.size(); ++r) {
            Value v = results[r];
            if (is_float && std::holds_alternative<int64_t>(v)) {
              v = Value{double(std::get<int64_t>(v))};
            }
            f.rows[r][st->new_column] = std::move(v);
          }
          f.kinds[st->new_column] =
              is_float ? ColumnKind::floating : ColumnKind::integer;
        }
        f.order.push_back(st->new_column);

      } else if (const auto* st = std::get_if<GroupByStage>(&stage)) {
        pending_group = st->columns;

      } else if (const auto* st = std::get_if<AggregateStage>(&stage)) {
        if (pending_group.empty()) {
          std::vector<size_t> all(f.rows.size());
          for (size_t r = 0; r < all.size(); ++r) all[r] = r;
          out.is_scalar = true;
          out.scalar = eng.aggregate(*st, f, all);
          return out;
        }
        std::vector<std::vector<Value>> keys;
        std::vector<std::vector<size_t>> members;
        for (size_t r = 0; r < f.rows.size(); ++r) {
          std::vector<Value> key;
          for (const std::string& c : pending_group) key.push_back(f.rows[r].at(c));
          size_t g = keys.size();
          for (size_t k = 0; k < keys.size(); ++k) {
            bool same = true;
            for (size_t j = 0; j < key.size() && same; ++j) {
              same = ref_compare(keys[k][j], key[j]) == 0;
            }
            if (same) {
              g = k;
              break;
            }
          }
          if (g == keys.size()) {
            keys.push_back(key);
            members.emplace_back();
          }
          members[g].push_back(r);
        }

        Frame next;
        std::string agg_name = agg_func_name(st->func);
        if (st->target) agg_name += "_" + *st->target;
        for (const std::string& c : pending_group) {
          next.order.push_back(c);
          next.kinds[c] = f.kinds.at(c);
        }
        bool collide = false;
        for (const std::string& c : pending_group) collide |= c == agg_name;
        if (collide) agg_name += "_2";
        next.order.push_back(agg_name);
        ColumnKind agg_kind;
        switch (st->func) {
          case AggFunc::count:
          case AggFunc::count_distinct: agg_kind = ColumnKind::integer; break;
          case AggFunc::sum:
            agg_kind = f.kinds.at(*st->target) == ColumnKind::integer
                           ? ColumnKind::integer
                           : ColumnKind::floating;
            break;
          case AggFunc::mean:
          case AggFunc::median: agg_kind = ColumnKind::floating; break;
          default: agg_kind = f.kinds.at(*st->target); break;
        }
        next.kinds[agg_name] = agg_kind;
        for (size_t g = 0; g < keys.size(); ++g) {
          std::map<std::string, Value> row;
          for (size_t j = 0; j < pending_group.size(); ++j) row[pending_group[j]] = keys[g][j];
          row[agg_name] = eng.aggregate(*st, f, members[g]);
          next.rows.push_back(std::move(row));
        }
        f = std::move(next);
        pending_group.clear();

      } else if (const auto* st = std::get_if<SelectStage>(&stage)) {
        Frame next;
        for (const std::string& c : st->columns) {
          next.order.push_back(c);
          next.kinds[c] = f.kinds.at(c);
        }
        for (const auto& row : f.rows) {
          std::map<std::string, Value> out_row;
          for (const std::string& c : st->columns) out_row[c] = row.at(c);
          next.rows.push_back(std::move(out_row));
        }
        f = std::move(next);

      } else if (const auto* st = std::get_if<SortStage>(&stage)) {
        bool asc = st->dir == SortDir::asc;
        std::stable_sort(f.rows.begin(), f.rows.end(),
                         [&](const auto& a, const auto& b) {
                           int c = ref_compare(a.at(st->column), b.at(st->column));
                           return asc ? c < 0 : c > 0;
                         });

      } else if (const auto* st = std::get_if<LimitStage>(&stage)) {
        if (size_t(st->n) < f.rows.size()) f.rows.resize(size_t(st->n));
      }
    }
  } catch (const RefError& e) {
    out.failed = true;
    out.error_category = e.category;
    return out;
  }

  out.table = f.to_table();
  return out;
}

}  // namespace refinterp
