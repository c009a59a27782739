#include <cctype>
#include <charconv>

#include "cliniq/error.hpp"
#include "cliniq/query.hpp"

namespace cliniq::query {

const char* comparator_text(Comparator c) {
  switch (c) {
    case Comparator::eq: return "==";
    case Comparator::ne: return "!=";
    case Comparator::lt: return "<";
    case Comparator::le: return "<=";
    case Comparator::gt: return ">";
    case Comparator::ge: return ">=";
    case Comparator::contains: return "CONTAINS";
  }
  return "?";
}

const char* agg_func_name(AggFunc f) {
  switch (f) {
    case AggFunc::count: return "COUNT";
    case AggFunc::sum: return "SUM";
    case AggFunc::mean: return "MEAN";
    case AggFunc::median: return "MEDIAN";
    case AggFunc::min: return "MIN";
    case AggFunc::max: return "MAX";
    case AggFunc::count_distinct: return "COUNT_DISTINCT";
  }
  return "?";
}

bool arith_equal(const ArithPtr& a, const ArithPtr& b) {
  if (!a || !b) return !a && !b;
  if (a->op != b->op) return false;
  switch (a->op) {
    case ArithNode::Op::column:
      return a->column == b->column;
    case ArithNode::Op::literal:
      return a->literal == b->literal;
    case ArithNode::Op::neg:
      return arith_equal(a->lhs, b->lhs);
    default:
      return arith_equal(a->lhs, b->lhs) && arith_equal(a->rhs, b->rhs);
  }
}

bool DeriveStage::operator==(const DeriveStage& o) const {
  if (new_column != o.new_column) return false;
  if (expr.index() != o.expr.index()) return false;
  if (std::holds_alternative<YearsBetween>(expr)) {
    return std::get<YearsBetween>(expr) == std::get<YearsBetween>(o.expr);
  }
  return arith_equal(std::get<ArithPtr>(expr), std::get<ArithPtr>(o.expr));
}

namespace {

enum class Tok {
  ident,     // bare word: stage keywords, columns, function names
  number,    // unsigned numeric literal (sign is a separate minus token)
  string,    // double-quoted, escapes resolved
  date,      // YYYY-MM-DD
  at_ref,    // @ref
  pipe, lparen, rparen, comma, assign,
  eq, ne, lt, le, gt, ge,
  plus, minus, star, slash,
  end,
};

struct Token {
  Tok kind;
  std::string text;      // raw text for errors; resolved content for strings
  bool is_int = false;   // number: fits the integer shape
  int64_t int_value = 0;
  double float_value = 0.0;
  Date date_value;
  int line = 1;
  int column = 1;
};

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'a' && c <= 'z') c -= 32;
  }
  return out;
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t = next();
      bool done = t.kind == Tok::end;
      out.push_back(std::move(t));
      if (done) return out;
    }
  }

 private:
  [[noreturn]] void fail(const std::string& what, std::string token = "") {
    throw ParseError(line_, col_, std::move(token), "line " + std::to_string(line_) +
                     ", column " + std::to_string(col_) + ": " + what);
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '\n') {
        ++line_;
        col_ = 1;
        ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\r') {
        ++col_;
        ++pos_;
      } else {
        return;
      }
    }
  }

  char peek(size_t ahead = 0) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }

  char advance() {
    char c = text_[pos_++];
    ++col_;
    return c;
  }

  Token base_token(Tok kind) const {
    Token t;
    t.kind = kind;
    t.line = line_;
    t.column = col_;
    return t;
  }

  Token next() {
    if (pos_ >= text_.size()) return base_token(Tok::end);
    Token t = base_token(Tok::end);
    char c = peek();

    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
        advance();
      }
      t.kind = Tok::ident;
      t.text = std::string(text_.substr(start, pos_ - start));
      return t;
    }

    if (std::isdigit(static_cast<unsigned char>(c))) return lex_number_or_date(t);

    switch (c) {
      case '"': return lex_string(t);
      case '@': {
        advance();
        size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
          advance();
        }
        std::string name(text_.substr(start, pos_ - start));
        if (upper(name) != "REF") fail("unknown reference \"@" + name + "\"", "@" + name);
        t.kind = Tok::at_ref;
        t.text = "@ref";
        return t;
      }
      case '|': advance(); t.kind = Tok::pipe; t.text = "|"; return t;
      case '(': advance(); t.kind = Tok::lparen; t.text = "("; return t;
      case ')': advance(); t.kind = Tok::rparen; t.text = ")"; return t;
      case ',': advance(); t.kind = Tok::comma; t.text = ","; return t;
      case '+': advance(); t.kind = Tok::plus; t.text = "+"; return t;
      case '-': advance(); t.kind = Tok::minus; t.text = "-"; return t;
      case '*': advance(); t.kind = Tok::star; t.text = "*"; return t;
      case '/': advance(); t.kind = Tok::slash; t.text = "/"; return t;
      case '=':
        advance();
        if (peek() == '=') {
          advance();
          t.kind = Tok::eq;
          t.text = "==";
        } else {
          t.kind = Tok::assign;
          t.text = "=";
        }
        return t;
      case '!':
        advance();
        if (peek() != '=') fail("expected \"!=\"", "!");
        advance();
        t.kind = Tok::ne;
        t.text = "!=";
        return t;
      case '<':
        advance();
        if (peek() == '=') { advance(); t.kind = Tok::le; t.text = "<="; }
        else { t.kind = Tok::lt; t.text = "<"; }
        return t;
      case '>':
        advance();
        if (peek() == '=') { advance(); t.kind = Tok::ge; t.text = ">="; }
        else { t.kind = Tok::gt; t.text = ">"; }
        return t;
      default:
        fail(std::string("unexpected character \"") + c + "\"", std::string(1, c));
    }
  }

  Token lex_number_or_date(Token t) {
    size_t start = pos_;
    // Date literal: exactly DDDD-DD-DD.
    if (pos_ + 10 <= text_.size()) {
      std::string_view cand = text_.substr(pos_, 10);
      bool shaped = cand[4] == '-' && cand[7] == '-';
      for (size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
        if (!std::isdigit(static_cast<unsigned char>(cand[i]))) shaped = false;
      }
      if (shaped) {
        auto d = Date::parse(cand);
        if (!d) fail("invalid date \"" + std::string(cand) + "\"", std::string(cand));
        for (int i = 0; i < 10; ++i) advance();
        t.kind = Tok::date;
        t.text = std::string(cand);
        t.date_value = *d;
        return t;
      }
    }
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(peek()))) advance();
    bool is_float = false;
    if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
      is_float = true;
      advance();
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(peek()))) advance();
    }
    std::string_view body = text_.substr(start, pos_ - start);
    t.text = std::string(body);
    t.kind = Tok::number;
    if (is_float) {
      double v = 0;
      auto [p, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
      if (ec != std::errc() || p != body.data() + body.size()) {
        fail("invalid number \"" + t.text + "\"", t.text);
      }
      t.is_int = false;
      t.float_value = v;
    } else {
      int64_t v = 0;
      auto [p, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
      if (ec != std::errc() || p != body.data() + body.size()) {
        fail("integer literal out of range \"" + t.text + "\"", t.text);
      }
      t.is_int = true;
      t.int_value = v;
    }
    return t;
  }

  Token lex_string(Token t) {
    advance();  // opening quote
    std::string value;
    while (pos_ < text_.size()) {
      char c = advance();
      if (c == '"') {
        t.kind = Tok::string;
        t.text = value;
        return t;
      }
      if (c == '\\') {
        if (pos_ >= text_.size()) break;
        char e = advance();
        if (e == '"' || e == '\\') value += e;
        else fail(std::string("invalid escape \"\\") + e + "\"", std::string("\\") + e);
      } else if (c == '\n') {
        fail("newline inside string literal");
      } else {
        value += c;
      }
    }
    fail("unterminated string literal");
  }

  std::string_view text_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  QueryProgram run() {
    QueryProgram prog;
    prog.stages.push_back(parse_stage());
    while (at(Tok::pipe)) {
      eat();
      if (prog.stages.size() >= kMaxProgramStages) {
        fail(cur(), "program exceeds " + std::to_string(kMaxProgramStages) + " stages");
      }
      prog.stages.push_back(parse_stage());
    }
    expect(Tok::end, "end of program");
    return prog;
  }

 private:
  const Token& cur() const { return toks_[i_]; }
  bool at(Tok k) const { return cur().kind == k; }
  const Token& eat() { return toks_[i_++]; }

  [[noreturn]] void fail(const Token& t, const std::string& what) {
    std::string shown = t.kind == Tok::end ? "end of input" : "\"" + t.text + "\"";
    throw ParseError(t.line, t.column, t.text,
                     "line " + std::to_string(t.line) + ", column " +
                         std::to_string(t.column) + ": expected " + what + ", got " + shown);
  }

  const Token& expect(Tok k, const std::string& what) {
    if (!at(k)) fail(cur(), what);
    return eat();
  }

  bool at_keyword(const char* kw) const {
    return at(Tok::ident) && upper(cur().text) == kw;
  }

  void expect_keyword(const char* kw) {
    if (!at_keyword(kw)) fail(cur(), std::string("\"") + kw + "\"");
    eat();
  }

  std::string expect_column() {
    if (!at(Tok::ident)) fail(cur(), "a column name");
    return eat().text;
  }

  Stage parse_stage() {
    if (!at(Tok::ident)) fail(cur(), "a stage keyword");
    std::string kw = upper(cur().text);
    if (kw == "FILTER") return parse_filter();
    if (kw == "DERIVE") return parse_derive();
    if (kw == "GROUP") return parse_group_by();
    if (kw == "AGGREGATE") return parse_aggregate();
    if (kw == "SELECT") return parse_select();
    if (kw == "SORT") return parse_sort();
    if (kw == "LIMIT") return parse_limit();
    fail(cur(), "a stage keyword (FILTER, DERIVE, GROUP BY, AGGREGATE, SELECT, SORT, LIMIT)");
  }

  Stage parse_filter() {
    eat();  // FILTER
    FilterStage st;
    st.column = expect_column();
    switch (cur().kind) {
      case Tok::eq: st.cmp = Comparator::eq; eat(); break;
      case Tok::ne: st.cmp = Comparator::ne; eat(); break;
      case Tok::lt: st.cmp = Comparator::lt; eat(); break;
      case Tok::le: st.cmp = Comparator::le; eat(); break;
      case Tok::gt: st.cmp = Comparator::gt; eat(); break;
      case Tok::ge: st.cmp = Comparator::ge; eat(); break;
      case Tok::ident:
        if (upper(cur().text) == "CONTAINS") {
          st.cmp = Comparator::contains;
          eat();
          break;
        }
        [[fallthrough]];
      default:
        fail(cur(), "a comparator (==, !=, <, <=, >, >=, CONTAINS)");
    }
    st.literal = parse_literal();
    return st;
  }

  Value parse_literal() {
    bool negate = false;
    if (at(Tok::minus)) {
      eat();
      negate = true;
      if (!at(Tok::number)) fail(cur(), "a number after \"-\"");
    }
    switch (cur().kind) {
      case Tok::number: {
        Token t = eat();
        if (t.is_int) return Value{negate ? -t.int_value : t.int_value};
        return Value{negate ? -t.float_value : t.float_value};
      }
      case Tok::string: return Value{eat().text};
      case Tok::date: return Value{eat().date_value};
      case Tok::ident: {
        std::string kw = upper(cur().text);
        if (kw == "TRUE") { eat(); return Value{true}; }
        if (kw == "FALSE") { eat(); return Value{false}; }
        fail(cur(), "a literal");
      }
      default:
        fail(cur(), "a literal");
    }
  }

  Stage parse_derive() {
    eat();  // DERIVE
    DeriveStage st;
    st.new_column = expect_column();
    expect(Tok::assign, "\"=\"");
    if (at_keyword("YEARS_BETWEEN")) {
      eat();
      expect(Tok::lparen, "\"(\"");
      YearsBetween yb;
      yb.date_column = expect_column();
      expect(Tok::comma, "\",\"");
      if (at(Tok::at_ref)) {
        eat();
      } else if (at(Tok::date)) {
        yb.reference = eat().date_value;
      } else {
        fail(cur(), "@ref or a date literal");
      }
      expect(Tok::rparen, "\")\"");
      st.expr = yb;
    } else {
      st.expr = parse_arith();
    }
    return st;
  }

  ArithPtr parse_arith() {
    ArithPtr node = parse_term();
    while (at(Tok::plus) || at(Tok::minus)) {
      auto op = eat().kind == Tok::plus ? ArithNode::Op::add : ArithNode::Op::sub;
      ArithPtr rhs = parse_term();
      node = std::make_shared<ArithNode>(ArithNode{op, "", Value{}, node, rhs});
    }
    return node;
  }

  ArithPtr parse_term() {
    ArithPtr node = parse_factor();
    while (at(Tok::star) || at(Tok::slash)) {
      auto op = eat().kind == Tok::star ? ArithNode::Op::mul : ArithNode::Op::div;
      ArithPtr rhs = parse_factor();
      node = std::make_shared<ArithNode>(ArithNode{op, "", Value{}, node, rhs});
    }
    return node;
  }

  ArithPtr parse_factor() {
    if (at(Tok::minus)) {
      eat();
      ArithPtr inner = parse_factor();
      return std::make_shared<ArithNode>(
          ArithNode{ArithNode::Op::neg, "", Value{}, inner, nullptr});
    }
    if (at(Tok::number)) {
      Token t = eat();
      Value v = t.is_int ? Value{t.int_value} : Value{t.float_value};
      return std::make_shared<ArithNode>(
          ArithNode{ArithNode::Op::literal, "", v, nullptr, nullptr});
    }
    if (at(Tok::ident)) {
      return std::make_shared<ArithNode>(
          ArithNode{ArithNode::Op::column, eat().text, Value{}, nullptr, nullptr});
    }
    if (at(Tok::lparen)) {
      eat();
      ArithPtr inner = parse_arith();
      expect(Tok::rparen, "\")\"");
      return inner;
    }
    fail(cur(), "a number, column, \"(\", or \"-\"");
  }

  Stage parse_group_by() {
    eat();  // GROUP
    expect_keyword("BY");
    GroupByStage st;
    st.columns.push_back(expect_column());
    while (at(Tok::comma)) {
      eat();
      st.columns.push_back(expect_column());
    }
    return st;
  }

  Stage parse_aggregate() {
    eat();  // AGGREGATE
    if (!at(Tok::ident)) fail(cur(), "an aggregate function");
    std::string name = upper(eat().text);
    AggregateStage st;
    if (name == "COUNT") st.func = AggFunc::count;
    else if (name == "SUM") st.func = AggFunc::sum;
    else if (name == "MEAN") st.func = AggFunc::mean;
    else if (name == "MEDIAN") st.func = AggFunc::median;
    else if (name == "MIN") st.func = AggFunc::min;
    else if (name == "MAX") st.func = AggFunc::max;
    else if (name == "COUNT_DISTINCT") st.func = AggFunc::count_distinct;
    else {
      --i_;
      fail(cur(), "an aggregate function (COUNT, SUM, MEAN, MEDIAN, MIN, MAX, COUNT_DISTINCT)");
    }
    expect(Tok::lparen, "\"(\"");
    if (at(Tok::star)) {
      eat();
    } else {
      st.target = expect_column();
    }
    expect(Tok::rparen, "\")\"");
    return st;
  }

  Stage parse_select() {
    eat();  // SELECT
    SelectStage st;
    st.columns.push_back(expect_column());
    while (at(Tok::comma)) {
      eat();
      st.columns.push_back(expect_column());
    }
    return st;
  }

  Stage parse_sort() {
    eat();  // SORT
    SortStage st;
    st.column = expect_column();
    if (at_keyword("ASC")) {
      eat();
    } else if (at_keyword("DESC")) {
      st.dir = SortDir::desc;
      eat();
    }
    return st;
  }

  Stage parse_limit() {
    eat();  // LIMIT
    if (!at(Tok::number) || !cur().is_int) fail(cur(), "a non-negative integer");
    LimitStage st;
    st.n = eat().int_value;
    return st;
  }

  std::vector<Token> toks_;
  size_t i_ = 0;
};

}  // namespace

QueryProgram parse_program(std::string_view text) {
  if (text.size() > kMaxProgramBytes) {
    throw ParseError(1, 1, "", "program exceeds " + std::to_string(kMaxProgramBytes) +
                                   " bytes");
  }
  return Parser(Lexer(text).run()).run();
}

size_t operation_count(const QueryProgram& program) { return program.stages.size(); }

namespace {

std::string quote_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

std::string print_literal(const Value& v) {
  switch (v.index()) {
    case 1: return std::to_string(std::get<int64_t>(v));
    case 2: {
      // Keep the float shape visible so the literal reparses as floating.
      std::string s = to_persisted_text(v);
      if (s.find_first_of(".eE") == std::string::npos) s += ".0";
      return s;
    }
    case 3: return quote_string(std::get<std::string>(v));
    case 4: return std::get<Date>(v).to_string();
    case 5: return std::get<bool>(v) ? "TRUE" : "FALSE";
    default: return "";
  }
}

int arith_prec(ArithNode::Op op) {
  switch (op) {
    case ArithNode::Op::add:
    case ArithNode::Op::sub: return 1;
    case ArithNode::Op::mul:
    case ArithNode::Op::div: return 2;
    default: return 3;
  }
}

void print_arith(const ArithPtr& node, std::string& out, int parent_prec, bool is_right) {
  int prec = arith_prec(node->op);
  // Parens exactly when reparsing would rebind: lower precedence under a
  // tighter parent, or a right operand at equal precedence (left assoc).
  bool wrap = prec < parent_prec || (prec == parent_prec && is_right && prec < 3);
  if (wrap) out += '(';
  switch (node->op) {
    case ArithNode::Op::column: out += node->column; break;
    case ArithNode::Op::literal: out += print_literal(node->literal); break;
    case ArithNode::Op::neg:
      out += '-';
      print_arith(node->lhs, out, 3, false);
      break;
    case ArithNode::Op::add:
    case ArithNode::Op::sub:
    case ArithNode::Op::mul:
    case ArithNode::Op::div: {
      print_arith(node->lhs, out, prec, false);
      out += ' ';
      out += node->op == ArithNode::Op::add   ? '+'
             : node->op == ArithNode::Op::sub ? '-'
             : node->op == ArithNode::Op::mul ? '*'
                                              : '/';
      out += ' ';
      print_arith(node->rhs, out, prec, true);
      break;
    }
  }
  if (wrap) out += ')';
}

struct StagePrinter {
  std::string& out;

  void operator()(const FilterStage& st) {
    out += "FILTER " + st.column + " " + comparator_text(st.cmp) + " " +
           print_literal(st.literal);
  }
  void operator()(const DeriveStage& st) {
    out += "DERIVE " + st.new_column + " = ";
    if (const auto* yb = std::get_if<YearsBetween>(&st.expr)) {
      out += "YEARS_BETWEEN(" + yb->date_column + ", " +
             (yb->reference ? yb->reference->to_string() : "@ref") + ")";
    } else {
      print_arith(std::get<ArithPtr>(st.expr), out, 0, false);
    }
  }
  void operator()(const GroupByStage& st) {
    out += "GROUP BY ";
    for (size_t i = 0; i < st.columns.size(); ++i) {
      if (i) out += ", ";
      out += st.columns[i];
    }
  }
  void operator()(const AggregateStage& st) {
    out += "AGGREGATE ";
    out += agg_func_name(st.func);
    out += '(';
    out += st.target ? *st.target : "*";
    out += ')';
  }
  void operator()(const SelectStage& st) {
    out += "SELECT ";
    for (size_t i = 0; i < st.columns.size(); ++i) {
      if (i) out += ", ";
      out += st.columns[i];
    }
  }
  void operator()(const SortStage& st) {
    out += "SORT " + st.column + (st.dir == SortDir::desc ? " DESC" : " ASC");
  }
  void operator()(const LimitStage& st) { out += "LIMIT " + std::to_string(st.n); }
};

}  // namespace

std::string print_program(const QueryProgram& program) {
  std::string out;
  for (size_t i = 0; i < program.stages.size(); ++i) {
    if (i) out += " | ";
    std::visit(StagePrinter{out}, program.stages[i]);
  }
  return out;
}

std::string grammar_summary() {
  return
      "A query program is one or more stages joined by \" | \", applied left to right.\n"
      "Stages:\n"
      "  FILTER <column> <op> <literal>     op: == != < <= > >= CONTAINS (strings)\n"
      "  DERIVE <name> = <expression>       YEARS_BETWEEN(<date column>, @ref) for ages,\n"
      "                                     or arithmetic over numeric columns with + - * /\n"
      "  GROUP BY <column>, ...             must be followed by AGGREGATE\n"
      "  AGGREGATE <fn>(<column>)           fn: COUNT SUM MEAN MEDIAN MIN MAX COUNT_DISTINCT;\n"
      "                                     COUNT(*) counts rows\n"
      "  SELECT <column>, ...\n"
      "  SORT <column> [ASC|DESC]\n"
      "  LIMIT <n>\n"
      "Literals: numbers, \"strings\" in double quotes, dates as YYYY-MM-DD, TRUE/FALSE.\n"
      "@ref is the reference date supplied at execution time.\n"
      "An ungrouped AGGREGATE produces a single value and must end the program.\n"
      "Example: DERIVE age_years = YEARS_BETWEEN(birth_date, @ref) | AGGREGATE MEDIAN(age_years)\n";
}

}  // namespace cliniq::query
