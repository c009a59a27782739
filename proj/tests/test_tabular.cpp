#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <set>

#include "cliniq/cohort.hpp"
#include "cliniq/csv.hpp"
#include "cliniq/error.hpp"
#include "cliniq/rng.hpp"
#include "support/testutil.hpp"

using namespace cliniq;
using namespace cliniq::tabular;
using testutil::TempDir;
using testutil::make_table;

TEST_CASE("splitmix64 matches the published seed-0 stream") {
  SplitMix64 rng(0);
  CHECK(rng.next() == 0xe220a8397b1dcdafull);
  CHECK(rng.next() == 0x6e789e6aa1b965f4ull);
  CHECK(rng.next() == 0x06c45d188009454full);
}

TEST_CASE("splitmix64 below stays in range and is deterministic") {
  SplitMix64 a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    uint64_t x = a.below(7);
    CHECK(x < 7);
    CHECK(x == b.below(7));
  }
}

TEST_CASE("date parse accepts ISO and truncates timestamps") {
  CHECK(Date::parse("2101-10-20")->to_string() == "2101-10-20");
  CHECK(Date::parse("2101-10-20 19:08:00")->to_string() == "2101-10-20");
  CHECK(Date::parse("2101-10-20T19:08:00")->to_string() == "2101-10-20");
  CHECK(!Date::parse("2021-02-30"));
  CHECK(!Date::parse("2021-13-01"));
  CHECK(!Date::parse("20211301"));
  CHECK(!Date::parse("2021-1-01"));
  CHECK(!Date::parse(""));
  CHECK(!Date::parse("2021-02-28x"));
  CHECK(Date::parse("2024-02-29"));
  CHECK(!Date::parse("2023-02-29"));
}

TEST_CASE("date day round-trip") {
  SplitMix64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    int64_t days = static_cast<int64_t>(rng.below(200000)) - 50000;
    Date d = Date::from_days(days);
    CHECK(d.valid());
    CHECK(d.to_days() == days);
  }
  CHECK(Date{1970, 1, 1}.to_days() == 0);
  CHECK(Date{1969, 12, 31}.to_days() == -1);
}

TEST_CASE("years_between counts completed years") {
  CHECK(years_between({1950, 6, 15}, {2020, 6, 15}) == 70);
  CHECK(years_between({1950, 6, 15}, {2020, 6, 14}) == 69);
  CHECK(years_between({1950, 6, 15}, {2020, 6, 16}) == 70);
  CHECK(years_between({1950, 6, 15}, {1950, 6, 15}) == 0);
  CHECK(years_between({1950, 12, 31}, {1951, 1, 1}) == 0);
  // Feb 29 birthday: the year completes on Mar 1 in a common year.
  CHECK(years_between({2000, 2, 29}, {2021, 2, 28}) == 20);
  CHECK(years_between({2000, 2, 29}, {2021, 3, 1}) == 21);
  CHECK_THROWS_AS(years_between({2020, 1, 2}, {2020, 1, 1}), Error);
  try {
    years_between({2020, 1, 2}, {2020, 1, 1});
  } catch (const Error& e) {
    CHECK(e.code() == errc::exec_negative_age);
  }
}

TEST_CASE("scalar rendering") {
  CHECK(render_scalar(Value{int64_t{42}}) == "42");
  CHECK(render_scalar(Value{2.5}) == "2.5");
  CHECK(render_scalar(Value{2.0 / 3.0}) == "0.666667");
  CHECK(render_scalar(Value{1000000.0}) == "1e+06");
  CHECK(render_scalar(Value{Date{1987, 3, 5}}) == "1987-03-05");
  CHECK(render_scalar(Value{true}) == "true");
  CHECK(render_scalar(Value{std::string("F")}) == "F");
}

TEST_CASE("value ordering: null first, numerics cross-compare") {
  CHECK(compare_values(Value{}, Value{int64_t{-5}}) < 0);
  CHECK(compare_values(Value{int64_t{2}}, Value{2.5}) < 0);
  CHECK(compare_values(Value{2.0}, Value{int64_t{2}}) == 0);
  CHECK(compare_values(Value{std::string("a")}, Value{std::string("b")}) < 0);
  CHECK(compare_values(Value{Date{2020, 1, 1}}, Value{Date{2020, 1, 2}}) < 0);
}

TEST_CASE("csv: rfc 4180 quoting") {
  TempDir dir;
  testutil::write_text(dir.file("t.csv"),
                       "NAME,NOTE\n"
                       "\"Smith, John\",\"said \"\"hi\"\"\"\n"
                       "plain,\"line1\nline2\"\r\n");
  Table t = load_csv(dir.file("t.csv"));
  REQUIRE(t.row_count() == 2);
  CHECK(std::get<std::string>(t.rows[0][0]) == "Smith, John");
  CHECK(std::get<std::string>(t.rows[0][1]) == "said \"hi\"");
  CHECK(std::get<std::string>(t.rows[1][1]) == "line1\nline2");
}

TEST_CASE("csv: BOM stripped") {
  TempDir dir;
  testutil::write_text(dir.file("t.csv"), "\xef\xbb\xbf" "A\n1\n");
  Table t = load_csv(dir.file("t.csv"));
  CHECK(t.schema.columns[0].name == "A");
  CHECK(std::get<int64_t>(t.rows[0][0]) == 1);
}

TEST_CASE("csv: kind inference precedence") {
  TempDir dir;
  testutil::write_text(dir.file("t.csv"),
                       "I,F,D,B,S,CODE,MIX\n"
                       "1,1.5,2020-01-01,true,abc,0123,3\n"
                       "-2,2,1999-12-31 10:00:00,false,1x,99,4.5\n");
  Table t = load_csv(dir.file("t.csv"));
  CHECK(t.schema.columns[0].kind == ColumnKind::integer);
  CHECK(t.schema.columns[1].kind == ColumnKind::floating);
  CHECK(t.schema.columns[2].kind == ColumnKind::date);
  CHECK(t.schema.columns[3].kind == ColumnKind::boolean);
  CHECK(t.schema.columns[4].kind == ColumnKind::text);
  // Leading zero keeps code-like fields textual.
  CHECK(t.schema.columns[5].kind == ColumnKind::text);
  // Integer cells mixed with a float cell widen to float.
  CHECK(t.schema.columns[6].kind == ColumnKind::floating);
  CHECK(std::get<double>(t.rows[0][6]) == 3.0);
}

TEST_CASE("csv: empty cells are null either way") {
  TempDir dir;
  testutil::write_text(dir.file("t.csv"), "A,B\n1,\"\"\n,2\n");
  Table t = load_csv(dir.file("t.csv"));
  CHECK(is_null(t.rows[0][1]));
  CHECK(is_null(t.rows[1][0]));
  CHECK(std::get<int64_t>(t.rows[1][1]) == 2);
}

TEST_CASE("csv: ragged row error names the line") {
  TempDir dir;
  testutil::write_text(dir.file("t.csv"), "A,B\n1,2\n3\n");
  try {
    load_csv(dir.file("t.csv"));
    FAIL("expected csv error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::csv_error);
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
}

TEST_CASE("csv: missing file error names the path") {
  try {
    load_csv("/nonexistent/nope.csv");
    FAIL("expected io error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::io_error);
    CHECK(std::string(e.what()).find("/nonexistent/nope.csv") != std::string::npos);
  }
}

TEST_CASE("csv: schema hint enforces names and coerces failures to null") {
  TempDir dir;
  testutil::write_text(dir.file("t.csv"), "A,B\n1,x\noops,y\n");
  Schema hint;
  hint.columns = {{"A", ColumnKind::integer}, {"B", ColumnKind::text}};
  CsvReadStats stats;
  Table t = load_csv(dir.file("t.csv"), hint, &stats);
  CHECK(stats.data_rows == 2);
  CHECK(stats.coercion_warnings == 1);
  CHECK(is_null(t.rows[1][0]));

  Schema wrong;
  wrong.columns = {{"A", ColumnKind::integer}, {"C", ColumnKind::text}};
  CHECK_THROWS_AS(load_csv(dir.file("t.csv"), wrong), Error);
}

TEST_CASE("csv: write/load round-trip preserves values exactly") {
  TempDir dir;
  Table t = make_table(
      {{"I", ColumnKind::integer},
       {"F", ColumnKind::floating},
       {"S", ColumnKind::text},
       {"D", ColumnKind::date},
       {"B", ColumnKind::boolean}},
      {
          {Value{int64_t{-7}}, Value{0.1}, Value{std::string("a,\"b\"\nc")},
           Value{Date{2001, 2, 3}}, Value{true}},
          {Value{}, Value{1.0 / 3.0}, Value{}, Value{}, Value{false}},
      });
  write_csv(t, dir.file("t.csv"));
  write_schema_sidecar(t.schema, dir.file("t.schema"));
  Schema hint = read_schema_sidecar(dir.file("t.schema"));
  CHECK(hint == t.schema);
  Table back = load_csv(dir.file("t.csv"), hint);
  REQUIRE(back.row_count() == t.row_count());
  for (size_t r = 0; r < t.row_count(); ++r) {
    for (size_t c = 0; c < t.column_count(); ++c) {
      CAPTURE(r);
      CAPTURE(c);
      CHECK(values_equal(back.rows[r][c], t.rows[r][c]));
    }
  }
}

TEST_CASE("csv: wide load stays fast") {
  TempDir dir;
  Table big;
  big.schema.columns = {{"SUBJECT_ID", ColumnKind::integer}, {"VAL", ColumnKind::floating}};
  big.rows.reserve(46000);
  SplitMix64 rng(3);
  for (int i = 0; i < 46000; ++i) {
    big.rows.push_back({Value{int64_t{i}}, Value{rng.unit() * 100.0}});
  }
  write_csv(big, dir.file("big.csv"));
  auto t0 = std::chrono::steady_clock::now();
  Table back = load_csv(dir.file("big.csv"));
  auto elapsed = std::chrono::steady_clock::now() - t0;
  CHECK(back.row_count() == 46000);
  CHECK(back.schema.columns[1].kind == ColumnKind::floating);
  CHECK(std::chrono::duration_cast<std::chrono::seconds>(elapsed).count() < 5);
}

namespace {

Table small_patients() {
  return make_table({{"SUBJECT_ID", ColumnKind::integer}, {"GENDER", ColumnKind::text}},
                    {{Value{int64_t{1}}, Value{std::string("F")}},
                     {Value{int64_t{2}}, Value{std::string("M")}},
                     {Value{int64_t{3}}, Value{std::string("F")}},
                     {Value{int64_t{4}}, Value{std::string("M")}},
                     {Value{int64_t{5}}, Value{std::string("F")}}});
}

}  // namespace

TEST_CASE("sample_cohort: seeded subset in input order") {
  Table p = small_patients();
  CohortConfig cfg;
  cfg.n_patients = 3;
  cfg.seed = 11;
  Table a = sample_cohort(p, cfg);
  Table b = sample_cohort(p, cfg);
  REQUIRE(a.row_count() == 3);
  CHECK(a.rows == b.rows);

  int64_t prev = -1;
  for (const Row& row : a.rows) {
    int64_t id = std::get<int64_t>(row[0]);
    CHECK(id > prev);
    prev = id;
  }

  cfg.seed = 12;
  bool saw_difference = false;
  for (uint64_t s = 12; s < 32 && !saw_difference; ++s) {
    cfg.seed = s;
    saw_difference = sample_cohort(p, cfg).rows != a.rows;
  }
  CHECK(saw_difference);

  cfg.n_patients = 99;
  CHECK(sample_cohort(p, cfg).row_count() == 5);
}

TEST_CASE("sample_cohort: duplicate and missing key errors") {
  Table dup = make_table({{"SUBJECT_ID", ColumnKind::integer}},
                         {{Value{int64_t{1}}}, {Value{int64_t{1}}}});
  CHECK_THROWS_AS(sample_cohort(dup, {}), Error);

  Table nokey = make_table({{"ID", ColumnKind::integer}}, {{Value{int64_t{1}}}});
  try {
    sample_cohort(nokey, {});
    FAIL("expected schema error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::schema_error);
    CHECK(std::string(e.what()).find("SUBJECT_ID") != std::string::npos);
  }
}

TEST_CASE("synthesize_dob: uniform in range, deterministic, collision-checked") {
  Table p = small_patients();
  CohortConfig cfg;
  cfg.seed = 5;
  cfg.dob_start = {1930, 1, 1};
  cfg.dob_end = {2000, 12, 31};
  Table a = synthesize_dob(p, cfg);
  Table b = synthesize_dob(p, cfg);
  CHECK(a.rows == b.rows);
  CHECK(a.schema.columns.back().name == "DOB_Demo");
  CHECK(a.schema.columns.back().kind == ColumnKind::date);
  for (const Row& row : a.rows) {
    const Date& d = std::get<Date>(row.back());
    CHECK(d >= cfg.dob_start);
    CHECK(d <= cfg.dob_end);
  }

  CHECK_THROWS_AS(synthesize_dob(a, cfg), Error);  // DOB_Demo already present
  Table empty = make_table({{"SUBJECT_ID", ColumnKind::integer}}, {});
  CHECK_THROWS_AS(synthesize_dob(empty, cfg), Error);

  CohortConfig inverted = cfg;
  inverted.dob_start = {2001, 1, 1};
  inverted.dob_end = {2000, 1, 1};
  CHECK_THROWS_AS(synthesize_dob(p, inverted), Error);
}

TEST_CASE("synthesize_dob covers the range bounds over many draws") {
  Table many;
  many.schema.columns = {{"SUBJECT_ID", ColumnKind::integer}};
  for (int i = 0; i < 20000; ++i) many.rows.push_back({Value{int64_t{i}}});
  CohortConfig cfg;
  cfg.seed = 9;
  cfg.dob_start = {2020, 1, 1};
  cfg.dob_end = {2020, 1, 10};
  Table t = synthesize_dob(many, cfg);
  std::set<int64_t> seen;
  for (const Row& row : t.rows) seen.insert(std::get<Date>(row.back()).to_days());
  CHECK(seen.size() == 10);  // all 10 days hit
}

TEST_CASE("left_join: multiplication, nulls, collisions") {
  Table left = make_table(
      {{"SUBJECT_ID", ColumnKind::integer}, {"NAME", ColumnKind::text}},
      {{Value{int64_t{1}}, Value{std::string("a")}},
       {Value{int64_t{2}}, Value{std::string("b")}},
       {Value{}, Value{std::string("c")}}});
  Table right = make_table(
      {{"SUBJECT_ID", ColumnKind::integer}, {"NAME", ColumnKind::text}},
      {{Value{int64_t{1}}, Value{std::string("x")}},
       {Value{int64_t{1}}, Value{std::string("y")}},
       {Value{}, Value{std::string("z")}}});

  Table j = left_join(left, right, "SUBJECT_ID");
  REQUIRE(j.schema.arity() == 3);
  CHECK(j.schema.columns[2].name == "NAME_2");
  REQUIRE(j.row_count() == 4);  // 1 matches twice; 2 and null-key pass through
  CHECK(std::get<std::string>(j.rows[0][2]) == "x");
  CHECK(std::get<std::string>(j.rows[1][2]) == "y");
  CHECK(is_null(j.rows[2][2]));
  CHECK(is_null(j.rows[3][2]));  // null key matches nothing

  Table wrong = make_table({{"SUBJECT_ID", ColumnKind::text}}, {});
  CHECK_THROWS_AS(left_join(left, wrong, "SUBJECT_ID"), Error);
}

TEST_CASE("join_cohort: chained joins with dictionary titles") {
  Table patients = make_table({{"SUBJECT_ID", ColumnKind::integer}},
                              {{Value{int64_t{1}}}, {Value{int64_t{2}}}});
  Table rx = make_table(
      {{"SUBJECT_ID", ColumnKind::integer}, {"DRUG", ColumnKind::text}},
      {{Value{int64_t{1}}, Value{std::string("aspirin")}}});
  Table dx = make_table(
      {{"SUBJECT_ID", ColumnKind::integer}, {"ICD9_CODE", ColumnKind::text}},
      {{Value{int64_t{1}}, Value{std::string("4019")}},
       {Value{int64_t{2}}, Value{std::string("9999")}}});
  Table dict = make_table(
      {{"ICD9_CODE", ColumnKind::text}, {"SHORT_TITLE", ColumnKind::text}},
      {{Value{std::string("4019")}, Value{std::string("Hypertension NOS")}}});

  Table merged = join_cohort(patients, rx, dx, dict);
  REQUIRE(merged.row_count() == 2);
  auto title = merged.schema.index_of("SHORT_TITLE");
  REQUIRE(title.has_value());
  CHECK(std::get<std::string>(merged.rows[0][*title]) == "Hypertension NOS");
  CHECK(is_null(merged.rows[1][*title]));  // unknown code joins to nulls
}

TEST_CASE("project_columns keeps order and lists all unknowns") {
  Table t = make_table({{"A", ColumnKind::integer},
                        {"B", ColumnKind::text},
                        {"C", ColumnKind::floating}},
                       {{Value{int64_t{1}}, Value{std::string("x")}, Value{2.5}}});
  Table p = project_columns(t, {"C", "A"});
  CHECK(p.schema.columns[0].name == "C");
  CHECK(p.schema.columns[1].name == "A");
  CHECK(std::get<double>(p.rows[0][0]) == 2.5);

  try {
    project_columns(t, {"A", "X", "Y"});
    FAIL("expected schema error");
  } catch (const Error& e) {
    std::string msg = e.what();
    CHECK(msg.find("X") != std::string::npos);
    CHECK(msg.find("Y") != std::string::npos);
  }
}
