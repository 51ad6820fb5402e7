#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "calibdiag/adult.hpp"
#include "calibdiag/dgp.hpp"
#include "calibdiag/errors.hpp"
#include "calibdiag/report_io.hpp"
#include "calibdiag/table_io.hpp"

using namespace calibdiag;

namespace {

TableSchema basic_schema() {
  TableSchema s;
  s.w_columns = {"a", "b", "c"};
  s.x_columns = {"a", "c"};
  s.p_column = "p";
  s.y_column = "y";
  s.g_column = "g";
  s.categorical_columns = {"c"};
  return s;
}

const char* kCsv =
    "a,b,c,p,y,g\n"
    "1.0,2,red,0.1,3.5,0\n"
    "2.0,?,blue,0.9,1.0,1\n"
    "3.0,1,green,0.5,2.0,1\n"
    "4.0,0,red,0.3,0.5,0\n"
    "\"5.0\",1,blue,0.7,-1,1\n";

}  // namespace

TEST(ParseCsv, QuotesAndWhitespace) {
  const auto t = parse_csv("x, y\n\"a,b\" , \"say \"\"hi\"\"\"\n");
  EXPECT_EQ(t.header, (std::vector<std::string>{"x", "y"}));
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][0], "a,b");
  EXPECT_EQ(t.rows[0][1], "say \"hi\"");
  EXPECT_EQ(t.line_numbers[0], 2u);
}

TEST(CategoryLevels, SortedDistinct) {
  EXPECT_EQ(category_levels({"red", "blue", "green", "red"}), (std::vector<std::string>{"blue", "green", "red"}));
}

TEST(LoadTable, DropsMissingAndEncodesCategories) {
  const auto t = load_table(parse_csv(kCsv), basic_schema());
  EXPECT_EQ(t.dropped_rows, 1u);
  EXPECT_EQ(t.y.size(), 4);
  // a, b, then two indicators for three levels.
  EXPECT_EQ(t.w.cols(), 4);
  EXPECT_EQ(t.x_cols.size(), 3u);
  EXPECT_EQ(t.w_names[2], "c=green");
  EXPECT_EQ(t.w_names[3], "c=red");
  EXPECT_DOUBLE_EQ(t.w(3, 0), 5.0);
  EXPECT_DOUBLE_EQ(t.w(0, 3), 1.0);
  EXPECT_NO_THROW(t.labelled());
  EXPECT_NO_THROW(t.unlabelled());
}

TEST(LoadTable, MissingColumnNamesIt) {
  TableSchema s = basic_schema();
  s.w_columns.push_back("zeta");
  try {
    load_table(parse_csv(kCsv), s);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.column(), "zeta");
  }
}

TEST(LoadTable, ScoreOutOfRangeReportsLine) {
  const std::string csv = "a,b,c,p,y,g\n1,2,red,0.1,1,0\n1,2,red,1.4,1,0\n";
  try {
    load_table(parse_csv(csv), basic_schema());
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.row(), 3u);
  }
}

TEST(LoadTable, BadNumberAndBadLabel) {
  EXPECT_THROW(load_table(parse_csv("a,b,c,p,y,g\n1,x,red,0.1,1,0\n"), basic_schema()), ValidationError);
  EXPECT_THROW(load_table(parse_csv("a,b,c,p,y,g\n1,2,red,0.1,1,2\n"), basic_schema()), ValidationError);
}

TEST(LoadTable, ModeRequiresColumns) {
  TableSchema s = basic_schema();
  s.g_column.reset();
  EXPECT_THROW(load_table(parse_csv(kCsv), s, TableMode::labelled), SchemaError);
}

TEST(Schema, FromJson) {
  const auto s = schema_from_json(
      R"({"w_columns": ["a", "b"], "x_columns": ["a"], "p_column": "p", "y_column": "y"})");
  EXPECT_EQ(s.w_columns.size(), 2u);
  EXPECT_FALSE(s.g_column.has_value());
  EXPECT_THROW(schema_from_json(R"({"w_columns": ["a"], "x_columns": ["b"], "y_column": "y"})"), SchemaError);
  EXPECT_THROW(schema_from_json("not json"), SchemaError);
}

TEST(FormatNumber, RoundTripsAndNull) {
  const double v = 0.1 + 0.2;
  EXPECT_EQ(std::stod(format_number(v)), v);
  EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "null");
  EXPECT_EQ(format_number(std::nan("")), "null");
}

TEST(ReportJson, RoundTripIsExact) {
  DiagnosticReport r;
  r.v_star_hat = 0.019812345678901234;
  r.kappas = {{0.5, 0.24812345678901234, 3000}, {0.9, 0.1734, 2900}};
  r.se_soft_implied = 0.0431;
  r.se_supervised = 0.0517;
  r.label_leak = LabelLeakResult{3.21, 3, 0.36, {0.01, -0.02, 0.005}};
  r.decision = Decision::prefer_soft;
  r.notes = {"a \"quoted\" note", "second"};
  r.seed = 42;
  r.version = "0.1.0";
  EXPECT_EQ(report_from_json(report_to_json(r)), r);

  DiagnosticReport c;
  c.v_star_hat = 0.0;
  c.se_soft_implied = std::numeric_limits<double>::infinity();
  c.decision = Decision::collapse;
  c.version = "0.1.0";
  const auto back = report_from_json(report_to_json(c));
  EXPECT_EQ(back, c);
  EXPECT_NE(report_to_json(c).find("\"se_soft_implied\": null"), std::string::npos);
}

TEST(ReportJson, KeyOrder) {
  DiagnosticReport r;
  r.version = "0.1.0";
  const std::string j = report_to_json(r);
  std::size_t last = 0;
  for (const char* key : {"v_star_hat", "kappas", "se_soft_implied", "se_supervised", "decision", "label_leak",
                          "notes", "seed", "version"}) {
    const auto pos = j.find(std::string("\"") + key + "\"");
    ASSERT_NE(pos, std::string::npos) << key;
    EXPECT_GT(pos, last);
    last = pos;
  }
}

TEST(EstimateJson, RoundTrip) {
  const auto t = TauEstimate::make(1.2345678901234567, 0.0987, 2500, Method::hard);
  const auto back = estimate_from_json(estimate_to_json(t));
  EXPECT_EQ(back.tau_hat, t.tau_hat);
  EXPECT_EQ(back.se, t.se);
  EXPECT_EQ(back.ci_lo, t.ci_lo);
  EXPECT_EQ(back.n_used, t.n_used);
  EXPECT_EQ(back.method, t.method);
}

TEST(TableCsv, HeaderAndCells) {
  Table t;
  t.columns = {"shape", "delta"};
  t.rows = {{std::string("worst_case"), 0.05}, {std::string("linear"), std::nan("")}};
  EXPECT_EQ(table_to_csv(t), "shape,delta\nworst_case,0.050000000000000003\nlinear,\n");
}

TEST(Emit, UnwritablePathRaisesIoError) {
  Table t;
  t.columns = {"a"};
  try {
    emit_table(t, OutputFormat::csv, "/nonexistent-dir/out.csv");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_EQ(e.path(), "/nonexistent-dir/out.csv");
  }
  EXPECT_THROW(read_text_file("/nonexistent-dir/in.csv"), IoError);
}

TEST(Emit, WritesReportFile) {
  const auto path = (std::filesystem::temp_directory_path() / "calibdiag_report_test.json").string();
  DiagnosticReport r;
  r.version = "0.1.0";
  emit_report(r, OutputFormat::json, path);
  EXPECT_EQ(report_from_json(read_text_file(path)), r);
  std::filesystem::remove(path);
}

TEST(Adult, ParsesHeaderlessText) {
  const std::string text =
      "39, State-gov, 77516, Bachelors, 13, Never-married, Adm-clerical, Not-in-family, White, Male, 2174, 0, 40, "
      "United-States, <=50K\n"
      "50, Self-emp-not-inc, 83311, Bachelors, 13, Married-civ-spouse, Exec-managerial, Husband, White, Male, 0, 0, "
      "13, United-States, <=50K\n"
      "38, Private, 215646, HS-grad, 9, Divorced, Handlers-cleaners, Not-in-family, White, Female, 0, 0, 40, "
      "United-States, >50K.\n"
      "53, ?, 234721, 11th, 7, Married-civ-spouse, Handlers-cleaners, Husband, Black, Male, 0, 0, 40, "
      "United-States, <=50K\n";
  const auto d = adult_from_text(text);
  EXPECT_EQ(d.size(), 3u);
  EXPECT_EQ(d.dropped_rows, 1u);
  EXPECT_EQ(d.g, (Vector(3) << 0, 0, 1).finished());
  EXPECT_EQ(d.y, (Vector(3) << 13, 13, 9).finished());
  ASSERT_EQ(d.x_cols.size(), 3u);
  EXPECT_EQ(d.w_names[static_cast<std::size_t>(d.x_cols[2])], "sex=Male");
  EXPECT_EQ(d.w(2, d.x_cols[2]), 0.0);
  EXPECT_EQ(d.w.rows(), 3);
}

TEST(Adult, MissingFileIsIoError) { EXPECT_THROW(load_adult("/nonexistent-dir/adult.data"), IoError); }
