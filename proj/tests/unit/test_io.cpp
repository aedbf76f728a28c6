#include <gtest/gtest.h>

#include <cmath>

#include "lfgo/io/csv.hpp"
#include "lfgo/io/svg.hpp"

using namespace lfgo;
using namespace lfgo::io;

TEST(Csv, DoublesRoundTripExactly) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) EXPECT_EQ(parse_double(format_double(v)), v);
  EXPECT_TRUE(std::isnan(parse_double("nan")));
  EXPECT_EQ(parse_double("-inf"), -HUGE_VAL);
  EXPECT_EQ(parse_double("+1.5"), 1.5);
  EXPECT_THROW(parse_double("1.5x"), DomainError);
  EXPECT_THROW(parse_double(""), DomainError);
}

TEST(Csv, QuotingRoundTrip) {
  CsvTable t;
  t.header = {"name", "note"};
  t.add_row({"a,b", "say \"hi\""});
  t.add_row({"multi\nline", ""});
  const std::string s = to_csv_string(t);
  EXPECT_EQ(s, "name,note\n\"a,b\",\"say \"\"hi\"\"\"\n\"multi\nline\",\n");
  const auto back = parse_csv_string(s);
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.rows, t.rows);
}

TEST(Csv, CrlfAndMissingTrailingNewline) {
  const auto t = parse_csv_string("x,y\r\n1,2\r\n3,4");
  EXPECT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1], (std::vector<std::string>{"3", "4"}));
  EXPECT_EQ(t.column("y"), 1u);
  EXPECT_THROW(t.column("z"), DomainError);
}

TEST(Csv, MalformedInputs) {
  EXPECT_THROW(parse_csv_string(""), DomainError);
  EXPECT_THROW(parse_csv_string("a,b\n1\n"), DomainError);
  EXPECT_THROW(parse_csv_string("a\n\"open\n"), DomainError);
  EXPECT_THROW(parse_csv_string("a\nx\"y\n"), DomainError);
  EXPECT_THROW(parse_csv_string("a\n1\r2\n"), DomainError);
  CsvTable t;
  t.header = {"a"};
  EXPECT_THROW(t.add_row({"1", "2"}), DomainError);
}

TEST(Csv, NumericMatrix) {
  const auto m = to_matrix(parse_csv_string("a,b\n1,2\n3,4.5\n"));
  ASSERT_EQ(m.rows(), 2);
  EXPECT_EQ(m(1, 1), 4.5);
  try {
    to_matrix(parse_csv_string("a,b\n1,2\n3,oops\n"));
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("record 3, column 'b'"), std::string::npos);
  }
  EXPECT_THROW(read_csv_file("/nonexistent/file.csv"), DomainError);
}

TEST(Svg, CurveIsWellFormed) {
  const std::string s = svg_curve_1d({0, 0.5, 1}, {1, 2, 1.5}, {0.1, 0.2, 0.1}, "U & <test>");
  EXPECT_EQ(s.rfind("<svg", 0) == 0 || s.rfind("<?xml", 0) == 0, true);
  EXPECT_NE(s.find("</svg>"), std::string::npos);
  EXPECT_NE(s.find("U &amp; &lt;test&gt;"), std::string::npos);
  EXPECT_EQ(s.find("nan"), std::string::npos);
}

TEST(Svg, ContourHandlesFlatField) {
  Matrix v = Matrix::Constant(3, 4, 2.0);
  const std::string s = svg_contour_2d({0, 0.5, 1}, {0, 1, 2, 3}, v, "flat");
  EXPECT_NE(s.find("</svg>"), std::string::npos);
  EXPECT_EQ(s.find("nan"), std::string::npos);
  EXPECT_THROW(svg_contour_2d({0, 1}, {0, 1}, v), DomainError);
}

TEST(Svg, CurveSkipsFailedPoints) {
  const std::string s = svg_curve_1d({0, 0.5, 1}, {1, std::nan(""), 1.5}, {0.1, std::nan(""), 0.1});
  EXPECT_EQ(s.find("nan"), std::string::npos);
  std::size_t circles = 0;
  for (auto p = s.find("<circle"); p != std::string::npos; p = s.find("<circle", p + 1)) ++circles;
  EXPECT_EQ(circles, 2u);
}
