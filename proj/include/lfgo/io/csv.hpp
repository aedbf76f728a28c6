#pragma once

// RFC-4180 CSV with '.' decimals and LF line endings. Doubles are written in
// shortest round-trip form so reruns are byte-identical.

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "lfgo/core/types.hpp"

namespace lfgo::io {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) throw DomainError("not a number: '" + s + "'");
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row) {
    if (row.size() != header.size()) throw DomainError("CSV row width does not match the header");
    rows.push_back(std::move(row));
  }
  void add_numeric_row(const std::vector<double>& values) {
    std::vector<std::string> row;
    row.reserve(values.size());
    for (double v : values) row.push_back(format_double(v));
    add_row(std::move(row));
  }
  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw DomainError("CSV has no column '" + name + "'");
  }
};

inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline void write_csv(std::ostream& os, const CsvTable& t) {
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) os << ',';
      os << csv_escape(fields[i]);
    }
    os << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
}

inline std::string to_csv_string(const CsvTable& t) {
  std::ostringstream os;
  write_csv(os, t);
  return os.str();
}

/// Parses a CSV document with a mandatory header row. Accepts CRLF on input.
inline CsvTable parse_csv(std::istream& is) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false, any = false;
  std::size_t line = 1;
  char c;
  auto end_record = [&] {
    rec.push_back(std::move(field));
    field.clear();
    records.push_back(std::move(rec));
    rec.clear();
    any = false;
  };
  while (is.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (is.peek() == '"') {
          is.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    any = true;
    if (c == '"') {
      if (!field.empty()) throw DomainError("CSV line " + std::to_string(line) + ": stray quote");
      quoted = true;
    } else if (c == ',') {
      rec.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      if (is.peek() != '\n') throw DomainError("CSV line " + std::to_string(line) + ": bare carriage return");
    } else if (c == '\n') {
      end_record();
      ++line;
    } else {
      field += c;
    }
  }
  if (quoted) throw DomainError("CSV: unterminated quoted field");
  if (any) end_record();
  if (records.empty()) throw DomainError("CSV: missing header row");
  CsvTable t;
  t.header = std::move(records.front());
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].size() != t.header.size())
      throw DomainError("CSV record " + std::to_string(i + 1) + ": expected " + std::to_string(t.header.size()) +
                        " fields, got " + std::to_string(records[i].size()));
    t.rows.push_back(std::move(records[i]));
  }
  return t;
}

inline CsvTable parse_csv_string(const std::string& s) {
  std::istringstream is(s);
  return parse_csv(is);
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open '" + path + "'");
  return parse_csv(in);
}

/// All-numeric table as a matrix (one row per record).
inline Matrix to_matrix(const CsvTable& t) {
  Matrix m(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    for (std::size_t j = 0; j < t.header.size(); ++j) {
      try {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = parse_double(t.rows[i][j]);
      } catch (const DomainError&) {
        throw DomainError("CSV record " + std::to_string(i + 2) + ", column '" + t.header[j] + "': not a number");
      }
    }
  return m;
}

}  // namespace lfgo::io
