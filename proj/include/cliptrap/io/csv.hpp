#ifndef CLIPTRAP_IO_CSV_HPP
#define CLIPTRAP_IO_CSV_HPP

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "cliptrap/dataset.hpp"
#include "cliptrap/errors.hpp"
#include "cliptrap/io/keyvalue.hpp"

// Comma-separated tables with a header of unit-annotated column names
// ("t_s", "v_mt_cm3"). '#' lines are comments.
namespace cliptrap::io {

// Shortest representation that round-trips, so output is reproducible.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct CsvTable {
  std::vector<std::string> comments;  // written as "# ..." lines
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t size() const { return rows.size(); }

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    return std::nullopt;
  }

  std::size_t require_column(std::string_view name, const std::string& source) const {
    if (auto i = find(name)) return *i;
    throw InputError(source + ": missing column '" + std::string(name) + "'");
  }

  std::vector<double> numbers(std::size_t column, const std::string& source) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto v = parse_double(rows[r][column]);
      if (!v) {
        throw InputError(source + ": row " + std::to_string(r + 1) + ", column '" + columns[column] +
                         "' is not a number: '" + rows[r][column] + "'");
      }
      out.push_back(*v);
    }
    return out;
  }

  std::vector<double> numbers(std::string_view name, const std::string& source) const {
    return numbers(require_column(name, source), source);
  }

  void add_row(std::vector<std::string> cells) {
    detail::require(cells.size() == columns.size(), "csv: row width differs from header");
    rows.push_back(std::move(cells));
  }

  void add_row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_double(v));
    add_row(std::move(cells));
  }
};

inline std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline CsvTable read_csv(std::istream& in, const std::string& source = "<csv>") {
  CsvTable t;
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line);
    if (body.empty()) continue;
    if (body.front() == '#') {
      t.comments.push_back(trim(std::string_view(body).substr(1)));
      continue;
    }
    auto fields = split_fields(body);
    if (!have_header) {
      t.columns = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.columns.size()) {
      throw InputError(source + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.columns.size()) +
                       " fields, got " + std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  return t;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return read_csv(in, path);
}

// Commas in free-text cells would break the dialect.
inline std::string sanitize_cell(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

inline void write_csv(std::ostream& out, const CsvTable& t) {
  for (const auto& c : t.comments) out << "# " << c << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

inline std::string to_string(const CsvTable& t) {
  std::ostringstream out;
  write_csv(out, t);
  return out.str();
}

// Writes to "<path>.tmp" and renames over the target.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw InputError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw InputError("cannot move output into place at '" + path + "'");
  }
}

inline void write_csv_file(const std::string& path, const CsvTable& t) { write_file_atomic(path, to_string(t)); }

// DataSet columns by name. A missing sigma column gives sigma = 1; an
// optional "mask" column keeps rows where it is nonzero.
struct DataSetColumns {
  std::string x;
  std::string y;
  std::string sigma;
  double x_factor = 1.0;  // file units -> SI
  double y_factor = 1.0;
};

inline DataSet dataset_from_csv(const CsvTable& t, const DataSetColumns& cols, const std::string& source,
                                bool* has_sigma = nullptr) {
  DataSet d;
  d.x_label = cols.x;
  d.y_label = cols.y;
  if (has_sigma) *has_sigma = false;
  // No rows: let the consumer report the row count.
  if (t.rows.empty()) return d;
  const auto x = t.numbers(cols.x, source);
  const auto y = t.numbers(cols.y, source);
  std::vector<double> s(x.size(), 1.0);
  const bool sigma_present = !cols.sigma.empty() && t.find(cols.sigma).has_value();
  if (sigma_present) s = t.numbers(cols.sigma, source);
  if (has_sigma) *has_sigma = sigma_present;
  std::vector<double> mask(x.size(), 1.0);
  if (t.find("mask")) mask = t.numbers("mask", source);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (mask[i] == 0.0) continue;
    d.add(x[i] * cols.x_factor, y[i] * cols.y_factor, sigma_present ? s[i] * cols.y_factor : 1.0);
  }
  return d;
}

}  // namespace cliptrap::io

#endif
