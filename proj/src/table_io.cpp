#include "aggrekit/table_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace aggrekit::data {

namespace {

std::vector<std::string_view> split_fields(std::string_view line, Delimiter d) {
  std::vector<std::string_view> fields;
  if (d == Delimiter::kComma) {
    std::size_t start = 0;
    while (start <= line.size()) {
      const std::size_t pos = line.find(',', start);
      if (pos == std::string_view::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, pos - start));
      start = pos + 1;
    }
  } else {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      const std::size_t start = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
      if (i > start) fields.push_back(line.substr(start, i - start));
    }
  }
  return fields;
}

double parse_double(std::string_view field, std::size_t line_no) {
  // Trim spaces that survive comma splitting.
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t'))
    field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\r' ||
                            field.back() == '\t'))
    field.remove_suffix(1);
  if (field == "nan" || field == "NaN" || field == "NAN") {
    return std::nan("");
  }
  double value = 0.0;
  const auto* begin = field.data();
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError("malformed numeric field '" + std::string(field) + "'",
                     line_no);
  }
  return value;
}

}  // namespace

TrafficMatrix ingest_table(const std::filesystem::path& path,
                           const std::vector<int>& columns,
                           Delimiter delimiter) {
  if (columns.empty()) {
    throw std::invalid_argument("ingest_table: no columns selected");
  }
  for (int c : columns) {
    if (c < 1) throw std::invalid_argument("ingest_table: columns are 1-based");
  }
  std::ifstream in(path);
  if (!in) {
    throw IoError("ingest_table: cannot open " + path.string());
  }
  const int max_col = *std::max_element(columns.begin(), columns.end());

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_fields(line, delimiter);
    if (static_cast<int>(fields.size()) < max_col) {
      throw ParseError("row has " + std::to_string(fields.size()) +
                           " fields, need at least " + std::to_string(max_col),
                       line_no);
    }
    std::vector<double> row(columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
      row[j] = parse_double(fields[static_cast<std::size_t>(columns[j] - 1)],
                            line_no);
    }
    rows.push_back(std::move(row));
  }

  TrafficMatrix tm;
  tm.values.resize(static_cast<Eigen::Index>(rows.size()),
                   static_cast<Eigen::Index>(columns.size()));
  for (Eigen::Index i = 0; i < tm.rows(); ++i)
    for (Eigen::Index j = 0; j < tm.cols(); ++j)
      tm.values(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return tm;
}

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_matrix_csv(const TrafficMatrix& tm, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("write_matrix_csv: cannot open " + path.string());
  out << "# rows=" << tm.rows() << " cols=" << tm.cols()
      << " masked=" << tm.masked_count() << "\n";
  for (Eigen::Index i = 0; i < tm.rows(); ++i) {
    for (Eigen::Index j = 0; j < tm.cols(); ++j) {
      if (j) out << ',';
      if (tm.observed(i, j)) {
        out << format_full(tm.values(i, j));
      } else {
        out << "nan";
      }
    }
    out << '\n';
  }
  if (!out) throw IoError("write_matrix_csv: write failed for " + path.string());
}

TrafficMatrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("read_matrix_csv: cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header) || header.rfind("# rows=", 0) != 0) {
    throw ParseError("missing matrix header", 1);
  }
  Eigen::Index m = 0, n = 0;
  long long masked = 0;
  if (std::sscanf(header.c_str(), "# rows=%td cols=%td masked=%lld", &m, &n,
                  &masked) != 3) {
    throw ParseError("unparseable matrix header", 1);
  }

  TrafficMatrix tm;
  tm.values.resize(m, n);
  if (masked > 0) tm.mask = BoolArray::Constant(m, n, true);
  std::string line;
  std::size_t line_no = 1;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!std::getline(in, line)) {
      throw ParseError("unexpected end of file", line_no);
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = split_fields(line, Delimiter::kComma);
    if (static_cast<Eigen::Index>(fields.size()) != n) {
      throw ParseError("expected " + std::to_string(n) + " fields", line_no);
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = parse_double(fields[static_cast<std::size_t>(j)], line_no);
      if (std::isnan(v)) {
        if (!tm.mask) tm.mask = BoolArray::Constant(m, n, true);
        (*tm.mask)(i, j) = false;
        tm.values(i, j) = 0.0;
      } else {
        tm.values(i, j) = v;
      }
    }
  }
  return tm;
}

}  // namespace aggrekit::data
