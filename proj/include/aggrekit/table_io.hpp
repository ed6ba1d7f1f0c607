#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "aggrekit/traffic_matrix.hpp"

namespace aggrekit::data {

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"),
        line_number(line) {}
  std::size_t line_number;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Delimiter { kWhitespace, kComma };

// Reads the selected columns (1-based, following the dataset convention)
// of a delimited text table into a matrix, row order preserved. Blank lines
// and '#' comment lines are skipped.
TrafficMatrix ingest_table(const std::filesystem::path& path,
                           const std::vector<int>& columns,
                           Delimiter delimiter = Delimiter::kWhitespace);

// Full-precision decimal, round-trips through read_matrix_csv.
std::string format_full(double v);

// CSV with a "# rows=<m> cols=<n> masked=<count>" header line; unobserved
// entries are written as nan.
void write_matrix_csv(const TrafficMatrix& tm, const std::filesystem::path& path);
TrafficMatrix read_matrix_csv(const std::filesystem::path& path);

}  // namespace aggrekit::data
