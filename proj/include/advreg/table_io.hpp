#pragma once

#include "advreg/core.hpp"
#include "advreg/experiments.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace advreg {

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed file content; the message carries "path:line".
class ParseError : public Error {
 public:
  using Error::Error;
};

// 17 significant digits, enough to round-trip any double.
std::string format_double(double value);

// Plain comma-separated tables: one header line, no quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // Source line of each row (1-based); filled by parse_csv.
  std::vector<long> row_lines;

  std::string render() const;
};

CsvTable parse_csv(const std::string& text, const std::string& source = "<input>");
std::string read_text_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// The target column is taken by name; every other column is a feature, in file order.
Dataset dataset_from_csv(const CsvTable& table, const std::string& source,
                         const std::string& target_col = "y");
Dataset read_dataset_csv(const std::filesystem::path& path, const std::string& target_col = "y");
// Header x1..xm,y.
CsvTable dataset_table(const Dataset& data);

// Columns: delta, train_mse, adv_objective, l1_norm, l2_norm, nonzero_count,
// beta_1..beta_m; rows in ascending delta.
CsvTable path_table(const std::vector<PathRecord>& path);

// Columns: m, delta, estimator, stat, train_mse, test_mse, l2_norm; three rows
// (median, q25, q75) per record.
CsvTable sweep_table(const std::vector<SweepRecord>& records);

}  // namespace advreg
