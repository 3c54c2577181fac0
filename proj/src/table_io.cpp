#include "advreg/table_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace advreg {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k > 0) line += ',';
    line += fields[k];
  }
  return line;
}

double parse_number(const std::string& field, const std::string& where) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec != std::errc() || ptr != last) {
    throw ParseError(where + ": cannot parse '" + field + "' as a number");
  }
  return value;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  if (ec != std::errc()) throw Error("number formatting failed");
  return std::string(buf, ptr);
}

std::string CsvTable::render() const {
  std::string out = join(header);
  out += '\n';
  for (const auto& row : rows) {
    out += join(row);
    out += '\n';
  }
  return out;
}

CsvTable parse_csv(const std::string& text, const std::string& source) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      for (const auto& name : table.header) {
        if (name.empty()) {
          throw ParseError(source + ":" + std::to_string(line_no) + ": empty column name");
        }
      }
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(table.header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.row_lines.push_back(line_no);
  }
  if (!have_header) throw ParseError(source + ": no header line");
  return table;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error while reading '" + path.string() + "'");
  return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw IoError("error while writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw IoError("cannot move output into place at '" + path.string() + "': " + ec.message());
  }
}

Dataset dataset_from_csv(const CsvTable& table, const std::string& source,
                         const std::string& target_col) {
  const auto target = std::find(table.header.begin(), table.header.end(), target_col);
  if (target == table.header.end()) {
    throw ParseError(source + ": no column named '" + target_col + "'");
  }
  if (std::count(table.header.begin(), table.header.end(), target_col) > 1) {
    throw ParseError(source + ": column '" + target_col + "' appears more than once");
  }
  const auto target_idx = static_cast<std::size_t>(target - table.header.begin());
  const auto n = static_cast<Index>(table.rows.size());
  const auto m = static_cast<Index>(table.header.size()) - 1;
  if (n == 0) throw EmptyDataError(source + ": no data rows");
  if (m == 0) throw EmptyDataError(source + ": no feature columns");

  Matrix X(n, m);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    const long line = static_cast<std::size_t>(i) < table.row_lines.size()
                          ? table.row_lines[static_cast<std::size_t>(i)]
                          : static_cast<long>(i) + 2;
    Index j = 0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::string where = source + ":" + std::to_string(line) + " column '" +
                                table.header[c] + "'";
      const double value = parse_number(row[c], where);
      if (c == target_idx) {
        y(i) = value;
      } else {
        X(i, j++) = value;
      }
    }
  }
  return validate_dataset(std::move(X), std::move(y));
}

Dataset read_dataset_csv(const std::filesystem::path& path, const std::string& target_col) {
  const std::string source = path.string();
  return dataset_from_csv(parse_csv(read_text_file(path), source), source, target_col);
}

CsvTable dataset_table(const Dataset& data) {
  CsvTable table;
  for (Index j = 0; j < data.m(); ++j) table.header.push_back("x" + std::to_string(j + 1));
  table.header.push_back("y");
  table.rows.reserve(static_cast<std::size_t>(data.n()));
  for (Index i = 0; i < data.n(); ++i) {
    std::vector<std::string> row;
    row.reserve(static_cast<std::size_t>(data.m() + 1));
    for (Index j = 0; j < data.m(); ++j) row.push_back(format_double(data.X()(i, j)));
    row.push_back(format_double(data.y()(i)));
    table.rows.push_back(std::move(row));
  }
  return table;
}

CsvTable path_table(const std::vector<PathRecord>& path) {
  CsvTable table;
  table.header = {"delta", "train_mse", "adv_objective", "l1_norm", "l2_norm", "nonzero_count"};
  const Index m = path.empty() ? 0 : path.front().beta.size();
  for (Index j = 0; j < m; ++j) table.header.push_back("beta_" + std::to_string(j + 1));

  std::vector<const PathRecord*> order;
  for (const auto& rec : path) order.push_back(&rec);
  std::stable_sort(order.begin(), order.end(),
                   [](const PathRecord* a, const PathRecord* b) { return a->delta < b->delta; });
  for (const PathRecord* rec : order) {
    std::vector<std::string> row{format_double(rec->delta),
                                 format_double(rec->train_mse),
                                 format_double(rec->train_adv_objective),
                                 format_double(rec->l1_norm),
                                 format_double(rec->l2_norm),
                                 std::to_string(rec->nonzero_count)};
    for (Index j = 0; j < rec->beta.size(); ++j) row.push_back(format_double(rec->beta(j)));
    table.rows.push_back(std::move(row));
  }
  return table;
}

CsvTable sweep_table(const std::vector<SweepRecord>& records) {
  CsvTable table;
  table.header = {"m", "delta", "estimator", "stat", "train_mse", "test_mse", "l2_norm"};
  for (const auto& rec : records) {
    auto add = [&](const char* stat, double Quantiles::*field) {
      table.rows.push_back({std::to_string(rec.m), format_double(rec.delta), rec.estimator, stat,
                            format_double(rec.train_mse.*field), format_double(rec.test_mse.*field),
                            format_double(rec.l2_norm.*field)});
    };
    add("median", &Quantiles::median);
    add("q25", &Quantiles::q25);
    add("q75", &Quantiles::q75);
  }
  return table;
}

}  // namespace advreg
