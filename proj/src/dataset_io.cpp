#include "ucortest/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ucortest/error.hpp"

namespace ucortest::io {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char delimiter) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delimiter, start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

char detect_delimiter(std::string_view line) {
  char best = ',';
  std::size_t best_count = 0;
  for (char c : {',', '\t', ';'}) {
    const auto count = static_cast<std::size_t>(std::count(line.begin(), line.end(), c));
    if (count > best_count) {
      best = c;
      best_count = count;
    }
  }
  return best;
}

ParsedDataset parse_dataset_text(std::string_view text, const ParseOptions& options) {
  std::vector<std::pair<std::size_t, std::string_view>> lines;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const auto line = trim(text.substr(start, end - start));
    if (!line.empty()) lines.emplace_back(line_no, line);
    start = end + 1;
  }
  if (lines.empty()) throw ParseError("no data rows", line_no);

  const char delimiter = options.delimiter.value_or(detect_delimiter(lines.front().second));
  std::vector<std::string> names;
  std::size_t first_data = 0;
  if (options.header) {
    for (auto cell : split(lines.front().second, delimiter)) names.emplace_back(trim(cell));
    first_data = 1;
  }

  const std::size_t rows = lines.size() - first_data;
  const std::size_t cols =
      rows > 0 ? split(lines[first_data].second, delimiter).size() : names.size();
  if (rows < options.min_rows || cols < options.min_cols) {
    throw InvalidArgumentError("dataset is " + std::to_string(rows) + " x " +
                               std::to_string(cols) + "; need at least " +
                               std::to_string(options.min_rows) + " rows and " +
                               std::to_string(options.min_cols) + " columns");
  }
  if (options.header && names.size() != cols) {
    throw ParseError("header has " + std::to_string(names.size()) + " fields but data rows have " +
                         std::to_string(cols),
                     lines.front().first);
  }

  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& [number, line] = lines[first_data + r];
    const auto cells = split(line, delimiter);
    if (cells.size() != cols) {
      throw ParseError("line " + std::to_string(number) + ": expected " + std::to_string(cols) +
                           " fields, found " + std::to_string(cells.size()),
                       number);
    }
    for (std::size_t c = 0; c < cols; ++c) {
      const auto cell = trim(cells[c]);
      double v = 0.0;
      const auto* end = cell.data() + cell.size();
      const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
      if (cell.empty() || ec != std::errc{} || ptr != end) {
        throw ParseError("line " + std::to_string(number) + ", column " + std::to_string(c + 1) +
                             ": '" + std::string(cell) + "' is not a number",
                         number, c + 1);
      }
      if (!std::isfinite(v)) {
        throw ParseError("line " + std::to_string(number) + ", column " + std::to_string(c + 1) +
                             ": non-finite value '" + std::string(cell) + "'",
                         number, c + 1);
      }
      values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  }

  std::vector<std::string> warnings;
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    if ((values.col(c).array() == values(0, c)).all()) {
      warnings.push_back("column " + std::to_string(c + 1) +
                         " is constant and carries no rank information");
    }
  }
  return {DataMatrix(std::move(values)), delimiter, std::move(names), std::move(warnings)};
}

ParsedDataset parse_dataset(const std::filesystem::path& path, const ParseOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'", 0);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset_text(buffer.str(), options);
}

std::string to_csv(const DataMatrix& data) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t r = 0; r < data.n(); ++r) {
    for (std::size_t c = 0; c < data.d(); ++c) {
      if (c) os << ',';
      os << data(r, c);
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace ucortest::io
