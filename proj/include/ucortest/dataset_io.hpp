#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ucortest/data_matrix.hpp"

namespace ucortest::io {

struct ParseOptions {
  std::optional<char> delimiter;  ///< auto-detected among ',', '\t', ';' when unset
  bool header = false;            ///< skip the first non-empty line
  std::size_t min_rows = 3;
  std::size_t min_cols = 3;
};

struct ParsedDataset {
  DataMatrix data;
  char delimiter = ',';
  std::vector<std::string> column_names;  ///< empty without a header
  std::vector<std::string> warnings;      ///< e.g. constant columns
};

/// Delimiter with the most occurrences in `line` among ',', '\t', ';'.
/// Falls back to ',' when none occurs.
char detect_delimiter(std::string_view line);

/// Parses delimiter-separated numeric text, rows = samples, columns = variables.
/// Throws ParseError naming the line (and column) of the first bad cell, and
/// InvalidArgumentError when the shape is below the minimum.
ParsedDataset parse_dataset_text(std::string_view text, const ParseOptions& options = {});

ParsedDataset parse_dataset(const std::filesystem::path& path, const ParseOptions& options = {});

/// Writes `data` as comma-separated text with full double precision.
std::string to_csv(const DataMatrix& data);

}  // namespace ucortest::io
