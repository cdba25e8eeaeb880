#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tailfit/sample.hpp"

namespace tailfit {

struct LoadResult {
  Sample sample;
  bool had_header = false;
  std::size_t rows_read = 0;
  std::size_t rejected = 0;
  /// One line per rejected row: "line <k>: <reason>".
  std::vector<std::string> reject_log;
};

/// Reads one column of a comma-separated file. `column` is a 0-based index
/// or a header name. The first row is a header when `column` is a name or
/// when none of its fields parses as a number. Rows whose value is blank,
/// non-numeric, non-finite or <= 0 are rejected and logged.
/// Throws InputError for a missing file, an unknown column, or no valid rows.
LoadResult load_csv(const std::string& path, const std::string& column = "0");

/// One value per line under a header, at full precision.
void write_csv(const std::string& path, const Sample& sample, const std::string& header = "size");

/// Writes through a temporary file in the same directory and renames it.
void write_text_atomic(const std::string& path, const std::string& content);

}  // namespace tailfit
