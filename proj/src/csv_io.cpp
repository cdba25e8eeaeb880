#include "tailfit/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "tailfit/errors.hpp"

namespace tailfit {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_row(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.emplace_back(trim(cur));
  return fields;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

bool is_index(const std::string& s) {
  return !s.empty() && s.find_first_not_of("0123456789") == std::string::npos;
}

}  // namespace

LoadResult load_csv(const std::string& path, const std::string& column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open input file '" + path + "'");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
  if (!lines.empty() && lines.front().starts_with("\xEF\xBB\xBF")) lines.front().erase(0, 3);

  const bool by_name = !is_index(column);
  std::size_t first_data = 0;
  std::size_t col = 0;
  bool header = false;
  // The header is the first non-blank line, if any.
  std::size_t head = 0;
  while (head < lines.size() && trim(lines[head]).empty()) ++head;
  if (head < lines.size()) {
    const auto fields = split_row(lines[head]);
    bool any_numeric = false;
    for (const auto& f : fields) any_numeric = any_numeric || parse_number(f).has_value();
    header = by_name || !any_numeric;
    if (header) {
      first_data = head + 1;
      if (by_name) {
        std::size_t found = fields.size();
        for (std::size_t i = 0; i < fields.size(); ++i) {
          if (fields[i] == column) {
            found = i;
            break;
          }
        }
        if (found == fields.size()) {
          throw InputError("column '" + column + "' not found in the header of '" + path + "'");
        }
        col = found;
      }
    }
  } else if (by_name) {
    throw InputError("column '" + column + "' requested but '" + path + "' is empty");
  }
  if (!by_name) {
    try {
      col = std::stoul(column);
    } catch (const std::exception&) {
      throw InputError("bad column index '" + column + "'");
    }
  }

  std::vector<double> values;
  std::vector<std::string> log;
  std::size_t read = 0;
  for (std::size_t i = first_data; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    ++read;
    const auto fields = split_row(lines[i]);
    const std::string where = "line " + std::to_string(i + 1) + ": ";
    if (col >= fields.size()) {
      log.push_back(where + "no column " + std::to_string(col));
      continue;
    }
    const auto v = parse_number(fields[col]);
    if (fields[col].empty()) {
      log.push_back(where + "blank value");
    } else if (!v) {
      log.push_back(where + "not a number: '" + fields[col] + "'");
    } else if (!std::isfinite(*v)) {
      log.push_back(where + "not finite: '" + fields[col] + "'");
    } else if (*v <= 0.0) {
      log.push_back(where + "not positive: '" + fields[col] + "'");
    } else {
      values.push_back(*v);
    }
  }
  if (values.empty()) throw InputError("no valid positive values in '" + path + "'");
  return {Sample(std::move(values)), header, read, log.size(), std::move(log)};
}

void write_csv(const std::string& path, const Sample& sample, const std::string& header) {
  std::string out = header + "\n";
  char buf[32];
  for (double v : sample.values()) {
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
    out += '\n';
  }
  write_text_atomic(path, out);
}

void write_text_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw InputError("failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

}  // namespace tailfit
