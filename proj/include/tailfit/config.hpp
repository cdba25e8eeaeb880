#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace tailfit {

/// Every setting the CLI and the report pipeline read. Keys in a config file
/// use the field names below.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string input;
  std::string column = "0";
  std::string out = "tailfit_out";
  std::string model = "ln";
  /// Cutoff for the tail models; 0 selects it by the KS scan.
  double xmin = 0.0;
  std::string test = "ks";
  int replicates = 350;
  /// EM starts for fits of the data.
  int restarts = 20;
  /// EM starts for bootstrap refits, which also start from the generating fit.
  int gof_restarts = 2;
  std::size_t n_floor = 50;
  std::size_t max_candidates = 2000;
  unsigned threads = 0;
  std::string drift = "normal:0,1";
  double diffusion = 1.0;
  double dt = 0.01;
  std::size_t steps = 1'000'000;
  std::size_t burnin = 100'000;
  std::size_t thin = 10;

  /// Sets one key from its text form; throws InputError for unknown keys or
  /// malformed values.
  void set(const std::string& key, const std::string& value);
  /// key=value pairs in a fixed order.
  std::vector<std::pair<std::string, std::string>> entries() const;
};

/// Parses "key = value" lines; '#' starts a comment, blank lines and
/// [section] headers are ignored, and values may be double-quoted.
/// Throws InputError with the line number on malformed lines.
std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text);
std::vector<std::pair<std::string, std::string>> load_config_file(const std::string& path);

/// FNV-1a over the canonical entries, as 16 hex digits. `input`, `out` and
/// `threads` are excluded: they do not change the results.
std::string config_hash(const RunConfig& config);

}  // namespace tailfit
