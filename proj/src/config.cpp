#include "tailfit/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tailfit/errors.hpp"

namespace tailfit {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_as(const std::string& key, const std::string& value) {
  T out{};
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw InputError("config key '" + key + "': bad value '" + value + "'");
  }
  return out;
}

std::string show(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  auto positive = [&](auto v) {
    if (!(v > 0)) throw InputError("config key '" + key + "' must be positive");
    return v;
  };
  if (key == "seed") seed = parse_as<std::uint64_t>(key, value);
  else if (key == "input") input = value;
  else if (key == "column") column = value;
  else if (key == "out") out = value;
  else if (key == "model") model = value;
  else if (key == "xmin") {
    xmin = parse_as<double>(key, value);
    if (!(xmin >= 0.0)) throw InputError("config key 'xmin' must be >= 0");
  }
  else if (key == "test") test = value;
  else if (key == "replicates") replicates = positive(parse_as<int>(key, value));
  else if (key == "restarts") restarts = positive(parse_as<int>(key, value));
  else if (key == "gof_restarts") gof_restarts = positive(parse_as<int>(key, value));
  else if (key == "n_floor") n_floor = positive(parse_as<std::size_t>(key, value));
  else if (key == "max_candidates") max_candidates = positive(parse_as<std::size_t>(key, value));
  else if (key == "threads") threads = parse_as<unsigned>(key, value);
  else if (key == "drift") drift = value;
  else if (key == "diffusion") diffusion = positive(parse_as<double>(key, value));
  else if (key == "dt") dt = positive(parse_as<double>(key, value));
  else if (key == "steps") steps = positive(parse_as<std::size_t>(key, value));
  else if (key == "burnin") burnin = parse_as<std::size_t>(key, value);
  else if (key == "thin") thin = positive(parse_as<std::size_t>(key, value));
  else throw InputError("unknown config key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  return {
      {"seed", std::to_string(seed)},
      {"input", input},
      {"column", column},
      {"out", out},
      {"model", model},
      {"xmin", show(xmin)},
      {"test", test},
      {"replicates", std::to_string(replicates)},
      {"restarts", std::to_string(restarts)},
      {"gof_restarts", std::to_string(gof_restarts)},
      {"n_floor", std::to_string(n_floor)},
      {"max_candidates", std::to_string(max_candidates)},
      {"threads", std::to_string(threads)},
      {"drift", drift},
      {"diffusion", show(diffusion)},
      {"dt", show(dt)},
      {"steps", std::to_string(steps)},
      {"burnin", std::to_string(burnin)},
      {"thin", std::to_string(thin)},
  };
}

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  int number = 0;
  for (std::string line; std::getline(in, line);) {
    ++number;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.erase(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty() || (line.front() == '[' && line.back() == ']')) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError("config line " + std::to_string(number) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw InputError("config line " + std::to_string(number) + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string config_hash(const RunConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [k, v] : config.entries()) {
    if (k == "input" || k == "out" || k == "threads") continue;
    for (char c : k + "=" + v + "\n") {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace tailfit
