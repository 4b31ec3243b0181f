#include "cli_config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace lcov::cli {

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string &key, const std::string &value, const char *kind) {
  throw ConfigError("invalid value '" + value + "' for " + key + " (expected " + kind + ")");
}

} // namespace

ValueMap parse_config_text(const std::string &text, const std::string &source) {
  ValueMap out;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#')
      continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(n) + ": expected key=value");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty())
      throw ConfigError(source + ":" + std::to_string(n) + ": empty key");
    if (out.count(key))
      throw ConfigError(source + ":" + std::to_string(n) + ": duplicate key '" + key + "'");
    out[key] = trim(t.substr(eq + 1));
  }
  return out;
}

ValueMap read_config_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

Config::Config(const std::vector<OptionSpec> &specs, const ValueMap &file, const ValueMap &flags) {
  for (const auto &s : specs)
    values_[s.key] = s.default_value;
  for (const auto *src : {&file, &flags})
    for (const auto &[k, v] : *src) {
      if (!values_.count(k)) {
        std::string valid;
        for (const auto &s : specs)
          valid += (valid.empty() ? "" : ", ") + s.key;
        throw ConfigError("unknown key '" + k + "'; valid keys: " + valid);
      }
      values_[k] = v;
    }
}

const std::string &Config::get(const std::string &key) const {
  const auto it = values_.find(key);
  if (it == values_.end())
    throw ConfigError("no setting named '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string &key) const {
  const std::string &v = get(key);
  char *end = nullptr;
  errno = 0;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(d))
    bad_value(key, v, "a finite number");
  return d;
}

std::int64_t Config::get_int(const std::string &key) const {
  const std::string &v = get(key);
  char *end = nullptr;
  errno = 0;
  const long long i = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || errno == ERANGE)
    bad_value(key, v, "an integer");
  return i;
}

std::size_t Config::get_size(const std::string &key) const {
  const std::int64_t i = get_int(key);
  if (i < 0)
    bad_value(key, get(key), "a non-negative integer");
  return static_cast<std::size_t>(i);
}

std::uint64_t Config::get_u64(const std::string &key) const {
  const std::string &v = get(key);
  char *end = nullptr;
  errno = 0;
  const unsigned long long u = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || v[0] == '-' || *end != '\0' || errno == ERANGE)
    bad_value(key, v, "an unsigned integer");
  return u;
}

bool Config::get_bool(const std::string &key) const {
  const std::string &v = get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on")
    return true;
  if (v == "false" || v == "0" || v == "no" || v == "off")
    return false;
  bad_value(key, v, "true or false");
}

std::vector<std::string> Config::get_list(const std::string &key) const {
  std::vector<std::string> out;
  std::istringstream in(get(key));
  std::string item;
  while (std::getline(in, item, ','))
    if (!trim(item).empty())
      out.push_back(trim(item));
  return out;
}

std::string Config::render(const std::string &prefix) const {
  std::string out;
  for (const auto &[k, v] : values_)
    out += prefix + k + "=" + v + "\n";
  return out;
}

std::string flag_name(const std::string &key) {
  std::string f = key;
  std::replace(f.begin(), f.end(), '_', '-');
  return f;
}

} // namespace lcov::cli
