#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace lcov::cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OptionSpec {
  std::string key;
  std::string default_value;
  std::string help;
};

using ValueMap = std::map<std::string, std::string>;

/// `key = value` lines; blank lines and lines starting with '#' are skipped.
ValueMap parse_config_text(const std::string &text, const std::string &source = "config");
ValueMap read_config_file(const std::string &path);

// Resolved settings for one subcommand. Precedence: defaults < file < flags.
class Config {
public:
  Config(const std::vector<OptionSpec> &specs, const ValueMap &file, const ValueMap &flags);

  const std::string &get(const std::string &key) const;
  double get_double(const std::string &key) const;
  std::size_t get_size(const std::string &key) const;
  std::int64_t get_int(const std::string &key) const;
  std::uint64_t get_u64(const std::string &key) const;
  bool get_bool(const std::string &key) const;
  /// Comma-separated list; empty value gives an empty list.
  std::vector<std::string> get_list(const std::string &key) const;

  const ValueMap &values() const { return values_; }
  /// One `key=value` line per setting, sorted by key.
  std::string render(const std::string &prefix = "") const;

private:
  ValueMap values_;
};

/// `kernel_size` <-> `kernel-size`.
std::string flag_name(const std::string &key);

} // namespace lcov::cli
