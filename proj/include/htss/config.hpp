#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace htss {

struct ConfigKey {
  std::string_view name;
  std::string_view default_value;
  std::string_view help;
};

/// Every key the toolkit understands, with its default.
std::span<const ConfigKey> config_keys();

/// Flat `key = value` settings; '#' starts a comment. Unknown keys and
/// malformed values are config errors.
class RunConfig {
 public:
  RunConfig();

  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::filesystem::path& path);

  void set(std::string_view key, std::string_view value);
  const std::string& get(std::string_view key) const;
  bool is_set(std::string_view key) const { return !get(key).empty(); }

  std::int64_t get_int(std::string_view key) const;
  std::uint64_t get_seed() const;
  double get_double(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::vector<std::string> get_list(std::string_view key) const;
  /// "A:2,B:1" style list.
  std::vector<std::pair<std::string, int>> get_quotas(std::string_view key) const;
  /// Path value; throws a config error naming the key and path when the
  /// value is empty or the file does not exist.
  std::filesystem::path existing_path(std::string_view key) const;

  /// All keys with their current values, one per line, help as comments.
  std::string dump() const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace htss
