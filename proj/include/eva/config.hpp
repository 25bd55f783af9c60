#pragma once

// UTF-8 key=value text files: one field per line, '#' starts a comment line,
// blank lines ignored. Consumers reject keys they do not know.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace eva::cfg {

static_assert(std::is_same_v<std::uint64_t, std::size_t>, "seeds are read through the size_t overload");

using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::string_view text);
KeyValues read_key_value_file(const std::filesystem::path& path);
std::string format_key_values(const std::vector<std::pair<std::string, std::string>>& entries);

/// Pulls typed values out of a KeyValues map and remembers which keys were
/// consumed, so leftovers can be reported.
class Reader {
 public:
  explicit Reader(KeyValues kv) : kv_(std::move(kv)) {}

  void read(const std::string& key, std::string& out);
  void read(const std::string& key, double& out);
  void read(const std::string& key, std::size_t& out);
  void read(const std::string& key, bool& out);
  void read(const std::string& key, std::vector<std::size_t>& out);
  void read(const std::string& key, std::vector<double>& out);

  /// Throws ConfigError listing every key that was never read.
  void reject_unknown() const;

 private:
  const std::string* find(const std::string& key);
  KeyValues kv_;
  std::vector<std::string> used_;
};

std::string format_double(double v);
std::string join(const std::vector<std::size_t>& values);
std::string join(const std::vector<double>& values);

/// FNV-1a 64-bit, used for config fingerprints.
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace eva::cfg
