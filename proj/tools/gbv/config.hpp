#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gbvcli {

// Schema violations carry the offending key and line for exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Flat dotted-key configuration: one `key = value` per line, '#' comments.
// Unknown keys are rejected against the built-in schema.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_text(const std::string& text, const std::string& origin);

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const;
  std::vector<long> get_longs(const std::string& key, const std::vector<long>& fallback) const;

  // Canonical "key = value" lines sorted by key; hashed for provenance.
  std::string canonical_text() const;
  std::string hash_hex() const;

  // Enumerated-value guard; raises ConfigError naming the key otherwise.
  void expect_one_of(const std::string& key, const std::vector<std::string>& allowed) const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  std::map<std::string, Entry> entries_;
  std::string origin_;

  const Entry* find(const std::string& key) const;
  [[noreturn]] void fail(const std::string& key, const std::string& why) const;
};

}  // namespace gbvcli
