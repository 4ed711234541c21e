#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace gde::cli {

/// Sectioned key=value configuration. '#' and ';' start comments. Keys are
/// validated against a per-experiment schema: unknown keys are hard errors
/// naming the field and line.
class Config {
 public:
  struct Entry {
    std::string value;
    int line = 0;  // 0: injected default or override
  };

  static Config parse_file(const std::string& path);
  static Config parse_text(const std::string& text, const std::string& origin = "<config>");

  /// Applies a `section.key=value` override (command-line flag or env).
  void set(const std::string& dotted_key, const std::string& value);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  long get_long(const std::string& section, const std::string& key, long fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<std::uint64_t> get_seed_list(const std::string& section, const std::string& key,
                                           std::vector<std::uint64_t> fallback) const;

  /// Throws unless every present key appears in `allowed` (dotted form).
  void validate_keys(const std::vector<std::string>& allowed) const;

  /// Canonical text: sections and keys sorted, one `key = value` per line.
  std::string normalized_text() const;

  const std::string& origin() const { return origin_; }

 private:
  std::map<std::string, std::map<std::string, Entry>> sections_;
  std::string origin_ = "<config>";
};

/// FNV-1a 64 over the normalized config text, hex-encoded.
std::string config_hash(const Config& cfg);

}  // namespace gde::cli
