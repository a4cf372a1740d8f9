#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "moodshift/baselines.hpp"
#include "moodshift/lda.hpp"
#include "moodshift/nnclassifier.hpp"

namespace moodshift {

inline constexpr std::string_view kToolVersion = "0.1.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `key = value` lines grouped under `[section]` headers; ';' and '#' start
/// comments. Keys outside a section are rejected.
class IniFile {
 public:
  static IniFile parse(std::string_view text, std::string origin = "<string>");
  static IniFile load(const std::string& path);

  const std::string& origin() const { return origin_; }
  /// Directory of the file, used to resolve relative paths ("" for strings).
  const std::string& base_dir() const { return base_dir_; }

  bool has(std::string_view section, std::string_view key) const;
  std::optional<std::string> get(std::string_view section, std::string_view key) const;
  std::string get_string(std::string_view section, std::string_view key, std::string fallback) const;
  double get_double(std::string_view section, std::string_view key, double fallback) const;
  std::uint64_t get_u64(std::string_view section, std::string_view key, std::uint64_t fallback) const;
  bool get_bool(std::string_view section, std::string_view key, bool fallback) const;
  /// Comma-separated list, items trimmed.
  std::vector<std::string> get_list(std::string_view section, std::string_view key) const;
  /// Path resolved against base_dir() when relative.
  std::optional<std::string> get_path(std::string_view section, std::string_view key) const;

  /// Throws ConfigError on any section or key not listed in `known`.
  void check_known(const std::map<std::string, std::vector<std::string>>& known) const;

 private:
  std::string origin_;
  std::string base_dir_;
  std::map<std::string, std::map<std::string, std::string>> values_;
};

/// Section readers; absent keys keep the defaults passed in.
nn::TrainConfig read_train_config(const IniFile& ini, std::string_view section, nn::TrainConfig defaults = {});
nn::TransformerConfig read_model_config(const IniFile& ini, nn::TransformerConfig defaults = {});
lda::LdaConfig read_lda_config(const IniFile& ini, lda::LdaConfig defaults = {});
RuleConfig read_rule_config(const IniFile& ini, RuleConfig defaults = {});

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);
/// Digest of a file's bytes; throws ConfigError if unreadable.
std::string file_digest(const std::string& path);

struct RunManifest {
  std::string subcommand;
  std::vector<std::pair<std::string, std::string>> resolved_config;  // key, value in order
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> input_digests;  // path, fnv1a64 hex
  std::string tool_version{kToolVersion};

  std::string to_json() const;
  /// Writes <dir>/run_manifest.json, creating dir if needed.
  void write(const std::string& dir) const;
};

}  // namespace moodshift
