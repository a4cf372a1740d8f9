#include "moodshift/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace moodshift {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string where(const IniFile& ini, std::string_view section, std::string_view key) {
  return ini.origin() + ": [" + std::string(section) + "] " + std::string(key);
}

}  // namespace

IniFile IniFile::parse(std::string_view text, std::string origin) {
  IniFile ini;
  ini.origin_ = std::move(origin);
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(ini.origin_ + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError(ini.origin_ + ": key '" + section + "' is outside any [section]");
    auto& dst = ini.values_[section];
    for (const auto& [key, leaf] : body) dst[key] = trim(leaf.data());
  }
  return ini;
}

IniFile IniFile::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  IniFile ini = parse(ss.str(), path);
  ini.base_dir_ = fs::path(path).parent_path().string();
  return ini;
}

bool IniFile::has(std::string_view section, std::string_view key) const { return get(section, key).has_value(); }

std::optional<std::string> IniFile::get(std::string_view section, std::string_view key) const {
  auto s = values_.find(std::string(section));
  if (s == values_.end()) return std::nullopt;
  auto k = s->second.find(std::string(key));
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

std::string IniFile::get_string(std::string_view section, std::string_view key, std::string fallback) const {
  auto v = get(section, key);
  return v ? *v : std::move(fallback);
}

double IniFile::get_double(std::string_view section, std::string_view key, double fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  double out = 0.0;
  auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || p != v->data() + v->size())
    throw ConfigError(where(*this, section, key) + ": expected a number, got '" + *v + "'");
  return out;
}

std::uint64_t IniFile::get_u64(std::string_view section, std::string_view key, std::uint64_t fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || p != v->data() + v->size())
    throw ConfigError(where(*this, section, key) + ": expected a non-negative integer, got '" + *v + "'");
  return out;
}

bool IniFile::get_bool(std::string_view section, std::string_view key, bool fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError(where(*this, section, key) + ": expected true or false, got '" + *v + "'");
}

std::vector<std::string> IniFile::get_list(std::string_view section, std::string_view key) const {
  std::vector<std::string> out;
  auto v = get(section, key);
  if (!v || v->empty()) return out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = v->find(',', start);
    out.push_back(trim(std::string_view(*v).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<std::string> IniFile::get_path(std::string_view section, std::string_view key) const {
  auto v = get(section, key);
  if (!v || v->empty()) return std::nullopt;
  fs::path p(*v);
  if (p.is_relative() && !base_dir_.empty()) p = fs::path(base_dir_) / p;
  return p.lexically_normal().string();
}

void IniFile::check_known(const std::map<std::string, std::vector<std::string>>& known) const {
  for (const auto& [section, keys] : values_) {
    auto it = known.find(section);
    if (it == known.end()) throw ConfigError(origin_ + ": unknown section [" + section + "]");
    for (const auto& [key, value] : keys) {
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
        throw ConfigError(origin_ + ": unknown key '" + key + "' in [" + section + "]");
    }
  }
}

nn::TrainConfig read_train_config(const IniFile& ini, std::string_view section, nn::TrainConfig d) {
  d.learning_rate = ini.get_double(section, "learning_rate", d.learning_rate);
  d.batch_size = ini.get_u64(section, "batch_size", d.batch_size);
  d.epochs = static_cast<int>(ini.get_u64(section, "epochs", static_cast<std::uint64_t>(d.epochs)));
  d.weight_decay = ini.get_double(section, "weight_decay", d.weight_decay);
  d.seed = ini.get_u64(section, "seed", d.seed);
  if (auto o = ini.get(section, "optimizer")) {
    try {
      d.optimizer = nn::parse_optimizer(*o);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where(ini, section, "optimizer") + ": " + e.what());
    }
  }
  return d;
}

nn::TransformerConfig read_model_config(const IniFile& ini, nn::TransformerConfig d) {
  d.max_len = ini.get_u64("model", "max_len", d.max_len);
  d.d_model = ini.get_u64("model", "d_model", d.d_model);
  d.n_heads = ini.get_u64("model", "n_heads", d.n_heads);
  d.n_layers = ini.get_u64("model", "n_layers", d.n_layers);
  d.d_ff = ini.get_u64("model", "d_ff", d.d_ff);
  d.dropout_rate = ini.get_double("model", "dropout_rate", d.dropout_rate);
  return d;
}

lda::LdaConfig read_lda_config(const IniFile& ini, lda::LdaConfig d) {
  d.k = static_cast<int>(ini.get_u64("lda", "k", static_cast<std::uint64_t>(d.k)));
  d.alpha = ini.get_double("lda", "alpha", d.alpha);
  d.beta = ini.get_double("lda", "beta", d.beta);
  d.iterations = static_cast<int>(ini.get_u64("lda", "iterations", static_cast<std::uint64_t>(d.iterations)));
  d.burn_in = static_cast<int>(ini.get_u64("lda", "burn_in", static_cast<std::uint64_t>(d.burn_in)));
  d.seed = ini.get_u64("lda", "seed", d.seed);
  return d;
}

RuleConfig read_rule_config(const IniFile& ini, RuleConfig d) {
  d.negation_window = static_cast<int>(ini.get_u64("rules", "negation_window", static_cast<std::uint64_t>(d.negation_window)));
  d.negation_flip = ini.get_double("rules", "negation_flip", d.negation_flip);
  d.exclamation_boost = ini.get_double("rules", "exclamation_boost", d.exclamation_boost);
  d.exclamation_cap = static_cast<int>(ini.get_u64("rules", "exclamation_cap", static_cast<std::uint64_t>(d.exclamation_cap)));
  d.question_dampen = ini.get_double("rules", "question_dampen", d.question_dampen);
  d.question_floor = ini.get_double("rules", "question_floor", d.question_floor);
  d.caps_boost = ini.get_double("rules", "caps_boost", d.caps_boost);
  d.neg_cut = ini.get_double("rules", "neg_cut", d.neg_cut);
  d.pos_cut = ini.get_double("rules", "pos_cut", d.pos_cut);
  d.normalizer_alpha = ini.get_double("rules", "normalizer_alpha", d.normalizer_alpha);
  return d;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fnv1a64_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path + " for digest");
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a64_hex(ss.str());
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["subcommand"] = subcommand;
  j["tool_version"] = tool_version;
  j["seed"] = seed;
  auto& cfg = j["resolved_config"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : resolved_config) cfg[k] = v;
  auto& dig = j["input_digests"] = nlohmann::ordered_json::object();
  for (const auto& [p, d] : input_digests) dig[p] = "fnv1a64:" + d;
  return j.dump(2) + "\n";
}

void RunManifest::write(const std::string& dir) const {
  fs::create_directories(dir);
  const auto path = (fs::path(dir) / "run_manifest.json").string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << to_json();
}

}  // namespace moodshift
