#include "moodshift/corpus.hpp"

#include <algorithm>
#include <array>
#include <span>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <regex>
#include <unordered_set>

#include <json.hpp>

#include "moodshift/random.hpp"
#include "moodshift/unicode.hpp"

namespace moodshift {

using ordered_json = nlohmann::ordered_json;

void Dataset::add(LabeledTweet item) {
  if (item.tweet.id.empty()) throw std::invalid_argument("tweet id must be non-empty");
  auto [it, inserted] = index_.emplace(item.tweet.id, items_.size());
  if (!inserted) throw std::invalid_argument("duplicate tweet id: " + item.tweet.id);
  items_.push_back(std::move(item));
}

bool Dataset::contains(std::string_view id) const { return index_.find(id) != index_.end(); }

std::vector<SentimentLabel> Dataset::gold_labels() const {
  std::vector<SentimentLabel> out;
  out.reserve(items_.size());
  for (const auto& it : items_) {
    if (!it.label) throw CorpusError("unlabelled item: " + it.tweet.id);
    out.push_back(*it.label);
  }
  return out;
}

std::size_t Fraction::share_of(std::size_t n) const {
  const unsigned __int128 scaled = static_cast<unsigned __int128>(n) * num * 2 + den;
  return static_cast<std::size_t>(scaled / (static_cast<unsigned __int128>(den) * 2));
}

Fraction Fraction::parse(std::string_view s) {
  auto bad = [&] { return CorpusError("invalid fraction: '" + std::string(s) + "'"); };
  Fraction f;
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    auto a = s.substr(0, slash), b = s.substr(slash + 1);
    if (std::from_chars(a.data(), a.data() + a.size(), f.num).ec != std::errc{} ||
        std::from_chars(b.data(), b.data() + b.size(), f.den).ec != std::errc{})
      throw bad();
  } else {
    // decimal: scale by 10^digits after the point
    auto dot = s.find('.');
    std::string digits(s);
    std::uint64_t den = 1;
    if (dot != std::string_view::npos) {
      digits.erase(dot, 1);
      for (std::size_t i = dot + 1; i < s.size(); ++i) den *= 10;
    }
    if (digits.empty() || std::from_chars(digits.data(), digits.data() + digits.size(), f.num).ec != std::errc{})
      throw bad();
    f.den = den;
  }
  if (f.den == 0 || f.num == 0 || f.num >= f.den) throw bad();
  return f;
}

std::string normalize_text(std::string_view text) {
  const std::u32string cps = unicode::decode_utf8(unicode::nfc(text));
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char32_t cp : cps) {
    if (unicode::is_whitespace(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    unicode::append_utf8(out, cp);
  }
  return out;
}

namespace {

const std::regex& rfc3339() {
  static const std::regex re(
      R"(^\d{4}-\d{2}-\d{2}[Tt ]\d{2}:\d{2}:\d{2}(\.\d+)?([Zz]|[+-]\d{2}:\d{2})$)");
  return re;
}

std::string require_string(const ordered_json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end()) throw CorpusError(std::string("missing required field \"") + field + "\"");
  if (!it->is_string()) throw CorpusError(std::string("field \"") + field + "\" must be a string");
  return it->get<std::string>();
}

}  // namespace

LabeledTweet parse_record(std::string_view line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw CorpusError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw CorpusError("record must be a JSON object");

  LabeledTweet item;
  item.tweet.id = require_string(j, "id");
  if (item.tweet.id.empty()) throw CorpusError("field \"id\" must be non-empty");
  item.tweet.text = require_string(j, "text");
  if (normalize_text(item.tweet.text).empty()) throw CorpusError("field \"text\" is empty after normalization");

  if (auto it = j.find("created_at"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw CorpusError("field \"created_at\" must be a string");
    auto ts = it->get<std::string>();
    if (!std::regex_match(ts, rfc3339())) throw CorpusError("field \"created_at\" is not RFC 3339: " + ts);
    item.tweet.created_at = std::move(ts);
  }
  if (auto it = j.find("hashtags"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw CorpusError("field \"hashtags\" must be an array");
    for (const auto& h : *it) {
      if (!h.is_string()) throw CorpusError("hashtags must be strings");
      item.tweet.hashtags.push_back(unicode::ascii_lower(h.get<std::string>()));
    }
  }
  if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw CorpusError("field \"label\" must be a string");
    auto l = it->get<std::string>();
    if (l != "negative" && l != "neutral" && l != "positive")
      throw CorpusError("field \"label\" must be negative|neutral|positive, got '" + l + "'");
    item.label = parse_label(l);
  }
  if (auto it = j.find("annotator"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw CorpusError("field \"annotator\" must be a string");
    item.annotator = it->get<std::string>();
  }
  if (auto it = j.find("revision"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer() || it->get<std::int64_t>() < 0)
      throw CorpusError("field \"revision\" must be a non-negative integer");
    item.revision = it->get<std::uint64_t>();
  }
  return item;
}

std::string format_record(const LabeledTweet& item) {
  ordered_json j;
  j["id"] = item.tweet.id;
  j["text"] = item.tweet.text;
  if (item.tweet.created_at) j["created_at"] = *item.tweet.created_at;
  if (!item.tweet.hashtags.empty()) j["hashtags"] = item.tweet.hashtags;
  if (item.label) j["label"] = std::string(label_name(*item.label));
  if (item.annotator) j["annotator"] = *item.annotator;
  if (item.revision != 0) j["revision"] = item.revision;
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

IngestResult ingest(std::istream& in, std::string name) {
  IngestResult res;
  res.dataset.set_name(std::move(name));
  std::string line;
  std::size_t lineno = 0;
  std::size_t records = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++records;
    try {
      LabeledTweet item = parse_record(line);
      if (res.dataset.contains(item.tweet.id)) throw CorpusError("duplicate id \"" + item.tweet.id + "\"");
      res.dataset.add(std::move(item));
    } catch (const CorpusError& e) {
      ++res.skipped;
      res.diagnostics.push_back({lineno, "line " + std::to_string(lineno) + ": " + e.what(), false});
    }
  }
  if (records == 0) res.diagnostics.push_back({0, "empty corpus stream", true});
  return res;
}

IngestResult ingest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open corpus file: " + path);
  return ingest(in, std::filesystem::path(path).stem().string());
}

void export_corpus(const Dataset& ds, std::ostream& out) {
  for (const auto& item : ds) out << format_record(item) << '\n';
}

void export_corpus_file(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CorpusError("cannot write corpus file: " + path);
  export_corpus(ds, out);
}

Dataset dedup(const Dataset& ds) {
  Dataset out(ds.name());
  std::unordered_set<std::string> seen;
  for (const auto& item : ds) {
    if (seen.insert(normalize_text(item.tweet.text)).second) out.add(item);
  }
  return out;
}

SplitResult stratified_split(const Dataset& ds, const SplitSpec& spec) {
  if (spec.test_fraction.den == 0 || spec.test_fraction.num == 0 || spec.test_fraction.num >= spec.test_fraction.den)
    throw CorpusError("test_fraction must lie in (0,1)");

  std::vector<bool> in_test(ds.size(), false);
  Rng rng(spec.seed);
  auto cut = [&](std::vector<std::size_t>& idx) {
    rng.shuffle(std::span<std::size_t>(idx));
    const std::size_t k = spec.test_fraction.share_of(idx.size());
    for (std::size_t i = 0; i < k; ++i) in_test[idx[i]] = true;
  };

  if (spec.stratified) {
    std::array<std::vector<std::size_t>, kNumLabels> per_class;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto& item = ds[i];
      if (!item.label) throw CorpusError("stratified split requires labels; unlabelled tweet id: " + item.tweet.id);
      per_class[label_index(*item.label)].push_back(i);
    }
    for (auto& idx : per_class) cut(idx);
  } else {
    std::vector<std::size_t> idx(ds.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    cut(idx);
  }

  SplitResult res{Dataset(ds.name() + "-train"), Dataset(ds.name() + "-test")};
  for (std::size_t i = 0; i < ds.size(); ++i) (in_test[i] ? res.test : res.train).add(ds[i]);
  return res;
}

std::map<SentimentLabel, double> label_distribution(const Dataset& ds) {
  std::array<std::size_t, kNumLabels> counts{};
  std::size_t total = 0;
  for (const auto& item : ds) {
    if (!item.label) continue;
    ++counts[label_index(*item.label)];
    ++total;
  }
  if (total == 0) throw CorpusError("label_distribution: no labelled items");
  std::map<SentimentLabel, double> out;
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    if (counts[c] > 0) out[label_from_index(c)] = static_cast<double>(counts[c]) / static_cast<double>(total);
  }
  return out;
}

}  // namespace moodshift
