#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "moodshift/label.hpp"

namespace moodshift {

struct Tweet {
  std::string id;
  std::string text;  // raw, emojis preserved
  std::optional<std::string> created_at;  // RFC 3339, stored verbatim
  std::vector<std::string> hashtags;      // lowercase

  bool operator==(const Tweet&) const = default;
};

struct LabeledTweet {
  Tweet tweet;
  std::optional<SentimentLabel> label;
  std::optional<std::string> annotator;
  std::uint64_t revision = 0;

  bool operator==(const LabeledTweet&) const = default;
};

/// Ordered collection with unique tweet ids. Insertion order is iteration
/// order.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::string name) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }
  void set_name(std::string n) { name_ = std::move(n); }

  /// Throws std::invalid_argument on a duplicate id.
  void add(LabeledTweet item);
  bool contains(std::string_view id) const;

  const std::vector<LabeledTweet>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const LabeledTweet& operator[](std::size_t i) const { return items_[i]; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  /// Gold labels in order; throws if any item is unlabelled.
  std::vector<SentimentLabel> gold_labels() const;

 private:
  std::string name_;
  std::vector<LabeledTweet> items_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Positive rational p/q.
struct Fraction {
  std::uint64_t num = 1;
  std::uint64_t den = 5;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  /// round-half-up(n * num / den), computed exactly in integers.
  std::size_t share_of(std::size_t n) const;
  /// Parses "p/q" or a decimal such as "0.2".
  static Fraction parse(std::string_view s);
};

struct SplitSpec {
  Fraction test_fraction{1, 5};
  std::uint64_t seed = 0;
  bool stratified = true;
};

struct Diagnostic {
  std::size_t line = 0;  // 1-based; 0 for stream-level messages
  std::string message;
  bool warning = false;
};

struct IngestResult {
  Dataset dataset;
  std::vector<Diagnostic> diagnostics;
  std::size_t skipped = 0;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// NFC, trims, and collapses internal whitespace runs to one space. Case,
/// punctuation and emoji are preserved. Used only for dedup keys.
std::string normalize_text(std::string_view text);

/// Reads line-delimited JSON records. Invalid records are skipped and
/// reported with their line number; an empty stream yields an empty dataset
/// plus a warning.
IngestResult ingest(std::istream& in, std::string name);
IngestResult ingest_file(const std::string& path);

/// Parses a single record line. Throws CorpusError describing the problem.
LabeledTweet parse_record(std::string_view line);
/// One record line (no trailing newline). Fields in order id, text,
/// created_at, hashtags, label, annotator, revision; absent optionals, empty
/// hashtag lists and revision 0 are omitted.
std::string format_record(const LabeledTweet& item);

void export_corpus(const Dataset& ds, std::ostream& out);
void export_corpus_file(const Dataset& ds, const std::string& path);

/// Keeps the first occurrence of each normalize_text() key.
Dataset dedup(const Dataset& ds);

struct SplitResult {
  Dataset train;
  Dataset test;
};

/// Seeded shuffle then take the leading share_of(n) items as test. When
/// stratified, the shuffle and cut happen independently per class. Both
/// outputs keep the input order.
SplitResult stratified_split(const Dataset& ds, const SplitSpec& spec);

/// Fraction of labelled items per class; classes with no items are absent.
std::map<SentimentLabel, double> label_distribution(const Dataset& ds);

}  // namespace moodshift
