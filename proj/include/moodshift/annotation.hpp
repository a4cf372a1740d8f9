#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "moodshift/corpus.hpp"

namespace moodshift::annotation {

using Clock = std::chrono::system_clock;
using TimePoint = Clock::time_point;

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class ConflictError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CalibrationExample {
  int case_id = 0;
  std::string text;
  SentimentLabel hand_label = SentimentLabel::Neutral;
};

struct RubricDoc {
  std::string question;
  std::array<std::string, kNumLabels> definitions;  // by label index
  std::string default_rule;
  std::vector<CalibrationExample> calibration;
};

/// The labelling rubric with its twelve calibration tweets.
const RubricDoc& rubric();

struct AnnotationTask {
  Tweet tweet;
  std::string lease_id;
  TimePoint lease_expires;
};

enum class RecordKind { Label, Undo };

/// One log line. A Label record carries the label; an Undo record (a
/// tombstone) names the revision it reverts. (tweet_id, annotator, revision)
/// is unique across both kinds.
struct AnnotationRecord {
  RecordKind kind = RecordKind::Label;
  std::string tweet_id;
  SentimentLabel label = SentimentLabel::Neutral;  // Label records only
  std::string annotator;
  std::uint64_t revision = 0;
  std::string recorded_at;  // RFC 3339 UTC
  std::string lease_id;     // empty for relabels and tombstones
  std::uint64_t reverts = 0;  // Undo records only

  bool operator==(const AnnotationRecord&) const = default;
};

std::string format_log_record(const AnnotationRecord& r);
/// Throws ValidationError on malformed input.
AnnotationRecord parse_log_record(std::string_view line);

struct ProgressStats {
  std::size_t total = 0;
  std::size_t labelled = 0;  // tweets with at least one live label
  std::array<std::size_t, kNumLabels> per_class{};  // live (tweet, annotator) labels
  std::map<std::string, std::size_t> per_annotator;  // tweets with a live label by that annotator

  bool operator==(const ProgressStats&) const = default;
};

/// Folds a log from empty. A label is live when it is the latest
/// non-reverted Label record for its (tweet, annotator) pair.
ProgressStats replay_progress(const Dataset& corpus, const std::vector<AnnotationRecord>& log);

struct Disagreement {
  std::string tweet_id;
  std::vector<std::pair<std::string, SentimentLabel>> labels;  // annotator, label; sorted by annotator
};

struct ExportResult {
  Dataset dataset;
  std::vector<Disagreement> disagreements;
};

/// `tweet_id<TAB>annotator=label,...` lines.
std::string format_disagreements(const std::vector<Disagreement>& rows);

struct StoreOptions {
  std::chrono::seconds lease_duration{600};
  std::function<TimePoint()> clock = [] { return Clock::now(); };
};

/// Lease bookkeeping plus an append-only record log. The log file is
/// replayed on construction; every state change appends one line and
/// flushes before returning. All public methods are serialized by one mutex.
class AnnotationStore {
 public:
  /// `log_path` empty keeps the log in memory only.
  AnnotationStore(Dataset corpus, std::string log_path, StoreOptions opts = {});

  const std::string& corpus_name() const { return corpus_.name(); }
  std::size_t size() const { return corpus_.size(); }

  /// The caller's unexpired lease if it holds one; otherwise the next
  /// unlabelled, unleased tweet after the round-robin cursor. nullopt when
  /// none is available.
  std::optional<AnnotationTask> next_task(const std::string& annotator);

  /// Appends a Label record with the pair's next revision and releases the
  /// lease. Resubmitting the same lease with the same label returns the
  /// stored record. Without `relabel` the lease must be live and held by
  /// `annotator` for `tweet_id` (ConflictError otherwise).
  AnnotationRecord submit_label(const std::string& tweet_id, std::string_view label, const std::string& annotator,
                                const std::string& lease_id, bool relabel = false);

  struct UndoResult {
    AnnotationRecord tombstone;
    std::optional<AnnotationTask> task;  // fresh lease on the reverted tweet
  };
  /// Reverts the annotator's most recent live label. NotFoundError if none.
  UndoResult undo(const std::string& annotator);

  /// Drops a lease (skip). Returns false if it was not live or not owned.
  bool release(const std::string& lease_id, const std::string& annotator);

  ProgressStats progress() const;
  /// Unanimous live labels are attached (latest record supplies annotator
  /// and revision); conflicting tweets are exported unlabelled and listed;
  /// tweets without records pass through unchanged.
  ExportResult export_labels() const;

  std::vector<AnnotationRecord> log() const;

 private:
  struct Lease {
    std::string id;
    std::string tweet_id;
    std::string annotator;
    TimePoint expires;
  };
  struct PairState {
    std::vector<std::size_t> live;  // log indices of non-reverted Label records, oldest first
    std::uint64_t next_revision = 0;
  };

  void apply(const AnnotationRecord& r);
  void append(const AnnotationRecord& r);
  bool tweet_labelled(const std::string& tweet_id) const;
  std::optional<AnnotationTask> grant(std::size_t index, const std::string& annotator, TimePoint now);
  void expire(TimePoint now);
  std::string now_string() const;

  Dataset corpus_;
  std::string log_path_;
  StoreOptions opts_;
  mutable std::mutex mu_;
  std::vector<AnnotationRecord> log_;
  std::map<std::pair<std::string, std::string>, PairState> pairs_;  // (tweet, annotator)
  std::unordered_map<std::string, std::size_t> live_count_;         // tweet -> live labels
  std::unordered_map<std::string, std::size_t> tweet_index_;
  std::unordered_map<std::string, std::size_t> by_lease_;  // lease id -> Label record
  std::map<std::string, Lease> leases_;  // by lease id
  std::unordered_map<std::string, std::string> lease_by_tweet_;
  std::size_t cursor_ = 0;
  std::uint64_t lease_counter_ = 0;
};

}  // namespace moodshift::annotation
