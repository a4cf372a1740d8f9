#include "moodshift/annotation.hpp"

#include <algorithm>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>

namespace moodshift::annotation {

using json = nlohmann::ordered_json;

const RubricDoc& rubric() {
  static const RubricDoc doc = [] {
    RubricDoc r;
    r.question =
        "Does the author of this comment feel threatened by the spread of M-pox and/or disappointed in the "
        "government's response in mitigating the spread and to what extent is he optimistic or pessimistic about "
        "the future in terms of the socio-economic stability as well as the sustainability of the mental and "
        "physical health of both himself and the community in which he resides?";
    r.definitions[label_index(SentimentLabel::Negative)] =
        "An overwhelming and irrational feeling of fear and impending doom accompanied by distrust or poor faith "
        "in the government's ability in controlling the M-pox Outbreak.";
    r.definitions[label_index(SentimentLabel::Neutral)] =
        "The refusal to engage in discussions pertaining to the threat of M-pox as a public health hazard and the "
        "possible threat of a new pandemic, due to indifference, disinterest or an indecisive temperament towards "
        "the severity and planned mitigation of the M-pox Outbreak.";
    r.definitions[label_index(SentimentLabel::Positive)] =
        "The absence of unwarranted fear accompanied by strong belief and deep trust in the government's ability "
        "in controlling the M-pox Outbreak.";
    r.default_rule = "A statement in which the author's viewpoint is unclear or unrelated to M-pox is labelled neutral.";
    using L = SentimentLabel;
    r.calibration = {
        {1, "We beat COVID, now let’s beat M-pox. \U0001F4AA\U0001F4AA #M-pox", L::Positive},
        {2, "M-pox is a hoax! Get real, people!", L::Negative},
        {3, "M-pox does not seem to be as deadly as everyone says", L::Neutral},
        {4, "My family got M-pox. All had minor symptoms and are now 100%.", L::Positive},
        {5, "A M-pox Outbreak right after COVID ends? Hmm... \U0001F914\U0001F914\U0001F914", L::Negative},
        {6, "Now there is M-pox. \U0001F631 Seriously? \U0001F612 Should I be concerned? \U0001F914", L::Neutral},
        {7, "I'll take pre-caution, but if I get it and die, then I die. Oh well!", L::Positive},
        {8, "I have fully recovered from M-pox, but a friend got it and died.", L::Negative},
        {9, "M-pox can infect people of any race and any sexual orientation.", L::Neutral},
        {10, "WHO is doing a great job. Let's support them!! \U0001F64F\U0001F64F", L::Positive},
        {11, "WHO is doing a great job. Let's support them!! \U0001F923\U0001F923\U0001F923\U0001F923", L::Negative},
        {12, "WHO is doing a great job. Let's support them??", L::Neutral},
    };
    return r;
  }();
  return doc;
}

std::string format_log_record(const AnnotationRecord& r) {
  json j;
  j["kind"] = r.kind == RecordKind::Label ? "label" : "undo";
  j["tweet_id"] = r.tweet_id;
  if (r.kind == RecordKind::Label) j["label"] = std::string(label_name(r.label));
  j["annotator"] = r.annotator;
  j["revision"] = r.revision;
  j["recorded_at"] = r.recorded_at;
  if (!r.lease_id.empty()) j["lease_id"] = r.lease_id;
  if (r.kind == RecordKind::Undo) j["reverts"] = r.reverts;
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

AnnotationRecord parse_log_record(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed log record: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("log record is not an object");
  auto str = [&](const char* key, bool required) -> std::string {
    if (!j.contains(key)) {
      if (required) throw ValidationError(std::string("log record missing '") + key + "'");
      return {};
    }
    if (!j[key].is_string()) throw ValidationError(std::string("log record field '") + key + "' is not a string");
    return j[key].get<std::string>();
  };
  auto u64 = [&](const char* key) -> std::uint64_t {
    if (!j.contains(key) || !j[key].is_number_unsigned())
      throw ValidationError(std::string("log record field '") + key + "' must be a non-negative integer");
    return j[key].get<std::uint64_t>();
  };
  AnnotationRecord r;
  const auto kind = str("kind", true);
  if (kind == "label") {
    r.kind = RecordKind::Label;
    auto l = parse_label(str("label", true));
    if (!l) throw ValidationError("log record has an invalid label");
    r.label = *l;
  } else if (kind == "undo") {
    r.kind = RecordKind::Undo;
    r.reverts = u64("reverts");
  } else {
    throw ValidationError("log record has unknown kind '" + kind + "'");
  }
  r.tweet_id = str("tweet_id", true);
  r.annotator = str("annotator", true);
  r.revision = u64("revision");
  r.recorded_at = str("recorded_at", true);
  r.lease_id = str("lease_id", false);
  return r;
}

ProgressStats replay_progress(const Dataset& corpus, const std::vector<AnnotationRecord>& log) {
  // latest live label per (tweet, annotator), rebuilt from scratch
  std::map<std::pair<std::string, std::string>, std::vector<std::pair<std::uint64_t, SentimentLabel>>> live;
  for (const auto& r : log) {
    auto& stack = live[{r.tweet_id, r.annotator}];
    if (r.kind == RecordKind::Label) {
      stack.emplace_back(r.revision, r.label);
    } else {
      stack.erase(std::remove_if(stack.begin(), stack.end(), [&](const auto& e) { return e.first == r.reverts; }),
                  stack.end());
    }
  }
  ProgressStats s;
  s.total = corpus.size();
  std::set<std::string> labelled;
  for (const auto& [key, stack] : live) {
    if (stack.empty()) continue;
    labelled.insert(key.first);
    ++s.per_class[label_index(stack.back().second)];
    ++s.per_annotator[key.second];
  }
  s.labelled = labelled.size();
  return s;
}

std::string format_disagreements(const std::vector<Disagreement>& rows) {
  std::string out;
  for (const auto& d : rows) {
    out += d.tweet_id;
    out += '\t';
    for (std::size_t i = 0; i < d.labels.size(); ++i) {
      if (i) out += ',';
      out += d.labels[i].first + "=" + std::string(label_name(d.labels[i].second));
    }
    out += '\n';
  }
  return out;
}

AnnotationStore::AnnotationStore(Dataset corpus, std::string log_path, StoreOptions opts)
    : corpus_(std::move(corpus)), log_path_(std::move(log_path)), opts_(std::move(opts)) {
  for (std::size_t i = 0; i < corpus_.size(); ++i) tweet_index_.emplace(corpus_[i].tweet.id, i);
  if (log_path_.empty()) return;
  std::ifstream in(log_path_, std::ios::binary);
  if (!in) return;  // fresh log
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    AnnotationRecord r;
    try {
      r = parse_log_record(line);
    } catch (const ValidationError& e) {
      throw ValidationError(log_path_ + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!tweet_index_.count(r.tweet_id))
      throw ValidationError(log_path_ + ":" + std::to_string(lineno) + ": unknown tweet id '" + r.tweet_id + "'");
    apply(r);
    if (r.lease_id.rfind("lease-", 0) == 0) {
      try {
        lease_counter_ = std::max<std::uint64_t>(lease_counter_, std::stoull(r.lease_id.substr(6)));
      } catch (const std::exception&) {
      }
    }
  }
}

void AnnotationStore::apply(const AnnotationRecord& r) {
  auto& st = pairs_[{r.tweet_id, r.annotator}];
  if (r.kind == RecordKind::Label) {
    if (!r.lease_id.empty()) by_lease_.emplace(r.lease_id, log_.size());
    st.live.push_back(log_.size());
    ++live_count_[r.tweet_id];
  } else {
    auto it = std::find_if(st.live.begin(), st.live.end(), [&](std::size_t idx) { return log_[idx].revision == r.reverts; });
    if (it != st.live.end()) {
      st.live.erase(it);
      --live_count_[r.tweet_id];
    }
  }
  st.next_revision = std::max(st.next_revision, r.revision + 1);
  log_.push_back(r);
}

void AnnotationStore::append(const AnnotationRecord& r) {
  if (!log_path_.empty()) {
    const auto parent = std::filesystem::path(log_path_).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(log_path_, std::ios::binary | std::ios::app);
    out << format_log_record(r) << '\n';
    out.flush();
    if (!out) throw std::runtime_error("cannot append to annotation log " + log_path_);
  }
  apply(r);
}

bool AnnotationStore::tweet_labelled(const std::string& tweet_id) const {
  auto it = live_count_.find(tweet_id);
  return it != live_count_.end() && it->second > 0;
}

void AnnotationStore::expire(TimePoint now) {
  for (auto it = leases_.begin(); it != leases_.end();) {
    if (it->second.expires <= now) {
      lease_by_tweet_.erase(it->second.tweet_id);
      it = leases_.erase(it);
    } else {
      ++it;
    }
  }
}

std::optional<AnnotationTask> AnnotationStore::grant(std::size_t index, const std::string& annotator, TimePoint now) {
  const auto& tweet = corpus_[index].tweet;
  char buf[32];
  std::snprintf(buf, sizeof buf, "lease-%06llu", static_cast<unsigned long long>(++lease_counter_));
  Lease l{buf, tweet.id, annotator, now + opts_.lease_duration};
  leases_[l.id] = l;
  lease_by_tweet_[tweet.id] = l.id;
  return AnnotationTask{tweet, l.id, l.expires};
}

std::string AnnotationStore::now_string() const {
  const std::time_t t = Clock::to_time_t(opts_.clock());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::optional<AnnotationTask> AnnotationStore::next_task(const std::string& annotator) {
  if (annotator.empty()) throw ValidationError("annotator name is required");
  std::lock_guard lock(mu_);
  const auto now = opts_.clock();
  expire(now);
  for (const auto& [id, l] : leases_) {
    if (l.annotator == annotator) return AnnotationTask{corpus_[tweet_index_.at(l.tweet_id)].tweet, l.id, l.expires};
  }
  const std::size_t n = corpus_.size();
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t i = (cursor_ + step) % n;
    const auto& id = corpus_[i].tweet.id;
    if (tweet_labelled(id) || lease_by_tweet_.count(id)) continue;
    cursor_ = (i + 1) % n;
    return grant(i, annotator, now);
  }
  return std::nullopt;
}

AnnotationRecord AnnotationStore::submit_label(const std::string& tweet_id, std::string_view label,
                                               const std::string& annotator, const std::string& lease_id,
                                               bool relabel) {
  const auto parsed = parse_label(label);
  if (!parsed) throw ValidationError("invalid label '" + std::string(label) + "'");
  if (annotator.empty()) throw ValidationError("annotator name is required");
  std::lock_guard lock(mu_);
  if (!tweet_index_.count(tweet_id)) throw NotFoundError("unknown tweet id '" + tweet_id + "'");

  if (!lease_id.empty()) {
    if (auto used = by_lease_.find(lease_id); used != by_lease_.end()) {
      const auto& r = log_[used->second];
      if (r.tweet_id == tweet_id && r.annotator == annotator && r.label == *parsed) return r;
      throw ConflictError("lease " + lease_id + " was already used for a different submission");
    }
  }

  const auto now = opts_.clock();
  expire(now);
  if (!relabel) {
    auto it = leases_.find(lease_id);
    if (it == leases_.end()) throw ConflictError("lease '" + lease_id + "' is expired or unknown");
    if (it->second.annotator != annotator) throw ConflictError("lease '" + lease_id + "' belongs to another annotator");
    if (it->second.tweet_id != tweet_id) throw ConflictError("lease '" + lease_id + "' is for a different tweet");
  }

  AnnotationRecord r;
  r.kind = RecordKind::Label;
  r.tweet_id = tweet_id;
  r.label = *parsed;
  r.annotator = annotator;
  r.revision = pairs_[{tweet_id, annotator}].next_revision;
  r.recorded_at = now_string();
  r.lease_id = relabel && !leases_.count(lease_id) ? std::string() : lease_id;
  append(r);
  if (auto it = leases_.find(lease_id); it != leases_.end() && it->second.annotator == annotator) {
    lease_by_tweet_.erase(it->second.tweet_id);
    leases_.erase(it);
  }
  return r;
}

AnnotationStore::UndoResult AnnotationStore::undo(const std::string& annotator) {
  if (annotator.empty()) throw ValidationError("annotator name is required");
  std::lock_guard lock(mu_);
  std::optional<std::size_t> latest;
  for (const auto& [key, st] : pairs_) {
    if (key.second != annotator || st.live.empty()) continue;
    if (!latest || st.live.back() > *latest) latest = st.live.back();
  }
  if (!latest) throw NotFoundError("annotator '" + annotator + "' has nothing to undo");
  const AnnotationRecord target = log_[*latest];

  AnnotationRecord t;
  t.kind = RecordKind::Undo;
  t.tweet_id = target.tweet_id;
  t.annotator = annotator;
  t.revision = pairs_[{target.tweet_id, annotator}].next_revision;
  t.recorded_at = now_string();
  t.reverts = target.revision;
  append(t);

  UndoResult res{t, std::nullopt};
  const auto now = opts_.clock();
  expire(now);
  if (!tweet_labelled(target.tweet_id) && !lease_by_tweet_.count(target.tweet_id)) {
    for (auto it = leases_.begin(); it != leases_.end();) {
      if (it->second.annotator == annotator) {
        lease_by_tweet_.erase(it->second.tweet_id);
        it = leases_.erase(it);
      } else {
        ++it;
      }
    }
    res.task = grant(tweet_index_.at(target.tweet_id), annotator, now);
  }
  return res;
}

bool AnnotationStore::release(const std::string& lease_id, const std::string& annotator) {
  std::lock_guard lock(mu_);
  expire(opts_.clock());
  auto it = leases_.find(lease_id);
  if (it == leases_.end() || it->second.annotator != annotator) return false;
  lease_by_tweet_.erase(it->second.tweet_id);
  leases_.erase(it);
  return true;
}

ProgressStats AnnotationStore::progress() const {
  std::lock_guard lock(mu_);
  ProgressStats s;
  s.total = corpus_.size();
  for (const auto& [key, st] : pairs_) {
    if (st.live.empty()) continue;
    ++s.per_class[label_index(log_[st.live.back()].label)];
    ++s.per_annotator[key.second];
  }
  for (const auto& [id, n] : live_count_)
    if (n > 0) ++s.labelled;
  return s;
}

ExportResult AnnotationStore::export_labels() const {
  std::lock_guard lock(mu_);
  std::unordered_map<std::string, std::vector<std::size_t>> latest;  // tweet -> live record per annotator
  for (const auto& [key, st] : pairs_)
    if (!st.live.empty()) latest[key.first].push_back(st.live.back());

  ExportResult res;
  res.dataset = Dataset(corpus_.name());
  for (const auto& item : corpus_) {
    auto it = latest.find(item.tweet.id);
    if (it == latest.end()) {
      res.dataset.add(item);
      continue;
    }
    LabeledTweet out;
    out.tweet = item.tweet;
    std::set<SentimentLabel> distinct;
    for (auto idx : it->second) distinct.insert(log_[idx].label);
    if (distinct.size() == 1) {
      const auto& rec = log_[*std::max_element(it->second.begin(), it->second.end())];
      out.label = rec.label;
      out.annotator = rec.annotator;
      out.revision = rec.revision;
    } else {
      Disagreement d{item.tweet.id, {}};
      for (auto idx : it->second) d.labels.emplace_back(log_[idx].annotator, log_[idx].label);
      std::sort(d.labels.begin(), d.labels.end());
      res.disagreements.push_back(std::move(d));
    }
    res.dataset.add(std::move(out));
  }
  return res;
}

std::vector<AnnotationRecord> AnnotationStore::log() const {
  std::lock_guard lock(mu_);
  return log_;
}

}  // namespace moodshift::annotation
