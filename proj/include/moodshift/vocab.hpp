#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace moodshift {

/// Dense id <-> term bijection (ids 0..size()-1) with an optional count per
/// term (document frequency for bag-of-words, token frequency for the
/// classifier vocabulary).
class Vocab {
 public:
  /// Returns the existing id if the term is already present.
  int add(std::string term, std::uint64_t doc_freq = 0);
  std::optional<int> find(std::string_view term) const;
  const std::string& term(int id) const { return terms_.at(static_cast<std::size_t>(id)); }
  std::uint64_t doc_freq(int id) const { return doc_freq_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return terms_.size(); }
  const std::vector<std::string>& terms() const { return terms_; }

  bool operator==(const Vocab& o) const { return terms_ == o.terms_ && doc_freq_ == o.doc_freq_; }

 private:
  std::vector<std::string> terms_;
  std::vector<std::uint64_t> doc_freq_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace moodshift
