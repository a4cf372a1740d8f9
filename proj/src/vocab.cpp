#include "moodshift/vocab.hpp"

namespace moodshift {

int Vocab::add(std::string term, std::uint64_t doc_freq) {
  if (auto it = index_.find(term); it != index_.end()) return it->second;
  const int id = static_cast<int>(terms_.size());
  index_.emplace(term, id);
  terms_.push_back(std::move(term));
  doc_freq_.push_back(doc_freq);
  return id;
}

std::optional<int> Vocab::find(std::string_view term) const {
  auto it = index_.find(std::string(term));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

}  // namespace moodshift
