#pragma once

// Precursor induction: the outside label is split into one carrier state per
// entity type, t[O], which remembers the most recent entity type seen in the
// sentence. Inducing a gold sequence is a deterministic rewrite; reverting
// maps every carrier back to O.

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "picrf/corpus.hpp"
#include "picrf/error.hpp"

namespace picrf {

inline std::string carrier_label(std::string_view type) {
  return std::string(type) + "[O]";
}

/// Returns the precursor type if `label` has the carrier form "<type>[O]".
inline std::optional<std::string> parse_carrier(std::string_view label) {
  constexpr std::string_view suffix = "[O]";
  if (label.size() <= suffix.size() || label.substr(label.size() - suffix.size()) != suffix) {
    return std::nullopt;
  }
  return std::string(label.substr(0, label.size() - suffix.size()));
}

class LabelAlphabet {
 public:
  LabelAlphabet() = default;

  explicit LabelAlphabet(std::vector<std::string> entity_types) : types_(std::move(entity_types)) {
    if (types_.empty()) throw Error("label alphabet needs at least one entity type");
    std::set<std::string> seen;
    for (const auto& t : types_) {
      if (t.empty()) throw Error("empty entity type name");
      for (char c : t) {
        if (c == '[' || c == ']' || c == ' ' || c == '\t' || c == '\n' || c == '\r') {
          throw Error("entity type '" + t + "' contains a reserved character");
        }
      }
      if (!seen.insert(t).second) throw Error("duplicate entity type '" + t + "'");
    }
    for (const auto& t : types_) {
      base_.push_back("B-" + t);
      base_.push_back("I-" + t);
    }
    base_.emplace_back(kOutside);
    for (const auto& t : types_) induced_.push_back(carrier_label(t));
    expanded_ = base_;
    expanded_.insert(expanded_.end(), induced_.begin(), induced_.end());
    for (std::size_t i = 0; i < expanded_.size(); ++i) index_.emplace(expanded_[i], i);
    for (std::size_t i = 0; i < types_.size(); ++i) type_index_.emplace(types_[i], i);
  }

  const std::vector<std::string>& entity_types() const noexcept { return types_; }
  const std::vector<std::string>& base_labels() const noexcept { return base_; }
  const std::vector<std::string>& induced_labels() const noexcept { return induced_; }
  const std::vector<std::string>& expanded_labels() const noexcept { return expanded_; }

  std::size_t base_size() const noexcept { return base_.size(); }
  std::size_t expanded_size() const noexcept { return expanded_.size(); }
  std::size_t outside_index() const noexcept { return base_.size() - 1; }

  std::optional<std::size_t> index_of(std::string_view label) const {
    auto it = index_.find(std::string(label));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t require_index(std::string_view label) const {
    auto i = index_of(label);
    if (!i) throw LabelError("label '" + std::string(label) + "' is not in the alphabet");
    return *i;
  }

  const std::string& label(std::size_t index) const { return expanded_.at(index); }

  bool is_induced(std::size_t index) const noexcept { return index >= base_.size(); }

  /// O and every carrier state.
  bool in_outside_class(std::size_t index) const noexcept { return index >= outside_index(); }

  /// Entity type index of B-t, I-t or t[O]; nullopt for O.
  std::optional<std::size_t> type_of(std::size_t index) const {
    if (index < 2 * types_.size()) return index / 2;
    if (is_induced(index)) return index - base_.size();
    return std::nullopt;
  }

  std::size_t carrier_of(std::size_t type) const { return base_.size() + type; }

  std::optional<std::size_t> type_index(std::string_view type) const {
    auto it = type_index_.find(std::string(type));
    if (it == type_index_.end()) return std::nullopt;
    return it->second;
  }

  std::set<std::string> type_set() const { return {types_.begin(), types_.end()}; }

  friend bool operator==(const LabelAlphabet& a, const LabelAlphabet& b) { return a.types_ == b.types_; }

 private:
  std::vector<std::string> types_;
  std::vector<std::string> base_;
  std::vector<std::string> induced_;
  std::vector<std::string> expanded_;
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_map<std::string, std::size_t> type_index_;
};

inline LabelAlphabet build_expanded_alphabet(std::vector<std::string> entity_types) {
  return LabelAlphabet(std::move(entity_types));
}

/// Rewrites O as t[O] whenever an entity of type t is the nearest preceding
/// non-outside label. Memory starts empty at every sentence.
inline Labels induce(const Labels& labels, const LabelAlphabet& alphabet) {
  const auto types = alphabet.type_set();
  validate_iob2(labels, Iob2Mode::Strict, &types);
  Labels out;
  out.reserve(labels.size());
  std::optional<std::string> memory;
  for (const auto& l : labels) {
    auto tag = parse_tag(l);
    if (tag->kind == TagKind::Outside) {
      out.push_back(memory ? carrier_label(*memory) : std::string(kOutside));
    } else {
      memory = tag->type;
      out.push_back(l);
    }
  }
  return out;
}

inline Labels revert(const Labels& labels, const LabelAlphabet& alphabet) {
  Labels out;
  out.reserve(labels.size());
  for (const auto& l : labels) {
    auto idx = alphabet.index_of(l);
    if (!idx) throw LabelError("label '" + l + "' is not in the expanded alphabet");
    out.push_back(alphabet.is_induced(*idx) ? std::string(kOutside) : l);
  }
  return out;
}

struct NewStateCount {
  /// Carrier states added by this implementation: one per entity type.
  std::size_t carriers = 0;
  /// Companion IOB2 count (N - 1) / 2 + 1 with N = 2E + 1 base states; it
  /// exceeds `carriers` by one. Reported for comparison only.
  std::size_t iob2_formula = 0;
};

inline NewStateCount count_new_states(std::size_t entity_type_count) {
  if (entity_type_count == 0) throw Error("entity type count must be positive");
  const std::size_t n = 2 * entity_type_count + 1;
  return {entity_type_count, (n - 1) / 2 + 1};
}

}  // namespace picrf
