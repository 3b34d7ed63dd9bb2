#pragma once

// Effective state sets for the three model orders.
//
//   first        states = base IOB2 labels (2E + 1), dense transitions
//   pre-induced  states = base + carrier labels (3E + 1), dense transitions,
//                observation weights of O and carriers tied to a coarse slot
//   second       states = label pairs (a, b) (= (2E + 1)^2) plus one start
//                pair (<s>, b) per label; transitions (a, b) -> (b, c) only,
//                each weighted by its own triple parameter
//
// The parameter vector is [observation blocks][transition parameters].

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "picrf/corpus.hpp"
#include "picrf/error.hpp"
#include "picrf/features.hpp"
#include "picrf/induction.hpp"
#include "picrf/lattice.hpp"

namespace picrf {

enum class ModelOrder { First, Second, PreInduced };

inline std::string to_string(ModelOrder o) {
  switch (o) {
    case ModelOrder::First: return "first";
    case ModelOrder::Second: return "second";
    case ModelOrder::PreInduced: return "pre-induced";
  }
  return "?";
}

inline std::optional<ModelOrder> parse_order(std::string_view s) {
  if (s == "first") return ModelOrder::First;
  if (s == "second") return ModelOrder::Second;
  if (s == "pre-induced") return ModelOrder::PreInduced;
  return std::nullopt;
}

inline constexpr std::string_view kStartSymbol = "<s>";

/// Pair-state bookkeeping for the second-order model over L base labels.
/// Pair (a, b) has index a * L + b; start pair (<s>, b) has index L * L + b.
struct PairStates {
  std::size_t labels = 0;

  std::size_t pair_count() const noexcept { return labels * labels; }
  std::size_t start_pair_count() const noexcept { return labels; }
  std::size_t total() const noexcept { return pair_count() + start_pair_count(); }

  std::size_t pair(std::size_t a, std::size_t b) const noexcept { return a * labels + b; }
  std::size_t start_pair(std::size_t b) const noexcept { return pair_count() + b; }
  bool is_start_pair(std::size_t s) const noexcept { return s >= pair_count(); }

  /// The current label (second component) of a pair state.
  std::size_t project(std::size_t s) const noexcept { return is_start_pair(s) ? s - pair_count() : s % labels; }
  /// The previous label, or nullopt for a start pair.
  std::optional<std::size_t> previous(std::size_t s) const noexcept {
    if (is_start_pair(s)) return std::nullopt;
    return s / labels;
  }

  std::vector<std::size_t> project_path(const std::vector<std::size_t>& path) const {
    std::vector<std::size_t> out;
    out.reserve(path.size());
    for (auto s : path) out.push_back(project(s));
    return out;
  }
};

inline PairStates expand_second_order(std::size_t base_label_count) {
  if (base_label_count == 0) throw Error("second-order expansion needs at least one label");
  return PairStates{base_label_count};
}

class StateSpace {
 public:
  static constexpr std::uint32_t kNone = UINT32_MAX;

  StateSpace(const LabelAlphabet& alphabet, ModelOrder order) : alphabet_(alphabet), order_(order) {
    switch (order) {
      case ModelOrder::First: build_dense(alphabet.base_size(), false); break;
      case ModelOrder::PreInduced: build_dense(alphabet.expanded_size(), true); break;
      case ModelOrder::Second: build_second(); break;
    }
  }

  ModelOrder order() const noexcept { return order_; }
  const LabelAlphabet& alphabet() const noexcept { return alphabet_; }

  /// States of the lattice, including second-order start pairs.
  std::size_t lattice_states() const noexcept { return topology_->states(); }
  /// The model's effective state count: 2E+1, 3E+1 or (2E+1)^2.
  std::size_t effective_states() const noexcept {
    return order_ == ModelOrder::Second ? pairs_.pair_count() : lattice_states();
  }
  const PairStates& pairs() const noexcept { return pairs_; }

  const std::shared_ptr<const Transitions>& topology() const noexcept { return topology_; }
  const SlotLayout& slot_layout() const noexcept { return layout_; }

  std::size_t transition_parameter_count() const noexcept { return transition_params_; }
  std::uint32_t start_param(std::size_t s) const noexcept { return start_param_[s]; }
  std::uint32_t edge_param(std::size_t e) const noexcept { return edge_param_[e]; }

  /// Whether a transition can occur in a well-formed (induced) gold sequence.
  bool start_allowed(std::size_t s) const noexcept { return start_ok_[s]; }
  bool edge_allowed(std::size_t e) const noexcept { return edge_ok_[e]; }

  const std::string& state_name(std::size_t s) const { return names_.at(s); }

  /// Label emitted for a decoded state (carriers are emitted as t[O]).
  const std::string& output_label(std::size_t s) const {
    return order_ == ModelOrder::Second ? alphabet_.label(pairs_.project(s)) : alphabet_.label(s);
  }

  /// Gold state path for a base IOB2 sequence (inducing it first when needed).
  std::vector<std::size_t> gold_states(const Labels& base) const {
    std::vector<std::size_t> path;
    path.reserve(base.size());
    switch (order_) {
      case ModelOrder::First:
        for (const auto& l : base) path.push_back(require_base(l));
        break;
      case ModelOrder::PreInduced:
        for (const auto& l : induce(base, alphabet_)) path.push_back(alphabet_.require_index(l));
        break;
      case ModelOrder::Second:
        for (std::size_t t = 0; t < base.size(); ++t) {
          const auto b = require_base(base[t]);
          path.push_back(t == 0 ? pairs_.start_pair(b) : pairs_.pair(require_base(base[t - 1]), b));
        }
        break;
    }
    return path;
  }

  /// Decoded state path to base labels, reverting carriers.
  Labels to_base_labels(const std::vector<std::size_t>& path) const {
    Labels out;
    out.reserve(path.size());
    for (auto s : path) {
      const auto label = order_ == ModelOrder::Second ? pairs_.project(s) : s;
      out.push_back(alphabet_.is_induced(label) ? std::string(kOutside) : alphabet_.label(label));
    }
    return out;
  }

 private:
  std::size_t require_base(const std::string& l) const {
    auto i = alphabet_.index_of(l);
    if (!i || alphabet_.is_induced(*i)) throw LabelError("label '" + l + "' is not a base label of the model");
    return *i;
  }

  // Structural validity of label bigram prev -> cur over the expanded
  // alphabet; prev = nullopt is the sentence start.
  bool bigram_ok(std::optional<std::size_t> prev, std::size_t cur) const {
    const auto& a = alphabet_;
    const std::size_t E = a.entity_types().size();
    auto entity_type = [&](std::optional<std::size_t> l) -> std::optional<std::size_t> {
      if (!l || *l >= 2 * E) return std::nullopt;
      return *l / 2;
    };
    if (cur < 2 * E) {
      if (cur % 2 == 0) return true;  // B-t
      return entity_type(prev) == cur / 2;  // I-t continues B-t / I-t
    }
    if (cur == a.outside_index()) {
      if (order_ != ModelOrder::PreInduced) return true;
      return !prev || *prev == a.outside_index();
    }
    const std::size_t t = cur - a.base_size();  // carrier t[O]
    if (!prev) return false;
    if (auto et = entity_type(prev)) return *et == t;
    return *prev == cur;
  }

  void build_dense(std::size_t S, bool coarse) {
    topology_ = std::make_shared<Transitions>(Transitions::dense(S));
    for (std::size_t s = 0; s < S; ++s) names_.push_back(alphabet_.label(s));
    start_param_.resize(S);
    start_ok_.resize(S);
    for (std::size_t s = 0; s < S; ++s) {
      start_param_[s] = static_cast<std::uint32_t>(s);
      start_ok_[s] = bigram_ok(std::nullopt, s);
    }
    edge_param_.resize(topology_->edge_count());
    edge_ok_.resize(topology_->edge_count());
    for (std::size_t e = 0; e < topology_->edge_count(); ++e) {
      const auto p = topology_->prev(e), c = topology_->cur(e);
      edge_param_[e] = static_cast<std::uint32_t>(S + p * S + c);
      edge_ok_[e] = bigram_ok(p, c);
    }
    transition_params_ = S + S * S;

    layout_.label_count = S;
    layout_.coarse = coarse;
    for (std::size_t s = 0; s < S; ++s) {
      layout_.state_label.push_back(static_cast<std::uint32_t>(s));
      layout_.tied.push_back(coarse && alphabet_.in_outside_class(s));
    }
  }

  void build_second() {
    const std::size_t L = alphabet_.base_size();
    pairs_ = expand_second_order(L);
    const std::size_t S = pairs_.total();
    for (std::size_t a = 0; a < L; ++a) {
      for (std::size_t b = 0; b < L; ++b) names_.push_back(alphabet_.label(a) + "|" + alphabet_.label(b));
    }
    for (std::size_t b = 0; b < L; ++b) names_.push_back(std::string(kStartSymbol) + "|" + alphabet_.label(b));

    // Parameters: start (<s>, b) [L], start triples (<s>, a, b) [L^2],
    // triples (a, b, c) [L^3].
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    edges.reserve(L * L + L * L * L);
    for (std::size_t a = 0; a < L; ++a) {
      for (std::size_t b = 0; b < L; ++b) {
        edges.emplace_back(pairs_.start_pair(a), pairs_.pair(a, b));
        for (std::size_t c = 0; c < L; ++c) edges.emplace_back(pairs_.pair(a, b), pairs_.pair(b, c));
      }
    }
    topology_ = std::make_shared<Transitions>(S, std::move(edges));

    start_param_.assign(S, kNone);
    start_ok_.assign(S, false);
    for (std::size_t b = 0; b < L; ++b) {
      start_param_[pairs_.start_pair(b)] = static_cast<std::uint32_t>(b);
      start_ok_[pairs_.start_pair(b)] = bigram_ok(std::nullopt, b);
    }
    edge_param_.resize(topology_->edge_count());
    edge_ok_.resize(topology_->edge_count());
    for (std::size_t e = 0; e < topology_->edge_count(); ++e) {
      const auto p = topology_->prev(e), c = topology_->cur(e);
      const std::size_t b = pairs_.project(p), cl = pairs_.project(c);
      if (auto a = pairs_.previous(p)) {
        edge_param_[e] = static_cast<std::uint32_t>(L + L * L + (*a * L + b) * L + cl);
        edge_ok_[e] = bigram_ok(*a, b) && bigram_ok(b, cl);
      } else {
        edge_param_[e] = static_cast<std::uint32_t>(L + b * L + cl);
        edge_ok_[e] = bigram_ok(std::nullopt, b) && bigram_ok(b, cl);
      }
    }
    transition_params_ = L + L * L + L * L * L;

    layout_.label_count = L;
    layout_.coarse = false;
    for (std::size_t s = 0; s < S; ++s) {
      layout_.state_label.push_back(static_cast<std::uint32_t>(pairs_.project(s)));
      layout_.tied.push_back(false);
    }
  }

  LabelAlphabet alphabet_;
  ModelOrder order_;
  PairStates pairs_;
  std::shared_ptr<const Transitions> topology_;
  std::vector<std::string> names_;
  std::vector<std::uint32_t> start_param_;
  std::vector<std::uint32_t> edge_param_;
  std::vector<bool> start_ok_;
  std::vector<bool> edge_ok_;
  std::size_t transition_params_ = 0;
  SlotLayout layout_;
};

inline FeatureIndex build_feature_index(const std::vector<Sentence>& corpus, const TemplateConfig& config,
                                        const StateSpace& space) {
  return build_feature_index(corpus, config, space.slot_layout());
}

}  // namespace picrf
