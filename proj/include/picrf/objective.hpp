#pragma once

// Lattice construction from weights and the penalized conditional
// log-likelihood with its gradient.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "picrf/corpus.hpp"
#include "picrf/error.hpp"
#include "picrf/features.hpp"
#include "picrf/lattice.hpp"
#include "picrf/state_space.hpp"

namespace picrf {

using IndexedFeatures = std::vector<std::vector<std::uint32_t>>;

inline std::size_t parameter_count(const FeatureIndex& index, const StateSpace& space) {
  return index.parameter_count() + space.transition_parameter_count();
}

namespace detail {

inline void check_weight_length(std::span<const double> weights, const FeatureIndex& index, const StateSpace& space) {
  if (weights.size() != parameter_count(index, space)) {
    throw Error("weight vector has " + std::to_string(weights.size()) + " entries, expected " +
                std::to_string(parameter_count(index, space)));
  }
}

// Start and edge potentials depend only on the weights, not on the sentence.
inline void fill_transitions(Lattice& lat, std::span<const double> weights, const FeatureIndex& index,
                             const StateSpace& space, bool constrained) {
  const double* tw = weights.data() + index.parameter_count();
  for (std::size_t s = 0; s < lat.states(); ++s) {
    const auto p = space.start_param(s);
    lat.start[s] = (p == StateSpace::kNone || (constrained && !space.start_allowed(s))) ? kNegInf : tw[p];
  }
  for (std::size_t e = 0; e < lat.edge.size(); ++e) {
    lat.edge[e] = (constrained && !space.edge_allowed(e)) ? kNegInf : tw[space.edge_param(e)];
  }
}

inline void fill_nodes(Lattice& lat, const IndexedFeatures& feats, std::span<const double> weights,
                       const FeatureIndex& index, std::vector<double>& label_score) {
  const auto& layout = index.layout();
  const std::size_t L = layout.label_count, S = lat.states();
  lat.length = feats.size();
  lat.node.assign(lat.length * S, 0.0);
  label_score.assign(L + 1, 0.0);
  for (std::size_t t = 0; t < feats.size(); ++t) {
    std::fill(label_score.begin(), label_score.end(), 0.0);
    for (auto f : feats[t]) {
      const double* w = weights.data() + index.block_base(f);
      for (std::size_t l = 0; l < L; ++l) label_score[l] += w[l];
      if (layout.coarse) label_score[L] += w[L];
    }
    double* row = lat.node.data() + t * S;
    for (std::size_t s = 0; s < S; ++s) {
      row[s] = label_score[layout.state_label[s]] + (layout.tied[s] ? label_score[L] : 0.0);
    }
  }
}

}  // namespace detail

/// Lattice for one sentence. With `constrained`, transitions that cannot
/// occur in well-formed gold sequences get -inf.
inline Lattice build_lattice(const IndexedFeatures& feats, std::span<const double> weights, const FeatureIndex& index,
                             const StateSpace& space, bool constrained = false) {
  detail::check_weight_length(weights, index, space);
  Lattice lat(space.topology(), feats.size());
  detail::fill_transitions(lat, weights, index, space, constrained);
  std::vector<double> scratch;
  detail::fill_nodes(lat, feats, weights, index, scratch);
  return lat;
}

/// A training instance resolved against a feature index and state space.
struct IndexedSentence {
  IndexedFeatures features;
  std::vector<std::size_t> gold;
  std::vector<std::uint32_t> gold_edges;  // gold_edges[t - 1] enters position t
};

inline IndexedSentence index_sentence(const Sentence& s, const TemplateConfig& templates, const FeatureIndex& index,
                                      const StateSpace& space) {
  if (!s.has_labels() || s.labels.size() != s.size()) throw LabelError("training sentence lacks aligned gold labels");
  IndexedSentence out;
  out.features = index.index(extract_features(s, templates));
  out.gold = space.gold_states(s.labels);
  const auto& topo = *space.topology();
  if (space.start_param(out.gold[0]) == StateSpace::kNone) {
    throw LabelError("gold state '" + space.state_name(out.gold[0]) + "' cannot start a sentence");
  }
  for (std::size_t t = 1; t < out.gold.size(); ++t) {
    auto e = topo.find(out.gold[t - 1], out.gold[t]);
    if (!e) {
      throw LabelError("gold transition " + space.state_name(out.gold[t - 1]) + " -> " +
                       space.state_name(out.gold[t]) + " is outside the state set");
    }
    out.gold_edges.push_back(static_cast<std::uint32_t>(*e));
  }
  return out;
}

/// Full-batch penalized log-likelihood
///   sum_i [score(gold_i) - log Z_i] - |w|^2 / (2 sigma^2)
/// and its gradient. Sentences are split into `threads` contiguous blocks
/// whose partial sums are reduced in block order, so a fixed thread count
/// gives bit-identical results.
class Objective {
 public:
  Objective(const StateSpace& space, const FeatureIndex& index, std::vector<IndexedSentence> batch, double l2_variance,
            std::size_t threads = 1)
      : space_(space), index_(index), batch_(std::move(batch)), l2_variance_(l2_variance),
        threads_(std::max<std::size_t>(1, threads)) {
    if (!(l2_variance > 0)) throw Error("l2 variance must be positive");
  }

  std::size_t dimension() const noexcept { return parameter_count(index_, space_); }
  const std::vector<IndexedSentence>& batch() const noexcept { return batch_; }
  std::size_t threads() const noexcept { return threads_; }

  double evaluate(std::span<const double> weights, std::span<double> grad) const {
    detail::check_weight_length(weights, index_, space_);
    if (grad.size() != weights.size()) throw Error("gradient buffer has the wrong length");
    const std::size_t workers = std::min(threads_, std::max<std::size_t>(1, batch_.size()));
    std::vector<Partial> partials(workers);
    auto run = [&](std::size_t w) {
      const std::size_t lo = batch_.size() * w / workers, hi = batch_.size() * (w + 1) / workers;
      partials[w] = accumulate(weights, lo, hi);
    };
    if (workers == 1) {
      run(0);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
      for (auto& th : pool) th.join();
    }
    double value = 0;
    std::fill(grad.begin(), grad.end(), 0.0);
    for (const auto& p : partials) {
      value += p.value;
      for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += p.grad[k];
    }
    if (std::isfinite(l2_variance_)) {
      double sq = 0;
      for (std::size_t k = 0; k < grad.size(); ++k) {
        sq += weights[k] * weights[k];
        grad[k] -= weights[k] / l2_variance_;
      }
      value -= sq / (2 * l2_variance_);
    }
    return value;
  }

 private:
  struct Partial {
    double value = 0;
    std::vector<double> grad;
  };

  Partial accumulate(std::span<const double> weights, std::size_t lo, std::size_t hi) const {
    Partial out;
    out.grad.assign(weights.size(), 0.0);
    const auto& layout = index_.layout();
    const auto& topo = *space_.topology();
    const std::size_t L = layout.label_count, S = space_.lattice_states();
    double* obs = out.grad.data();
    double* trans = out.grad.data() + index_.parameter_count();

    Lattice lat(space_.topology(), 0);
    detail::fill_transitions(lat, weights, index_, space_, false);
    ForwardBackwardResult fb;
    std::vector<double> scratch, expected(L + 1);

    for (std::size_t i = lo; i < hi; ++i) {
      const auto& inst = batch_[i];
      const std::size_t T = inst.features.size();
      detail::fill_nodes(lat, inst.features, weights, index_, scratch);
      forward_backward(lat, fb);

      // Observed counts and gold path score.
      double gold = lat.start[inst.gold[0]];
      trans[space_.start_param(inst.gold[0])] += 1;
      for (std::size_t t = 0; t < T; ++t) {
        const auto s = inst.gold[t];
        gold += lat.node_at(t, s);
        if (t > 0) {
          gold += lat.edge[inst.gold_edges[t - 1]];
          trans[space_.edge_param(inst.gold_edges[t - 1])] += 1;
        }
        for (auto f : inst.features[t]) {
          double* w = obs + index_.block_base(f);
          w[layout.state_label[s]] += 1;
          if (layout.tied[s]) w[L] += 1;
        }
      }
      out.value += gold - fb.log_z;

      // Expected counts under the model.
      for (std::size_t t = 0; t < T; ++t) {
        std::fill(expected.begin(), expected.end(), 0.0);
        for (std::size_t s = 0; s < S; ++s) {
          const double p = fb.node_marginal(t, s);
          expected[layout.state_label[s]] += p;
          if (layout.tied[s]) expected[L] += p;
          if (t == 0 && space_.start_param(s) != StateSpace::kNone) trans[space_.start_param(s)] -= p;
        }
        for (auto f : inst.features[t]) {
          double* w = obs + index_.block_base(f);
          for (std::size_t l = 0; l < L; ++l) w[l] -= expected[l];
          if (layout.coarse) w[L] -= expected[L];
        }
        if (t == 0) continue;
        for (std::size_t e = 0; e < topo.edge_count(); ++e) {
          trans[space_.edge_param(e)] -= fb.edge_marginal(lat, t, e);
        }
      }
    }
    return out;
  }

  const StateSpace& space_;
  const FeatureIndex& index_;
  std::vector<IndexedSentence> batch_;
  double l2_variance_;
  std::size_t threads_;
};

/// One-shot evaluation; pass an infinite variance for the unregularized
/// log-likelihood.
inline std::pair<double, std::vector<double>> log_likelihood_and_gradient(const std::vector<IndexedSentence>& batch,
                                                                          std::span<const double> weights,
                                                                          const FeatureIndex& index,
                                                                          const StateSpace& space, double l2_variance) {
  Objective obj(space, index, batch, l2_variance);
  std::vector<double> grad(weights.size());
  const double v = obj.evaluate(weights, grad);
  return {v, std::move(grad)};
}

}  // namespace picrf
