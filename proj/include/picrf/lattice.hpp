#pragma once

// Chain lattices with sparse transition topology, log-domain forward-backward
// and Viterbi decoding.
//
// Potentials: psi(0, start, s) = start[s] + node(0, s) and, for t >= 1,
// psi(t, p, s) = edge(p -> s) + node(t, s). A transition absent from the
// topology, or carrying -inf, is forbidden.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "picrf/error.hpp"

namespace picrf {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Max-shifted log(sum(exp(x))); -inf for an empty or all -inf range.
inline double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double sum = 0;
  for (double x : xs) sum += std::exp(x - m);
  return m + std::log(sum);
}

/// Allowed (prev -> cur) transitions in CSR form. Edge ids are assigned in
/// (cur, prev) order, so the incoming edges of a state are contiguous and
/// sorted by predecessor.
class Transitions {
 public:
  Transitions() = default;

  Transitions(std::size_t states, std::vector<std::pair<std::uint32_t, std::uint32_t>> edges) : states_(states) {
    std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second < b.second : a.first < b.first;
    });
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    in_offset_.assign(states + 1, 0);
    out_offset_.assign(states + 1, 0);
    for (auto [p, c] : edges) {
      if (p >= states || c >= states) throw Error("transition refers to a state outside the lattice");
      ++in_offset_[c + 1];
      ++out_offset_[p + 1];
    }
    for (std::size_t s = 0; s < states; ++s) {
      in_offset_[s + 1] += in_offset_[s];
      out_offset_[s + 1] += out_offset_[s];
    }
    prev_.resize(edges.size());
    cur_.resize(edges.size());
    out_edge_.resize(edges.size());
    std::vector<std::uint32_t> fill(out_offset_.begin(), out_offset_.end() - 1);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      prev_[e] = edges[e].first;
      cur_[e] = edges[e].second;
      out_edge_[fill[edges[e].first]++] = static_cast<std::uint32_t>(e);
    }
  }

  static Transitions dense(std::size_t states) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    edges.reserve(states * states);
    for (std::uint32_t p = 0; p < states; ++p) {
      for (std::uint32_t c = 0; c < states; ++c) edges.emplace_back(p, c);
    }
    return Transitions(states, std::move(edges));
  }

  std::size_t states() const noexcept { return states_; }
  std::size_t edge_count() const noexcept { return prev_.size(); }
  std::uint32_t prev(std::size_t e) const noexcept { return prev_[e]; }
  std::uint32_t cur(std::size_t e) const noexcept { return cur_[e]; }

  std::size_t in_begin(std::size_t s) const noexcept { return in_offset_[s]; }
  std::size_t in_end(std::size_t s) const noexcept { return in_offset_[s + 1]; }

  /// Edge ids leaving `s`, in increasing order.
  std::span<const std::uint32_t> outgoing(std::size_t s) const noexcept {
    return {out_edge_.data() + out_offset_[s], out_edge_.data() + out_offset_[s + 1]};
  }

  std::optional<std::size_t> find(std::size_t prev, std::size_t cur) const {
    auto first = prev_.begin() + in_offset_[cur];
    auto last = prev_.begin() + in_offset_[cur + 1];
    auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(prev));
    if (it == last || *it != prev) return std::nullopt;
    return static_cast<std::size_t>(it - prev_.begin());
  }

 private:
  std::size_t states_ = 0;
  std::vector<std::uint32_t> in_offset_;
  std::vector<std::uint32_t> out_offset_;
  std::vector<std::uint32_t> prev_;
  std::vector<std::uint32_t> cur_;
  std::vector<std::uint32_t> out_edge_;
};

struct Lattice {
  std::shared_ptr<const Transitions> topology;
  std::size_t length = 0;
  std::vector<double> start;  // per state
  std::vector<double> edge;   // per edge id
  std::vector<double> node;   // length x states, row-major

  Lattice() = default;
  Lattice(std::shared_ptr<const Transitions> topo, std::size_t len)
      : topology(std::move(topo)),
        length(len),
        start(topology->states(), 0.0),
        edge(topology->edge_count(), 0.0),
        node(len * topology->states(), 0.0) {}

  std::size_t states() const noexcept { return topology->states(); }
  double& node_at(std::size_t t, std::size_t s) noexcept { return node[t * states() + s]; }
  double node_at(std::size_t t, std::size_t s) const noexcept { return node[t * states() + s]; }

  /// Log-potential of entering `s` at `t` from `prev` (ignored at t = 0).
  double psi(std::size_t t, std::size_t prev, std::size_t s) const {
    if (t == 0) return start[s] + node_at(0, s);
    auto e = topology->find(prev, s);
    if (!e) return kNegInf;
    return edge[*e] + node_at(t, s);
  }

  /// Total log-potential of a state path; -inf if any step is forbidden.
  double path_score(std::span<const std::size_t> path) const {
    double score = 0;
    for (std::size_t t = 0; t < path.size(); ++t) score += psi(t, t ? path[t - 1] : 0, path[t]);
    return score;
  }
};

struct ForwardBackwardResult {
  std::size_t length = 0;
  std::size_t states = 0;
  std::vector<double> log_alpha;  // length x states
  std::vector<double> log_beta;   // length x states
  double log_z = kNegInf;
  double log_z_backward = kNegInf;
  std::vector<double> marginals;  // length x states

  double alpha(std::size_t t, std::size_t s) const noexcept { return log_alpha[t * states + s]; }
  double beta(std::size_t t, std::size_t s) const noexcept { return log_beta[t * states + s]; }
  double node_marginal(std::size_t t, std::size_t s) const noexcept { return marginals[t * states + s]; }

  /// P(y_{t-1} = prev(e), y_t = cur(e)) for t >= 1.
  double edge_marginal(const Lattice& lat, std::size_t t, std::size_t e) const {
    const auto& topo = *lat.topology;
    const auto p = topo.prev(e), s = topo.cur(e);
    return std::exp(alpha(t - 1, p) + lat.edge[e] + lat.node_at(t, s) + beta(t, s) - log_z);
  }
};

/// Runs forward and backward recursions into `out`, reusing its storage.
inline void forward_backward(const Lattice& lat, ForwardBackwardResult& out) {
  const std::size_t T = lat.length, S = lat.states();
  if (T == 0) throw Error("forward-backward needs a non-empty lattice");
  const auto& topo = *lat.topology;
  out.length = T;
  out.states = S;
  out.log_alpha.assign(T * S, kNegInf);
  out.log_beta.assign(T * S, kNegInf);
  out.marginals.assign(T * S, 0.0);

  auto blocked = [&](const double* row, std::size_t t) {
    if (std::all_of(row, row + S, [](double v) { return v == kNegInf; })) {
      throw Error("every path through position " + std::to_string(t) + " is forbidden");
    }
  };

  double* a = out.log_alpha.data();
  for (std::size_t s = 0; s < S; ++s) a[s] = lat.start[s] + lat.node_at(0, s);
  blocked(a, 0);
  for (std::size_t t = 1; t < T; ++t) {
    const double* prev = a + (t - 1) * S;
    double* cur = a + t * S;
    for (std::size_t s = 0; s < S; ++s) {
      const std::size_t b = topo.in_begin(s), e_end = topo.in_end(s);
      double m = kNegInf;
      for (std::size_t e = b; e < e_end; ++e) m = std::max(m, prev[topo.prev(e)] + lat.edge[e]);
      if (m == kNegInf) continue;
      double sum = 0;
      for (std::size_t e = b; e < e_end; ++e) sum += std::exp(prev[topo.prev(e)] + lat.edge[e] - m);
      cur[s] = lat.node_at(t, s) + m + std::log(sum);
    }
    blocked(cur, t);
  }
  out.log_z = log_sum_exp({a + (T - 1) * S, S});

  double* bt = out.log_beta.data();
  std::fill(bt + (T - 1) * S, bt + T * S, 0.0);
  std::vector<double> ahead(S);
  for (std::size_t t = T - 1; t-- > 0;) {
    const double* next = bt + (t + 1) * S;
    for (std::size_t s = 0; s < S; ++s) ahead[s] = lat.node_at(t + 1, s) + next[s];
    double* cur = bt + t * S;
    for (std::size_t p = 0; p < S; ++p) {
      auto outs = topo.outgoing(p);
      double m = kNegInf;
      for (auto e : outs) m = std::max(m, lat.edge[e] + ahead[topo.cur(e)]);
      if (m == kNegInf) continue;
      double sum = 0;
      for (auto e : outs) sum += std::exp(lat.edge[e] + ahead[topo.cur(e)] - m);
      cur[p] = m + std::log(sum);
    }
  }
  {
    std::vector<double> first(S);
    for (std::size_t s = 0; s < S; ++s) first[s] = lat.start[s] + lat.node_at(0, s) + bt[s];
    out.log_z_backward = log_sum_exp(first);
  }
  if (!std::isfinite(out.log_z)) throw Error("partition function is not finite");

  for (std::size_t i = 0; i < T * S; ++i) {
    const double v = a[i] + bt[i];
    out.marginals[i] = v == kNegInf ? 0.0 : std::exp(v - out.log_z);
  }
}

inline ForwardBackwardResult forward_backward(const Lattice& lat) {
  ForwardBackwardResult r;
  forward_backward(lat, r);
  return r;
}

struct ViterbiResult {
  std::vector<std::size_t> path;
  double score = kNegInf;
};

/// Best path. Ties go to the lower state index, both for the final state and
/// for each backpointer.
inline ViterbiResult viterbi(const Lattice& lat) {
  const std::size_t T = lat.length, S = lat.states();
  if (T == 0) throw Error("viterbi needs a non-empty lattice");
  const auto& topo = *lat.topology;
  std::vector<double> delta(T * S, kNegInf);
  std::vector<std::uint32_t> back(T * S, 0);
  for (std::size_t s = 0; s < S; ++s) delta[s] = lat.start[s] + lat.node_at(0, s);
  for (std::size_t t = 1; t < T; ++t) {
    const double* prev = delta.data() + (t - 1) * S;
    for (std::size_t s = 0; s < S; ++s) {
      double best = kNegInf;
      std::uint32_t arg = 0;
      bool found = false;
      for (std::size_t e = topo.in_begin(s); e < topo.in_end(s); ++e) {
        const double v = prev[topo.prev(e)] + lat.edge[e];
        if (v == kNegInf) continue;
        if (!found || v > best) {
          best = v;
          arg = topo.prev(e);
          found = true;
        }
      }
      if (found) {
        delta[t * S + s] = best + lat.node_at(t, s);
        back[t * S + s] = arg;
      }
    }
  }
  ViterbiResult r;
  r.path.resize(T);
  std::size_t arg = 0;
  for (std::size_t s = 0; s < S; ++s) {
    if (delta[(T - 1) * S + s] > r.score) {
      r.score = delta[(T - 1) * S + s];
      arg = s;
    }
  }
  if (r.score == kNegInf) throw Error("no finite path through the lattice");
  r.path[T - 1] = arg;
  for (std::size_t t = T - 1; t > 0; --t) r.path[t - 1] = back[t * S + r.path[t]];
  return r;
}

}  // namespace picrf
