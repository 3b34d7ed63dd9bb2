#pragma once

// Test-only oracles: exhaustive path enumeration over explicitly stored
// dense potentials, independent of the recursions under test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "picrf/corpus.hpp"
#include "picrf/induction.hpp"
#include "picrf/lattice.hpp"
#include "picrf/objective.hpp"
#include "picrf/state_space.hpp"

namespace picrf::testing {

struct DenseInstance {
  std::size_t length = 0;
  std::size_t states = 0;
  std::vector<double> start;  // states
  std::vector<double> trans;  // prev * states + cur
  std::vector<double> node;   // t * states + s

  double path_score(const std::vector<std::size_t>& path) const {
    double v = start[path[0]] + node[path[0]];
    for (std::size_t t = 1; t < path.size(); ++t) {
      v += trans[path[t - 1] * states + path[t]] + node[t * states + path[t]];
    }
    return v;
  }
};

inline DenseInstance random_instance(std::mt19937_64& rng, std::size_t T, std::size_t S, double scale = 2.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  DenseInstance d{T, S, {}, {}, {}};
  for (std::size_t i = 0; i < S; ++i) d.start.push_back(u(rng));
  for (std::size_t i = 0; i < S * S; ++i) d.trans.push_back(u(rng));
  for (std::size_t i = 0; i < T * S; ++i) d.node.push_back(u(rng));
  return d;
}

inline Lattice to_lattice(const DenseInstance& d) {
  auto topo = std::make_shared<Transitions>(Transitions::dense(d.states));
  Lattice lat(topo, d.length);
  lat.start = d.start;
  lat.node = d.node;
  for (std::size_t e = 0; e < topo->edge_count(); ++e) lat.edge[e] = d.trans[topo->prev(e) * d.states + topo->cur(e)];
  return lat;
}

/// Calls `visit(path)` for every one of S^T paths.
inline void for_each_path(std::size_t T, std::size_t S, const std::function<void(const std::vector<std::size_t>&)>& visit) {
  std::vector<std::size_t> path(T, 0);
  while (true) {
    visit(path);
    std::size_t i = 0;
    while (i < T && ++path[i] == S) path[i++] = 0;
    if (i == T) return;
  }
}

struct BruteForce {
  double log_z = 0;
  double max_score = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> argmax;
  bool unique = true;
  std::vector<double> marginals;  // T x S
};

inline BruteForce brute_force(const DenseInstance& d) {
  std::vector<double> scores;
  std::vector<std::vector<std::size_t>> paths;
  for_each_path(d.length, d.states, [&](const auto& p) {
    scores.push_back(d.path_score(p));
    paths.push_back(p);
  });
  BruteForce b;
  double m = -std::numeric_limits<double>::infinity();
  for (double s : scores) m = std::max(m, s);
  double sum = 0;
  for (double s : scores) sum += std::exp(s - m);
  b.log_z = m + std::log(sum);
  b.marginals.assign(d.length * d.states, 0.0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double p = std::exp(scores[i] - b.log_z);
    for (std::size_t t = 0; t < d.length; ++t) b.marginals[t * d.states + paths[i][t]] += p;
    if (scores[i] > b.max_score) {
      b.max_score = scores[i];
      b.argmax = paths[i];
    }
  }
  int at_max = 0;
  for (double s : scores) at_max += (b.max_score - s) <= 1e-12;
  b.unique = at_max == 1;
  return b;
}

/// Random strict-valid IOB2 sequence.
inline Labels random_iob2(std::mt19937_64& rng, const std::vector<std::string>& types, std::size_t len) {
  Labels y;
  std::string open;
  for (std::size_t i = 0; i < len; ++i) {
    const auto r = rng() % 3;
    if (r == 0 || (r == 2 && open.empty())) {
      y.emplace_back("O");
      open.clear();
    } else if (r == 1) {
      open = types[rng() % types.size()];
      y.push_back("B-" + open);
    } else {
      y.push_back("I-" + open);
    }
  }
  return y;
}

/// Every O in `y` maps to t[O] in `z` where t is the type of the nearest
/// preceding entity label, or stays O when there is none; entity labels are
/// untouched.
inline bool precursor_sound(const Labels& y, const Labels& z) {
  if (y.size() != z.size()) return false;
  std::optional<std::string> last;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == "O") {
      const std::string expect = last ? *last + "[O]" : "O";
      if (z[i] != expect) return false;
    } else {
      if (z[i] != y[i]) return false;
      last = y[i].substr(2);
    }
  }
  return true;
}

/// Random labeled corpus over a small vocabulary.
inline std::vector<Sentence> random_corpus(std::mt19937_64& rng, std::size_t sentences,
                                           const std::vector<std::string>& types, std::size_t max_len = 8,
                                           std::size_t vocab = 12) {
  std::vector<Sentence> out;
  for (std::size_t n = 0; n < sentences; ++n) {
    Sentence s;
    s.labels = random_iob2(rng, types, 1 + rng() % max_len);
    for (std::size_t i = 0; i < s.labels.size(); ++i) {
      s.tokens.push_back({"Tok" + std::to_string(rng() % vocab) + (rng() % 2 ? "ing" : "s")});
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// Everything needed to evaluate the training objective on a corpus.
struct Problem {
  StateSpace space;
  FeatureIndex index;
  TemplateConfig templates;
  std::vector<IndexedSentence> batch;

  Problem(const std::vector<Sentence>& corpus, const LabelAlphabet& alphabet, ModelOrder order,
          TemplateConfig tc)
      : space(alphabet, order), index(build_feature_index(corpus, tc, space)), templates(std::move(tc)) {
    for (const auto& s : corpus) batch.push_back(index_sentence(s, templates, index, space));
  }

  std::size_t dimension() const { return parameter_count(index, space); }
};

inline std::vector<double> random_weights(std::mt19937_64& rng, std::size_t n, double scale = 0.5) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> w(n);
  for (auto& v : w) v = u(rng);
  return w;
}

// Relative error with a floor on the denominator so that slots whose true
// derivative is essentially zero are judged on absolute error.
inline constexpr double kRelativeErrorFloor = 1e-4;

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), kRelativeErrorFloor});
}

/// Worst relative error between the analytic gradient and central finite
/// differences over `slots` randomly chosen parameter slots.
inline double finite_difference_check(const Objective& obj, std::vector<double> w, std::mt19937_64& rng,
                                      std::size_t slots, double h = 1e-5) {
  std::vector<double> grad(w.size()), scratch(w.size());
  obj.evaluate(w, grad);
  double worst = 0;
  for (std::size_t n = 0; n < slots; ++n) {
    const std::size_t k = rng() % w.size();
    const double orig = w[k];
    w[k] = orig + h;
    const double up = obj.evaluate(w, scratch);
    w[k] = orig - h;
    const double down = obj.evaluate(w, scratch);
    w[k] = orig;
    worst = std::max(worst, relative_error(grad[k], (up - down) / (2 * h)));
  }
  return worst;
}

/// Second-order weights reproducing a first-order model: observations copy
/// over slot for slot, start triples and triples ignore the older label.
inline std::vector<double> embed_first_order(const std::vector<double>& first, std::size_t observation_params,
                                             std::size_t L) {
  std::vector<double> w(first.begin(), first.begin() + static_cast<long>(observation_params));
  const double* start = first.data() + observation_params;
  const double* trans = start + L;
  for (std::size_t b = 0; b < L; ++b) w.push_back(start[b]);
  for (std::size_t a = 0; a < L; ++a) {
    for (std::size_t b = 0; b < L; ++b) w.push_back(trans[a * L + b]);
  }
  for (std::size_t a = 0; a < L; ++a) {
    for (std::size_t b = 0; b < L; ++b) {
      for (std::size_t c = 0; c < L; ++c) w.push_back(trans[b * L + c]);
    }
  }
  return w;
}

}  // namespace picrf::testing
