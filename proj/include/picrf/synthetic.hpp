#pragma once

// Synthetic long-distance corpora: <precursor entity> <gap fillers> <dependent
// entity> <trailing fillers>. The dependent entity's surface form comes from a
// vocabulary shared by all types, so its type is recoverable only through the
// precursor.

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "picrf/corpus.hpp"
#include "picrf/error.hpp"

namespace picrf {

/// Discrete distribution over positive integers.
struct GapDistribution {
  std::vector<std::size_t> values;
  std::vector<double> weights;

  static GapDistribution uniform(std::size_t lo, std::size_t hi) {
    if (lo == 0 || hi < lo) throw Error("gap range must satisfy 1 <= lo <= hi");
    GapDistribution d;
    for (std::size_t v = lo; v <= hi; ++v) {
      d.values.push_back(v);
      d.weights.push_back(1.0);
    }
    return d;
  }

  double mean() const {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      num += weights[i] * static_cast<double>(values[i]);
      den += weights[i];
    }
    return num / den;
  }

  std::size_t min_value() const {
    std::size_t m = SIZE_MAX;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (weights[i] > 0) m = std::min(m, values[i]);
    }
    return m;
  }
};

struct SynthConfig {
  std::size_t entity_type_count = 2;
  GapDistribution gap = GapDistribution::uniform(1, 6);
  std::size_t sentences = 2000;
  /// dependency_rule[i] is the forced type of the dependent entity when the
  /// precursor has type i. Empty means identity.
  std::vector<std::size_t> dependency_rule;
  std::uint64_t seed = 1;
  std::size_t filler_vocab = 20;
  std::size_t precursor_vocab = 5;  // per type
  std::size_t shared_vocab = 10;
  std::size_t max_trailing = 2;

  static std::vector<std::size_t> identity_rule(std::size_t n) {
    std::vector<std::size_t> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = i;
    return r;
  }
  static std::vector<std::size_t> shift_rule(std::size_t n) {
    std::vector<std::size_t> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = (i + 1) % n;
    return r;
  }

  std::vector<std::size_t> rule() const {
    return dependency_rule.empty() ? identity_rule(entity_type_count) : dependency_rule;
  }
};

/// "A", "B", ... then "T26", "T27", ...
inline std::string synthetic_type_name(std::size_t i) {
  if (i < 26) return std::string(1, static_cast<char>('A' + i));
  return "T" + std::to_string(i);
}

inline std::string synthetic_filler(std::size_t i) { return "fill" + std::to_string(i); }
inline std::string synthetic_precursor(std::size_t type, std::size_t i) {
  return "ent" + synthetic_type_name(type) + "_" + std::to_string(i);
}
inline std::string synthetic_shared(std::size_t i) { return "shared" + std::to_string(i); }

struct SyntheticVocabulary {
  std::set<std::string> fillers;
  std::vector<std::set<std::string>> precursors;  // per type
  std::set<std::string> shared;
};

inline SyntheticVocabulary synthetic_vocabulary(const SynthConfig& config) {
  SyntheticVocabulary v;
  for (std::size_t i = 0; i < config.filler_vocab; ++i) v.fillers.insert(synthetic_filler(i));
  v.precursors.resize(config.entity_type_count);
  for (std::size_t t = 0; t < config.entity_type_count; ++t) {
    for (std::size_t i = 0; i < config.precursor_vocab; ++i) v.precursors[t].insert(synthetic_precursor(t, i));
  }
  for (std::size_t i = 0; i < config.shared_vocab; ++i) v.shared.insert(synthetic_shared(i));
  return v;
}

inline void validate(const SynthConfig& config) {
  if (config.entity_type_count < 2) throw Error("synthetic corpus needs at least 2 entity types");
  if (config.sentences == 0) throw Error("synthetic corpus needs at least one sentence");
  if (config.filler_vocab == 0 || config.precursor_vocab == 0 || config.shared_vocab == 0) {
    throw Error("synthetic vocabulary sizes must be positive");
  }
  if (config.gap.values.empty() || config.gap.values.size() != config.gap.weights.size()) {
    throw Error("gap distribution is empty or malformed");
  }
  double total = 0;
  for (std::size_t i = 0; i < config.gap.values.size(); ++i) {
    if (config.gap.values[i] == 0 || config.gap.weights[i] < 0) throw Error("gap distribution is malformed");
    total += config.gap.weights[i];
  }
  if (!(total > 0)) throw Error("gap distribution has no mass");
  auto rule = config.rule();
  if (rule.size() != config.entity_type_count) throw Error("dependency rule must cover every entity type");
  std::vector<bool> hit(rule.size(), false);
  for (auto r : rule) {
    if (r >= rule.size() || hit[r]) throw Error("dependency rule must be a bijection over entity types");
    hit[r] = true;
  }
}

namespace detail {

// mt19937_64 is fully specified by the standard; the std distributions are
// not, so sampling is done by hand to keep corpora identical across toolchains.
inline std::size_t uniform_below(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t bound = n;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do x = rng();
  while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

inline double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t sample_gap(std::mt19937_64& rng, const GapDistribution& d) {
  double total = 0;
  for (double w : d.weights) total += w;
  double u = unit_double(rng) * total;
  for (std::size_t i = 0; i < d.values.size(); ++i) {
    if (u < d.weights[i]) return d.values[i];
    u -= d.weights[i];
  }
  for (std::size_t i = d.values.size(); i-- > 0;) {
    if (d.weights[i] > 0) return d.values[i];
  }
  return d.values.back();
}

}  // namespace detail

inline std::vector<Sentence> generate_synthetic(const SynthConfig& config) {
  validate(config);
  const auto rule = config.rule();
  std::mt19937_64 rng(config.seed);
  std::vector<Sentence> out;
  out.reserve(config.sentences);
  auto push = [](Sentence& s, std::string tok, std::string label) {
    s.tokens.push_back({std::move(tok)});
    s.labels.push_back(std::move(label));
  };
  for (std::size_t n = 0; n < config.sentences; ++n) {
    Sentence s;
    const std::size_t first = detail::uniform_below(rng, config.entity_type_count);
    push(s, synthetic_precursor(first, detail::uniform_below(rng, config.precursor_vocab)),
         "B-" + synthetic_type_name(first));
    const std::size_t gap = detail::sample_gap(rng, config.gap);
    for (std::size_t k = 0; k < gap; ++k) {
      push(s, synthetic_filler(detail::uniform_below(rng, config.filler_vocab)), std::string(kOutside));
    }
    push(s, synthetic_shared(detail::uniform_below(rng, config.shared_vocab)),
         "B-" + synthetic_type_name(rule[first]));
    const std::size_t trailing = detail::uniform_below(rng, config.max_trailing + 1);
    for (std::size_t k = 0; k < trailing; ++k) {
      push(s, synthetic_filler(detail::uniform_below(rng, config.filler_vocab)), std::string(kOutside));
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// Best accuracy any predictor can reach on the dependent entity's type
/// without seeing the precursor: the largest marginal probability of a
/// dependent type under uniform precursor sampling.
inline double dependent_type_chance_level(const SynthConfig& config) {
  validate(config);
  std::vector<double> mass(config.entity_type_count, 0.0);
  const auto rule = config.rule();
  for (std::size_t t = 0; t < config.entity_type_count; ++t) {
    mass[rule[t]] += 1.0 / static_cast<double>(config.entity_type_count);
  }
  double best = 0;
  for (double m : mass) best = std::max(best, m);
  return best;
}

}  // namespace picrf
