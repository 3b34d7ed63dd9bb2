#pragma once

// Model training and per-iteration timing.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <memory>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "picrf/corpus.hpp"
#include "picrf/error.hpp"
#include "picrf/features.hpp"
#include "picrf/induction.hpp"
#include "picrf/lattice.hpp"
#include "picrf/lbfgs.hpp"
#include "picrf/objective.hpp"
#include "picrf/state_space.hpp"

namespace picrf {

struct TrainConfig {
  ModelOrder order = ModelOrder::First;
  TemplateConfig templates;
  double l2_variance = 10.0;
  std::size_t max_iterations = 500;
  double relative_tolerance = 1e-6;
  /// Gradient max-norm below which the relative-change test may stop
  /// training; infinity gives the bare relative-change rule.
  double relative_tolerance_gradient = 1e-3;
  std::size_t history = 7;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  /// Forbid structurally impossible transitions when decoding.
  bool constrained_decode = false;

  void validate() const {
    templates.validate();
    if (!(l2_variance > 0)) throw Error("l2 variance must be positive");
    if (max_iterations == 0) throw Error("max iterations must be positive");
    if (!(relative_tolerance > 0)) throw Error("relative tolerance must be positive");
    if (!(relative_tolerance_gradient > 0)) throw Error("relative tolerance gradient bound must be positive");
    if (history == 0) throw Error("history size must be positive");
    if (threads == 0) throw Error("thread count must be positive");
  }
};

/// A trained model: immutable weights plus everything needed to decode.
class Model {
 public:
  Model(ModelOrder order, LabelAlphabet alphabet, TemplateConfig templates, std::vector<std::string> feature_names,
        std::vector<double> weights, bool constrained_decode = false)
      : space_(std::make_shared<StateSpace>(alphabet, order)),
        templates_(std::move(templates)),
        index_(std::make_shared<FeatureIndex>(std::move(feature_names), space_->slot_layout())),
        weights_(std::move(weights)),
        constrained_(constrained_decode) {
    if (weights_.size() != parameter_count(*index_, *space_)) {
      throw Error("model has " + std::to_string(weights_.size()) + " weights, expected " +
                  std::to_string(parameter_count(*index_, *space_)));
    }
  }

  ModelOrder order() const noexcept { return space_->order(); }
  const LabelAlphabet& alphabet() const noexcept { return space_->alphabet(); }
  const StateSpace& space() const noexcept { return *space_; }
  const TemplateConfig& templates() const noexcept { return templates_; }
  const FeatureIndex& features() const noexcept { return *index_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  bool constrained_decode() const noexcept { return constrained_; }

  Lattice lattice(const Sentence& s) const {
    return build_lattice(index_->index(extract_features(s, templates_)), weights_, *index_, *space_, constrained_);
  }

  /// Viterbi state path over the model's lattice states.
  std::vector<std::size_t> decode_states(const Sentence& s) const {
    if (s.size() == 0) return {};
    return viterbi(lattice(s)).path;
  }

  /// Decoded base IOB2 labels (carrier states reverted to O).
  Labels tag(const Sentence& s) const { return space_->to_base_labels(decode_states(s)); }

 private:
  std::shared_ptr<const StateSpace> space_;
  TemplateConfig templates_;
  std::shared_ptr<const FeatureIndex> index_;
  std::vector<double> weights_;
  bool constrained_;
};

struct IterationRecord {
  std::size_t iteration = 0;
  double objective = 0;
  double gradient_max_norm = 0;
  double seconds = 0;
  std::size_t evaluations = 0;
};

struct TrainReport {
  ModelOrder order = ModelOrder::First;
  std::size_t threads = 1;
  std::size_t states = 0;
  std::size_t parameters = 0;
  std::vector<IterationRecord> iterations;
  Termination termination = Termination::MaxIterations;
  double final_gradient_max_norm = 0;

  std::size_t total_iterations() const noexcept { return iterations.size(); }

  double mean_seconds_per_iteration(std::size_t skip = 0) const {
    if (iterations.size() <= skip) return 0;
    double sum = 0;
    for (std::size_t i = skip; i < iterations.size(); ++i) sum += iterations[i].seconds;
    return sum / static_cast<double>(iterations.size() - skip);
  }
};

inline void write_report_table(std::ostream& out, const TrainReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "# order=%s states=%zu parameters=%zu threads=%zu\n", to_string(r.order).c_str(),
                r.states, r.parameters, r.threads);
  out << buf;
  std::snprintf(buf, sizeof buf, "%6s %22s %14s %12s %6s\n", "iter", "objective", "grad_max", "seconds", "evals");
  out << buf;
  for (const auto& it : r.iterations) {
    std::snprintf(buf, sizeof buf, "%6zu %22.10f %14.6e %12.6f %6zu\n", it.iteration, it.objective,
                  it.gradient_max_norm, it.seconds, it.evaluations);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "# termination=%s iterations=%zu mean_seconds_per_iteration=%.6f\n",
                to_string(r.termination).c_str(), r.total_iterations(), r.mean_seconds_per_iteration());
  out << buf;
}

/// One JSON object per line: a header record, then one record per iteration.
inline void write_report_records(std::ostream& out, const TrainReport& r) {
  nlohmann::json head{{"record", "train"},
                      {"order", to_string(r.order)},
                      {"states", r.states},
                      {"parameters", r.parameters},
                      {"threads", r.threads},
                      {"termination", to_string(r.termination)},
                      {"iterations", r.total_iterations()},
                      {"mean_seconds_per_iteration", r.mean_seconds_per_iteration()}};
  out << head.dump() << '\n';
  for (const auto& it : r.iterations) {
    nlohmann::json rec{{"record", "iteration"},
                       {"iteration", it.iteration},
                       {"objective", it.objective},
                       {"gradient_max_norm", it.gradient_max_norm},
                       {"seconds", it.seconds},
                       {"evaluations", it.evaluations}};
    out << rec.dump() << '\n';
  }
}

struct TrainResult {
  Model model;
  TrainReport report;
};

/// Builds the alphabet from the corpus' entity types.
inline LabelAlphabet alphabet_for(const std::vector<Sentence>& corpus) {
  return LabelAlphabet(collect_entity_types(corpus));
}

/// Trains from zero weights. Gold labels are base IOB2 (repaired if needed);
/// the pre-induced order induces them internally.
inline TrainResult train(const std::vector<Sentence>& corpus, const TrainConfig& config, const LabelAlphabet& alphabet) {
  config.validate();
  if (corpus.empty()) throw Error("training corpus is empty");
  const auto types = alphabet.type_set();
  std::vector<Sentence> gold;
  gold.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& s = corpus[i];
    if (s.size() == 0) continue;
    if (!s.has_labels() || s.labels.size() != s.size()) {
      throw LabelError("training sentence " + std::to_string(i) + " lacks aligned gold labels");
    }
    Sentence g = s;
    g.labels = validate_iob2(s.labels, Iob2Mode::Repair, &types);
    gold.push_back(std::move(g));
  }
  if (gold.empty()) throw Error("training corpus has no tokens");

  auto space = std::make_shared<StateSpace>(alphabet, config.order);
  if (space->lattice_states() == 0) throw Error("empty state set");
  auto index = std::make_shared<FeatureIndex>(build_feature_index(gold, config.templates, *space));
  std::vector<IndexedSentence> batch;
  batch.reserve(gold.size());
  for (const auto& s : gold) batch.push_back(index_sentence(s, config.templates, *index, *space));
  Objective objective(*space, *index, std::move(batch), config.l2_variance, config.threads);

  auto negated = [&](std::span<const double> w, std::span<double> g) {
    const double v = objective.evaluate(w, g);
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (!std::isfinite(g[k])) throw Error("non-finite gradient at parameter slot " + std::to_string(k));
      g[k] = -g[k];
    }
    if (!std::isfinite(v)) throw Error("non-finite objective");
    return -v;
  };

  TrainReport report;
  report.order = config.order;
  report.threads = config.threads;
  report.states = space->effective_states();
  report.parameters = objective.dimension();

  LbfgsOptions opt;
  opt.history = config.history;
  opt.max_iterations = config.max_iterations;
  opt.relative_tolerance = config.relative_tolerance;
  opt.relative_tolerance_gradient = config.relative_tolerance_gradient;

  std::vector<double> weights(objective.dimension(), 0.0);
  using clock = std::chrono::steady_clock;
  auto mark = clock::now();
  auto result = lbfgs_minimize(negated, weights, opt, [&](const LbfgsIteration& it) {
    const auto now = clock::now();
    report.iterations.push_back({it.iteration, -it.value, it.gradient_max_norm,
                                 std::chrono::duration<double>(now - mark).count(), it.evaluations});
    mark = clock::now();
  });
  report.termination = result.termination;
  {
    std::vector<double> g(weights.size());
    objective.evaluate(weights, g);
    report.final_gradient_max_norm = detail::max_norm(g);
  }

  return {Model(config.order, alphabet, config.templates, index->names(), std::move(weights), config.constrained_decode),
          std::move(report)};
}

struct TimingRow {
  ModelOrder order = ModelOrder::First;
  std::size_t states = 0;
  std::size_t parameters = 0;
  std::size_t measured_iterations = 0;
  double mean_seconds = 0;
};

struct TimingTable {
  std::size_t threads = 1;
  std::size_t warmup = 0;
  std::vector<TimingRow> rows;

  const TimingRow& row(ModelOrder o) const {
    for (const auto& r : rows) {
      if (r.order == o) return r;
    }
    throw Error("timing table has no row for order " + to_string(o));
  }

  double ratio(ModelOrder numerator, ModelOrder denominator) const {
    return row(numerator).mean_seconds / row(denominator).mean_seconds;
  }
};

/// Trains every config for warmup + measured iterations (no early exit on
/// the objective tolerance) and averages the wall time of the measured ones.
inline TimingTable measure_iteration_cost(const std::vector<Sentence>& corpus, const std::vector<TrainConfig>& configs,
                                          const LabelAlphabet& alphabet, std::size_t warmup = 2,
                                          std::size_t measured = 10) {
  if (configs.size() < 2) throw Error("timing comparison needs at least two configurations");
  if (measured < 3) throw Error("timing needs at least 3 measured iterations");
  for (const auto& c : configs) {
    if (c.templates != configs[0].templates || c.l2_variance != configs[0].l2_variance ||
        c.history != configs[0].history || c.threads != configs[0].threads) {
      throw Error("timing configurations may differ only in model order");
    }
  }
  TimingTable table;
  table.threads = configs[0].threads;
  table.warmup = warmup;
  for (auto c : configs) {
    c.max_iterations = warmup + measured;
    c.relative_tolerance = std::numeric_limits<double>::min();
    auto result = train(corpus, c, alphabet);
    const auto& r = result.report;
    if (r.total_iterations() < warmup + 3) {
      throw Error("order " + to_string(c.order) + " stopped after " + std::to_string(r.total_iterations()) +
                  " iterations; fewer than 3 measured");
    }
    table.rows.push_back({c.order, r.states, r.parameters, r.total_iterations() - warmup,
                          r.mean_seconds_per_iteration(warmup)});
  }
  return table;
}

inline void write_timing_table(std::ostream& out, const TimingTable& t) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "# threads=%zu warmup=%zu\n", t.threads, t.warmup);
  out << buf;
  std::snprintf(buf, sizeof buf, "%-12s %8s %12s %10s %14s\n", "order", "states", "parameters", "measured",
                "s/iteration");
  out << buf;
  for (const auto& r : t.rows) {
    std::snprintf(buf, sizeof buf, "%-12s %8zu %12zu %10zu %14.6f\n", to_string(r.order).c_str(), r.states,
                  r.parameters, r.measured_iterations, r.mean_seconds);
    out << buf;
  }
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t j = 0; j < t.rows.size(); ++j) {
      if (i == j) continue;
      std::snprintf(buf, sizeof buf, "ratio %s/%s = %.3f\n", to_string(t.rows[i].order).c_str(),
                    to_string(t.rows[j].order).c_str(), t.rows[i].mean_seconds / t.rows[j].mean_seconds);
      out << buf;
    }
  }
}

}  // namespace picrf
