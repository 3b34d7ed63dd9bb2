#pragma once

// Entity-level scoring and the comparison experiments.

#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "picrf/corpus.hpp"
#include "picrf/error.hpp"
#include "picrf/synthetic.hpp"
#include "picrf/training.hpp"

namespace picrf {

struct ChunkCounts {
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t correct = 0;

  double precision() const noexcept { return predicted ? static_cast<double>(correct) / predicted : 0.0; }
  double recall() const noexcept { return gold ? static_cast<double>(correct) / gold : 0.0; }
  double f1() const noexcept {
    const double p = precision(), r = recall();
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  }

  ChunkCounts& operator+=(const ChunkCounts& o) noexcept {
    gold += o.gold;
    predicted += o.predicted;
    correct += o.correct;
    return *this;
  }
};

struct ScoreReport {
  ChunkCounts overall;
  std::map<std::string, ChunkCounts> per_type;
};

/// Exact-span, exact-type chunk matching with micro-averaged totals. Both
/// sides are IOB2-repaired before chunking.
inline ScoreReport score(const std::vector<Sentence>& gold, const std::vector<Labels>& predicted) {
  if (gold.size() != predicted.size()) {
    throw Error("gold has " + std::to_string(gold.size()) + " sentences, predictions have " +
                std::to_string(predicted.size()));
  }
  ScoreReport rep;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].labels.size() != gold[i].size() || predicted[i].size() != gold[i].size()) {
      throw Error("sentence " + std::to_string(i) + ": gold and predicted labels do not align");
    }
    const auto g = extract_chunks(validate_iob2(gold[i].labels, Iob2Mode::Repair));
    const auto p = extract_chunks(validate_iob2(predicted[i], Iob2Mode::Repair));
    const std::set<Chunk> gs(g.begin(), g.end());
    for (const auto& c : g) ++rep.per_type[c.entity_type].gold;
    for (const auto& c : p) {
      auto& counts = rep.per_type[c.entity_type];
      ++counts.predicted;
      if (gs.count(c)) ++counts.correct;
    }
  }
  for (const auto& [type, c] : rep.per_type) rep.overall += c;
  return rep;
}

inline void write_score_table(std::ostream& out, const ScoreReport& r, bool per_type) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-16s %8s %8s %8s %8s %8s %8s\n", "type", "gold", "pred", "correct", "P", "R", "F1");
  out << buf;
  auto row = [&](const std::string& name, const ChunkCounts& c) {
    std::snprintf(buf, sizeof buf, "%-16s %8zu %8zu %8zu %8.4f %8.4f %8.4f\n", name.c_str(), c.gold, c.predicted,
                  c.correct, c.precision(), c.recall(), c.f1());
    out << buf;
  };
  if (per_type) {
    for (const auto& [type, c] : r.per_type) row(type, c);
  }
  row("overall", r.overall);
}

inline nlohmann::json to_json(const ChunkCounts& c) {
  return {{"gold", c.gold},           {"predicted", c.predicted}, {"correct", c.correct},
          {"precision", c.precision()}, {"recall", c.recall()},     {"f1", c.f1()}};
}

inline nlohmann::json to_json(const ScoreReport& r) {
  nlohmann::json types = nlohmann::json::object();
  for (const auto& [t, c] : r.per_type) types[t] = to_json(c);
  return {{"overall", to_json(r.overall)}, {"per_type", types}};
}

// ---------------------------------------------------------------------------
// Experiments

struct GridCell {
  ModelOrder order = ModelOrder::First;
  int feature_set = 1;
};

struct ExperimentRow {
  GridCell cell;
  ScoreReport score;
  double seconds_per_iteration = 0;
  std::size_t iterations = 0;
  Termination termination = Termination::MaxIterations;
  std::size_t states = 0;
};

struct ExperimentReport {
  std::string train_id;
  std::string test_id;
  TrainConfig config;
  std::vector<ExperimentRow> rows;

  const ExperimentRow& row(ModelOrder o, int set) const {
    for (const auto& r : rows) {
      if (r.cell.order == o && r.cell.feature_set == set) return r;
    }
    throw Error("experiment has no cell " + to_string(o) + "/set " + std::to_string(set));
  }
};

/// Decodes a corpus; pre-induced outputs come back reverted to base labels.
inline std::vector<Labels> tag_corpus(const Model& model, const std::vector<Sentence>& corpus) {
  std::vector<Labels> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) out.push_back(model.tag(s));
  return out;
}

/// Trains and scores every grid cell independently over a shared alphabet.
inline ExperimentReport run_comparison(const std::vector<Sentence>& train_corpus,
                                       const std::vector<Sentence>& test_corpus, const std::vector<GridCell>& grid,
                                       const TrainConfig& base, std::string train_id = "train",
                                       std::string test_id = "test") {
  if (grid.empty()) throw Error("experiment grid is empty");
  std::vector<Sentence> all = train_corpus;
  all.insert(all.end(), test_corpus.begin(), test_corpus.end());
  const LabelAlphabet alphabet = alphabet_for(all);

  ExperimentReport rep{std::move(train_id), std::move(test_id), base, {}};
  for (const auto& cell : grid) {
    TrainConfig c = base;
    c.order = cell.order;
    c.templates.set_id = cell.feature_set;
    try {
      auto trained = train(train_corpus, c, alphabet);
      ExperimentRow row;
      row.cell = cell;
      row.score = score(test_corpus, tag_corpus(trained.model, test_corpus));
      row.seconds_per_iteration = trained.report.mean_seconds_per_iteration();
      row.iterations = trained.report.total_iterations();
      row.termination = trained.report.termination;
      row.states = trained.report.states;
      rep.rows.push_back(std::move(row));
    } catch (const Error& e) {
      throw Error("cell " + to_string(cell.order) + "/set " + std::to_string(cell.feature_set) + ": " + e.what());
    }
  }
  return rep;
}

inline void write_experiment_table(std::ostream& out, const ExperimentReport& r) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "# train=%s test=%s l2_variance=%g max_iterations=%zu\n", r.train_id.c_str(),
                r.test_id.c_str(), r.config.l2_variance, r.config.max_iterations);
  out << buf;
  std::snprintf(buf, sizeof buf, "%-5s %-12s %7s %8s %8s %8s %6s %12s\n", "set", "order", "states", "P", "R", "F1",
                "iters", "s/iteration");
  out << buf;
  for (const auto& row : r.rows) {
    const auto& c = row.score.overall;
    std::snprintf(buf, sizeof buf, "%-5d %-12s %7zu %8.2f %8.2f %8.2f %6zu %12.6f\n", row.cell.feature_set,
                  to_string(row.cell.order).c_str(), row.states, 100 * c.precision(), 100 * c.recall(),
                  100 * c.f1(), row.iterations, row.seconds_per_iteration);
    out << buf;
  }
}

inline nlohmann::json to_json(const ExperimentReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"order", to_string(row.cell.order)},
                    {"feature_set", row.cell.feature_set},
                    {"states", row.states},
                    {"score", to_json(row.score)},
                    {"seconds_per_iteration", row.seconds_per_iteration},
                    {"iterations", row.iterations},
                    {"termination", to_string(row.termination)}});
  }
  return {{"train", r.train_id},
          {"test", r.test_id},
          {"l2_variance", r.config.l2_variance},
          {"max_iterations", r.config.max_iterations},
          {"rows", rows}};
}

// ---------------------------------------------------------------------------
// Long-distance experiment on synthetic data

struct LongDistanceConfig {
  SynthConfig synth;
  std::size_t train_sentences = 2000;
  std::size_t test_sentences = 500;
  std::vector<ModelOrder> orders{ModelOrder::First, ModelOrder::PreInduced};
  TrainConfig train;
};

struct LongDistanceReport {
  ExperimentReport experiment;
  std::map<ModelOrder, double> dependent_accuracy;
  double chance_level = 0;
};

/// Fraction of dependent entities (the second chunk of each gold sentence)
/// whose predicted label carries the gold type.
inline double dependent_entity_accuracy(const std::vector<Sentence>& gold, const std::vector<Labels>& predicted) {
  std::size_t total = 0, hit = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto chunks = extract_chunks(gold[i].labels);
    if (chunks.size() < 2) continue;
    const auto& dep = chunks[1];
    ++total;
    auto tag = parse_tag(predicted[i][dep.start]);
    if (tag && tag->kind != TagKind::Outside && tag->type == dep.entity_type) ++hit;
  }
  return total ? static_cast<double>(hit) / total : 0.0;
}

inline LongDistanceReport run_longdistance(const LongDistanceConfig& config) {
  const auto radius = static_cast<std::size_t>(config.train.templates.window_radius());
  if (radius >= config.synth.gap.min_value()) {
    throw Error("window radius " + std::to_string(radius) + " reaches across the minimum gap " +
                std::to_string(config.synth.gap.min_value()) + "; observations would leak the precursor");
  }
  if (config.train_sentences == 0 || config.test_sentences == 0) throw Error("train and test sizes must be positive");
  SynthConfig sc = config.synth;
  sc.sentences = config.train_sentences + config.test_sentences;
  auto corpus = generate_synthetic(sc);
  std::vector<Sentence> train_set(corpus.begin(), corpus.begin() + static_cast<long>(config.train_sentences));
  std::vector<Sentence> test_set(corpus.begin() + static_cast<long>(config.train_sentences), corpus.end());

  LongDistanceReport rep;
  rep.chance_level = dependent_type_chance_level(sc);
  rep.experiment.train_id = "synthetic-train(seed=" + std::to_string(sc.seed) + ")";
  rep.experiment.test_id = "synthetic-test(seed=" + std::to_string(sc.seed) + ")";
  rep.experiment.config = config.train;
  const LabelAlphabet alphabet = alphabet_for(corpus);
  for (auto order : config.orders) {
    TrainConfig c = config.train;
    c.order = order;
    auto trained = train(train_set, c, alphabet);
    const auto predicted = tag_corpus(trained.model, test_set);
    ExperimentRow row;
    row.cell = {order, c.templates.set_id};
    row.score = score(test_set, predicted);
    row.seconds_per_iteration = trained.report.mean_seconds_per_iteration();
    row.iterations = trained.report.total_iterations();
    row.termination = trained.report.termination;
    row.states = trained.report.states;
    rep.experiment.rows.push_back(std::move(row));
    rep.dependent_accuracy[order] = dependent_entity_accuracy(test_set, predicted);
  }
  return rep;
}

inline void write_longdistance_table(std::ostream& out, const LongDistanceReport& r) {
  write_experiment_table(out, r.experiment);
  char buf[160];
  std::snprintf(buf, sizeof buf, "# dependent-entity type accuracy (chance level %.4f)\n", r.chance_level);
  out << buf;
  for (const auto& [order, acc] : r.dependent_accuracy) {
    std::snprintf(buf, sizeof buf, "%-12s %8.4f\n", to_string(order).c_str(), acc);
    out << buf;
  }
}

}  // namespace picrf
