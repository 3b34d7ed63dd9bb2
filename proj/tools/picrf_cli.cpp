// picrf: train, tag, evaluate and benchmark chain CRF taggers.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "picrf/picrf.hpp"

namespace {

using namespace picrf;

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<Sentence> read_corpus(const std::string& path, LabelColumn labels = LabelColumn::last()) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  try {
    return read_conll(in, 0, labels);
  } catch (const ParseError& e) {
    throw Error(path + ": " + e.what());
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

ModelOrder order_from(const std::string& s) {
  auto o = parse_order(s);
  if (!o) throw UsageError("unknown order '" + s + "' (expected first, second or pre-induced)");
  return *o;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string train_path, out_path, report_path, records_path;
  std::string order = "first";
  int features = 1;
  double l2_variance = 10.0;
  std::size_t max_iters = 500;
  double tol = 1e-6;
  double tol_grad = 1e-3;
  std::size_t threads = 1;
  std::size_t history = 7;
  std::size_t min_count = 0;
  bool constrained = false;
};

void add_train(CLI::App& app, TrainArgs& a) {
  auto* c = app.add_subcommand("train", "Train a model from a labeled CoNLL file");
  c->add_option("--train", a.train_path, "Training corpus (token first column, label last)")->required();
  c->add_option("--order", a.order, "first | second | pre-induced");
  c->add_option("--features", a.features, "Feature template set (1 or 2)")->check(CLI::IsMember({1, 2}));
  c->add_option("--l2-variance", a.l2_variance, "Gaussian prior variance")->check(CLI::PositiveNumber);
  c->add_option("--max-iters", a.max_iters, "Maximum optimizer iterations")->check(CLI::PositiveNumber);
  c->add_option("--tol", a.tol, "Relative objective tolerance")->check(CLI::PositiveNumber);
  c->add_option("--tol-grad", a.tol_grad, "Gradient max-norm below which --tol may stop training")
      ->check(CLI::PositiveNumber);
  c->add_option("--threads", a.threads, "Gradient worker threads")->check(CLI::PositiveNumber);
  c->add_option("--history", a.history, "Quasi-Newton history size")->check(CLI::PositiveNumber);
  c->add_option("--min-count", a.min_count, "Drop features seen fewer times");
  c->add_flag("--constrained", a.constrained, "Forbid impossible transitions when decoding");
  c->add_option("--out", a.out_path, "Model output path")->required();
  c->add_option("--report", a.report_path, "Plain-text training report");
  c->add_option("--records", a.records_path, "JSON-lines training records");
}

int run_train(const TrainArgs& a) {
  TrainConfig cfg;
  cfg.order = order_from(a.order);
  cfg.templates.set_id = a.features;
  cfg.templates.min_feature_count = a.min_count;
  cfg.l2_variance = a.l2_variance;
  cfg.max_iterations = a.max_iters;
  cfg.relative_tolerance = a.tol;
  cfg.relative_tolerance_gradient = a.tol_grad;
  cfg.threads = a.threads;
  cfg.history = a.history;
  cfg.constrained_decode = a.constrained;
  const auto corpus = read_corpus(a.train_path);
  auto result = train(corpus, cfg, alphabet_for(corpus));
  save_model(a.out_path, result.model);
  if (!a.report_path.empty()) {
    auto out = open_out(a.report_path);
    write_report_table(out, result.report);
  }
  if (!a.records_path.empty()) {
    auto out = open_out(a.records_path);
    write_report_records(out, result.report);
  }
  std::cerr << "trained " << to_string(cfg.order) << " model: " << result.report.states << " states, "
            << result.report.parameters << " parameters, " << result.report.total_iterations() << " iterations ("
            << to_string(result.report.termination) << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct TagArgs {
  std::string model, input, output;
};

void add_tag(CLI::App& app, TagArgs& a) {
  auto* c = app.add_subcommand("tag", "Decode a CoNLL file with a trained model");
  c->add_option("--model", a.model, "Model file")->required();
  c->add_option("--input", a.input, "Input CoNLL (labels optional)")->required();
  c->add_option("--output", a.output, "Output CoNLL: token [gold] predicted")->required();
}

// Reads a file whose label column may or may not be present.
std::vector<Sentence> read_maybe_labeled(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string line;
  bool labeled = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto cols = detail::split_columns(line);
    if (!cols.empty()) {
      labeled = cols.size() >= 2;
      break;
    }
  }
  return read_corpus(path, labeled ? LabelColumn::last() : LabelColumn::none());
}

int run_tag(const TagArgs& a) {
  const Model model = load_model(a.model);
  const auto corpus = read_maybe_labeled(a.input);
  const auto predicted = tag_corpus(model, corpus);
  auto out = open_out(a.output);
  write_conll(out, corpus, &predicted);
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string gold, pred, model, input, json;
  bool per_type = false;
};

void add_eval(CLI::App& app, EvalArgs& a) {
  auto* c = app.add_subcommand("eval", "Entity-level precision / recall / F1");
  auto* gold = c->add_option("--gold", a.gold, "Gold CoNLL (label in last column)");
  auto* pred = c->add_option("--pred", a.pred, "Predicted CoNLL (label in last column)");
  auto* model = c->add_option("--model", a.model, "Model to decode --input with");
  auto* input = c->add_option("--input", a.input, "Gold CoNLL to decode and score");
  gold->needs(pred);
  pred->needs(gold);
  model->needs(input);
  input->needs(model);
  gold->excludes(model);
  c->add_flag("--per-type", a.per_type, "Print one row per entity type");
  c->add_option("--json", a.json, "Also write the report as JSON");
}

int run_eval(const EvalArgs& a) {
  std::vector<Sentence> gold;
  std::vector<Labels> predicted;
  if (!a.gold.empty()) {
    gold = read_corpus(a.gold);
    for (const auto& s : read_corpus(a.pred)) predicted.push_back(s.labels);
  } else if (!a.model.empty()) {
    gold = read_corpus(a.input);
    predicted = tag_corpus(load_model(a.model), gold);
  } else {
    throw UsageError("eval needs --gold/--pred or --model/--input");
  }
  if (gold.size() != predicted.size()) {
    throw Error("gold has " + std::to_string(gold.size()) + " sentences but predictions have " +
                std::to_string(predicted.size()));
  }
  const auto rep = score(gold, predicted);
  write_score_table(std::cout, rep, a.per_type);
  if (!a.json.empty()) {
    auto out = open_out(a.json);
    out << to_json(rep).dump(2) << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct TransformArgs {
  std::string input, output, direction;
};

void add_transform(CLI::App& app, TransformArgs& a) {
  auto* c = app.add_subcommand("transform", "Apply or undo precursor induction on a labeled corpus");
  c->add_option("--input", a.input, "Input CoNLL")->required();
  c->add_option("--output", a.output, "Output CoNLL")->required();
  c->add_option("--direction", a.direction, "induce | revert")->required()->check(CLI::IsMember({"induce", "revert"}));
}

int run_transform(const TransformArgs& a) {
  auto corpus = read_corpus(a.input);
  std::vector<std::string> types;
  std::set<std::string> seen;
  for (const auto& s : corpus) {
    for (const auto& l : s.labels) {
      std::optional<std::string> t;
      if (auto c = parse_carrier(l)) {
        t = *c;
      } else if (auto tag = parse_tag(l); tag && tag->kind != TagKind::Outside) {
        t = tag->type;
      }
      if (t && seen.insert(*t).second) types.push_back(*t);
    }
  }
  if (!types.empty()) {
    const LabelAlphabet alphabet(types);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      try {
        corpus[i].labels =
            a.direction == "induce" ? induce(corpus[i].labels, alphabet) : revert(corpus[i].labels, alphabet);
      } catch (const LabelError& e) {
        throw Error("sentence " + std::to_string(i) + ": " + e.what());
      }
    }
  } else if (a.direction == "induce") {
    for (const auto& s : corpus) validate_iob2(s.labels, Iob2Mode::Strict);
  }
  auto out = open_out(a.output);
  write_conll(out, corpus);
  return 0;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::size_t types = 2, sentences = 2000, gap_min = 1, gap_max = 6, max_trailing = 2;
  std::size_t filler_vocab = 20, precursor_vocab = 5, shared_vocab = 10;
  std::string rule = "identity";
  std::uint64_t seed = 1;
};

void add_synth_options(CLI::App* c, SynthArgs& a) {
  c->add_option("--types", a.types, "Entity type count (>= 2)");
  c->add_option("--sentences", a.sentences, "Sentence count");
  c->add_option("--gap-min", a.gap_min, "Smallest gap between the two entities");
  c->add_option("--gap-max", a.gap_max, "Largest gap between the two entities");
  c->add_option("--max-trailing", a.max_trailing, "Largest number of trailing fillers");
  c->add_option("--filler-vocab", a.filler_vocab, "Filler vocabulary size");
  c->add_option("--precursor-vocab", a.precursor_vocab, "Per-type precursor vocabulary size");
  c->add_option("--shared-vocab", a.shared_vocab, "Shared dependent-entity vocabulary size");
  c->add_option("--rule", a.rule, "Dependency rule: identity | shift")->check(CLI::IsMember({"identity", "shift"}));
  c->add_option("--seed", a.seed, "Random seed");
}

SynthConfig synth_config(const SynthArgs& a) {
  SynthConfig c;
  c.entity_type_count = a.types;
  c.sentences = a.sentences;
  c.gap = GapDistribution::uniform(a.gap_min, a.gap_max);
  c.max_trailing = a.max_trailing;
  c.filler_vocab = a.filler_vocab;
  c.precursor_vocab = a.precursor_vocab;
  c.shared_vocab = a.shared_vocab;
  c.dependency_rule = a.rule == "shift" ? SynthConfig::shift_rule(a.types) : SynthConfig::identity_rule(a.types);
  c.seed = a.seed;
  return c;
}

struct SynthCmd {
  SynthArgs synth;
  std::string out;
};

void add_synth(CLI::App& app, SynthCmd& a) {
  auto* c = app.add_subcommand("synth", "Generate a synthetic long-distance corpus");
  add_synth_options(c, a.synth);
  c->add_option("--out", a.out, "Output CoNLL")->required();
}

int run_synth(const SynthCmd& a) {
  const auto corpus = generate_synthetic(synth_config(a.synth));
  auto out = open_out(a.out);
  write_conll(out, corpus);
  return 0;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  bool longdistance = false, timing = false, compare = false;
  SynthArgs synth;
  std::string train_path, test_path, json;
  std::size_t train_size = 2000, test_size = 500;
  std::size_t warmup = 2, iters = 10, threads = 1, max_iters = 500;
  std::vector<std::string> orders;
  std::vector<int> feature_sets{1};
  double l2_variance = 10.0;
  CLI::App* cmd = nullptr;

  bool given(const char* flag) const { return cmd->count(flag) > 0; }
};

void add_bench(CLI::App& app, BenchArgs& a) {
  auto* c = app.add_subcommand("bench", "Run the comparison, long-distance or timing experiments");
  a.cmd = c;
  auto* ld = c->add_flag("--longdistance", a.longdistance, "Synthetic long-distance experiment");
  auto* tm = c->add_flag("--timing", a.timing, "Per-iteration training time of each order");
  auto* cmp = c->add_flag("--compare", a.compare, "Train/test comparison grid (needs --train and --test)");
  ld->excludes(tm)->excludes(cmp);
  tm->excludes(cmp);
  add_synth_options(c, a.synth);
  c->add_option("--train", a.train_path, "Training corpus (compare; optional for timing)");
  c->add_option("--test", a.test_path, "Test corpus (compare)");
  c->add_option("--train-size", a.train_size, "Synthetic training sentences (longdistance)");
  c->add_option("--test-size", a.test_size, "Synthetic test sentences (longdistance)");
  c->add_option("--warmup", a.warmup, "Warm-up iterations excluded from timing");
  c->add_option("--iters", a.iters, "Measured iterations (timing)");
  c->add_option("--threads", a.threads, "Gradient worker threads")->check(CLI::PositiveNumber);
  c->add_option("--max-iters", a.max_iters, "Maximum optimizer iterations")->check(CLI::PositiveNumber);
  c->add_option("--l2-variance", a.l2_variance, "Gaussian prior variance")->check(CLI::PositiveNumber);
  c->add_option("--orders", a.orders, "Model orders to include");
  c->add_option("--feature-sets", a.feature_sets, "Feature sets to include")->check(CLI::IsMember({1, 2}));
  c->add_option("--json", a.json, "Also write the report as JSON");
}

std::vector<ModelOrder> orders_or(const std::vector<std::string>& given, std::vector<ModelOrder> fallback) {
  if (given.empty()) return fallback;
  std::vector<ModelOrder> out;
  for (const auto& s : given) out.push_back(order_from(s));
  return out;
}

int run_bench(BenchArgs a) {
  TrainConfig base;
  base.threads = a.threads;
  base.max_iterations = a.max_iters;
  base.l2_variance = a.l2_variance;
  base.templates.set_id = a.feature_sets.front();
  nlohmann::json json;

  if (a.longdistance) {
    LongDistanceConfig cfg;
    // Defaults: E = 2, gaps 2..6 (a radius-1 window must not span the gap), seed 7.
    if (!a.given("--gap-min")) a.synth.gap_min = 2;
    if (!a.given("--seed")) a.synth.seed = 7;
    cfg.synth = synth_config(a.synth);
    cfg.train_sentences = a.train_size;
    cfg.test_sentences = a.test_size;
    cfg.orders = orders_or(a.orders, {ModelOrder::First, ModelOrder::PreInduced, ModelOrder::Second});
    cfg.train = base;
    const auto rep = run_longdistance(cfg);
    write_longdistance_table(std::cout, rep);
    json = to_json(rep.experiment);
    json["chance_level"] = rep.chance_level;
    for (const auto& [o, acc] : rep.dependent_accuracy) json["dependent_accuracy"][to_string(o)] = acc;
  } else if (a.timing) {
    std::vector<Sentence> corpus;
    if (!a.train_path.empty()) {
      corpus = read_corpus(a.train_path);
    } else {
      if (!a.given("--types")) a.synth.types = 5;
      if (!a.given("--rule")) a.synth.rule = "shift";
      if (!a.given("--seed")) a.synth.seed = 11;
      corpus = generate_synthetic(synth_config(a.synth));
    }
    std::vector<TrainConfig> configs;
    for (auto o : orders_or(a.orders, {ModelOrder::First, ModelOrder::PreInduced, ModelOrder::Second})) {
      TrainConfig c = base;
      c.order = o;
      configs.push_back(c);
    }
    const auto table = measure_iteration_cost(corpus, configs, alphabet_for(corpus), a.warmup, a.iters);
    write_timing_table(std::cout, table);
    json["threads"] = table.threads;
    json["warmup"] = table.warmup;
    for (const auto& r : table.rows) {
      json["rows"].push_back({{"order", to_string(r.order)},
                              {"states", r.states},
                              {"parameters", r.parameters},
                              {"measured_iterations", r.measured_iterations},
                              {"seconds_per_iteration", r.mean_seconds}});
    }
  } else if (a.compare) {
    if (a.train_path.empty() || a.test_path.empty()) throw UsageError("--compare needs --train and --test");
    std::vector<GridCell> grid;
    for (int set : a.feature_sets) {
      for (auto o : orders_or(a.orders, {ModelOrder::First, ModelOrder::Second, ModelOrder::PreInduced})) {
        grid.push_back({o, set});
      }
    }
    const auto rep = run_comparison(read_corpus(a.train_path), read_corpus(a.test_path), grid, base, a.train_path,
                                    a.test_path);
    write_experiment_table(std::cout, rep);
    json = to_json(rep);
  } else {
    throw UsageError("bench needs one of --longdistance, --timing or --compare");
  }
  if (!a.json.empty()) {
    auto out = open_out(a.json);
    out << json.dump(2) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chain CRF sequence labeling with precursor-induced outside states"};
  app.require_subcommand(1);
  TrainArgs train_args;
  TagArgs tag_args;
  EvalArgs eval_args;
  TransformArgs transform_args;
  SynthCmd synth_args;
  BenchArgs bench_args;
  add_train(app, train_args);
  add_tag(app, tag_args);
  add_eval(app, eval_args);
  add_transform(app, transform_args);
  add_synth(app, synth_args);
  add_bench(app, bench_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (app.got_subcommand("train")) return run_train(train_args);
    if (app.got_subcommand("tag")) return run_tag(tag_args);
    if (app.got_subcommand("eval")) return run_eval(eval_args);
    if (app.got_subcommand("transform")) return run_transform(transform_args);
    if (app.got_subcommand("synth")) return run_synth(synth_args);
    if (app.got_subcommand("bench")) return run_bench(bench_args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
