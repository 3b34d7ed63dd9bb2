#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "picrf/objective.hpp"

namespace picrf {
namespace {

using testing::Problem;

constexpr double kInf = std::numeric_limits<double>::infinity();

TemplateConfig bias_only() {
  TemplateConfig tc;
  tc.window_offsets.clear();
  tc.use_normalized = false;
  return tc;
}

TEST(Objective, FiniteDifferencesEveryOrder) {
  for (auto order : {ModelOrder::First, ModelOrder::PreInduced, ModelOrder::Second}) {
    std::mt19937_64 rng(31);
    const std::vector<std::string> types{"A", "B", "C"};
    const auto corpus = testing::random_corpus(rng, 5, types, 7);
    Problem p(corpus, LabelAlphabet(types), order, TemplateConfig::set(2));
    Objective obj(p.space, p.index, p.batch, 10.0);
    const auto w = testing::random_weights(rng, p.dimension());
    EXPECT_LE(testing::finite_difference_check(obj, w, rng, 60), 1e-4) << to_string(order);
  }
}

TEST(Objective, ZeroWeightsClosedForm) {
  Sentence s;
  s.tokens = {{"a"}, {"b"}, {"c"}, {"d"}};
  s.labels = {"B-A", "I-A", "O", "O"};
  const LabelAlphabet alphabet({"A"});
  for (auto order : {ModelOrder::First, ModelOrder::PreInduced}) {
    Problem p({s}, alphabet, order, bias_only());
    ASSERT_EQ(p.index.feature_count(), 1u);
    const double S = static_cast<double>(p.space.lattice_states());
    const std::vector<double> w(p.dimension(), 0.0);
    auto [value, grad] = log_likelihood_and_gradient(p.batch, w, p.index, p.space, kInf);
    EXPECT_NEAR(value, -4 * std::log(S), 1e-12);
    // Fine BIAS slot of a label: occurrences on the gold path minus T/S.
    const auto& gold = p.batch[0].gold;
    for (std::size_t l = 0; l < p.space.lattice_states(); ++l) {
      const double occurrences = static_cast<double>(std::count(gold.begin(), gold.end(), l));
      EXPECT_NEAR(grad[l], occurrences - 4 / S, 1e-12);
    }
    if (order == ModelOrder::PreInduced) {
      // Coarse slot: O and A[O] are tied; the gold path holds two of them.
      EXPECT_NEAR(grad[p.index.layout().label_count], 2 - 4 * 2 / S, 1e-12);
    }
  }
}

TEST(Objective, SingleOccurrenceBiasGradient) {
  Sentence s;
  s.tokens = {{"x"}};
  s.labels = {"B-A"};
  Problem p({s}, LabelAlphabet({"A"}), ModelOrder::First, bias_only());
  const std::vector<double> w(p.dimension(), 0.0);
  auto [value, grad] = log_likelihood_and_gradient(p.batch, w, p.index, p.space, kInf);
  EXPECT_NEAR(grad[0], 1 - 1.0 / 3, 1e-15);
  EXPECT_NEAR(value, -std::log(3.0), 1e-15);
}

TEST(Objective, UnboundedVarianceDropsPenalty) {
  std::mt19937_64 rng(8);
  const std::vector<std::string> types{"A", "B"};
  const auto corpus = testing::random_corpus(rng, 6, types);
  Problem p(corpus, LabelAlphabet(types), ModelOrder::PreInduced, TemplateConfig::set(1));
  const auto w = testing::random_weights(rng, p.dimension());
  double unpenalized = 0;
  for (const auto& inst : p.batch) {
    const auto lat = build_lattice(inst.features, w, p.index, p.space);
    unpenalized += lat.path_score(inst.gold) - forward_backward(lat).log_z;
  }
  const double sq = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
  auto [v_inf, g_inf] = log_likelihood_and_gradient(p.batch, w, p.index, p.space, kInf);
  auto [v_big, g_big] = log_likelihood_and_gradient(p.batch, w, p.index, p.space, 1e12);
  auto [v_ten, g_ten] = log_likelihood_and_gradient(p.batch, w, p.index, p.space, 10.0);
  EXPECT_NEAR(v_inf, unpenalized, 1e-9);
  EXPECT_NEAR(v_big, unpenalized, 1e-9);
  EXPECT_NEAR(v_ten, unpenalized - sq / 20, 1e-9);
  for (std::size_t k = 0; k < w.size(); ++k) EXPECT_NEAR(g_ten[k], g_inf[k] - w[k] / 10, 1e-12);
}

TEST(Objective, ThreadedReductionIsDeterministic) {
  std::mt19937_64 rng(12);
  const std::vector<std::string> types{"A", "B", "C"};
  const auto corpus = testing::random_corpus(rng, 40, types);
  Problem p(corpus, LabelAlphabet(types), ModelOrder::Second, TemplateConfig::set(2));
  const auto w = testing::random_weights(rng, p.dimension());
  Objective serial(p.space, p.index, p.batch, 10.0, 1);
  Objective threaded(p.space, p.index, p.batch, 10.0, 3);
  std::vector<double> g1(w.size()), g2(w.size()), g3(w.size());
  const double v1 = serial.evaluate(w, g1);
  const double v2 = threaded.evaluate(w, g2);
  const double v3 = threaded.evaluate(w, g3);
  EXPECT_EQ(v2, v3);
  EXPECT_EQ(g2, g3);
  EXPECT_NEAR(v1, v2, 1e-9);
  for (std::size_t k = 0; k < w.size(); ++k) EXPECT_NEAR(g1[k], g2[k], 1e-9);
}

TEST(Objective, Errors) {
  std::mt19937_64 rng(1);
  const std::vector<std::string> types{"A"};
  const auto corpus = testing::random_corpus(rng, 3, types);
  Problem p(corpus, LabelAlphabet(types), ModelOrder::First, TemplateConfig::set(1));
  std::vector<double> w(p.dimension() - 1, 0.0);
  EXPECT_THROW(build_lattice(p.batch[0].features, w, p.index, p.space), Error);
  EXPECT_THROW(log_likelihood_and_gradient(p.batch, w, p.index, p.space, 1.0), Error);
  EXPECT_THROW(Objective(p.space, p.index, p.batch, 0.0), Error);

  Sentence bad;
  bad.tokens = {{"x"}};
  bad.labels = {"B-Z"};
  EXPECT_THROW(index_sentence(bad, p.templates, p.index, p.space), LabelError);
}

TEST(Lattice, ZeroWeightsUniform) {
  std::mt19937_64 rng(3);
  const std::vector<std::string> types{"A", "B"};
  const auto corpus = testing::random_corpus(rng, 4, types);
  for (auto order : {ModelOrder::First, ModelOrder::PreInduced}) {
    Problem p(corpus, LabelAlphabet(types), order, TemplateConfig::set(1));
    const std::vector<double> w(p.dimension(), 0.0);
    for (const auto& inst : p.batch) {
      const auto lat = build_lattice(inst.features, w, p.index, p.space);
      const double T = static_cast<double>(inst.features.size());
      EXPECT_NEAR(forward_backward(lat).log_z, T * std::log(static_cast<double>(p.space.lattice_states())), 1e-9);
    }
  }
}

TEST(Lattice, PreInducedTyingSharesCoarseWeight) {
  Sentence s;
  s.tokens = {{"x"}};
  s.labels = {"O"};
  const LabelAlphabet a({"A", "B"});
  Problem p({s}, a, ModelOrder::PreInduced, bias_only());
  std::vector<double> w(p.dimension(), 0.0);
  w[p.index.layout().label_count] = 1.5;  // coarse BIAS
  const auto lat = build_lattice(p.batch[0].features, w, p.index, p.space);
  for (std::size_t st = 0; st < p.space.lattice_states(); ++st) {
    EXPECT_EQ(lat.node_at(0, st), a.in_outside_class(st) ? 1.5 : 0.0) << a.label(st);
  }
}

}  // namespace
}  // namespace picrf
