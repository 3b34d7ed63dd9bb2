#include <gtest/gtest.h>

#include "picrf/corpus.hpp"
#include "picrf/synthetic.hpp"

namespace picrf {
namespace {

SynthConfig small(std::uint64_t seed) {
  SynthConfig c;
  c.entity_type_count = 2;
  c.dependency_rule = SynthConfig::identity_rule(2);
  c.sentences = 1;
  c.seed = seed;
  return c;
}

TEST(GenerateSynthetic, IdentityRuleCopiesPrecursorType) {
  auto corpus = generate_synthetic(small(1));
  ASSERT_EQ(corpus.size(), 1u);
  auto chunks = extract_chunks(corpus[0].labels);
  ASSERT_EQ(chunks.size(), 2u);
  EXPECT_EQ(chunks[0].entity_type, chunks[1].entity_type);
}

TEST(GenerateSynthetic, SeedChangesTokensButNotSchema) {
  auto c = small(1);
  c.sentences = 50;
  auto a = generate_synthetic(c);
  c.seed = 2;
  auto b = generate_synthetic(c);
  EXPECT_NE(a, b);
  for (const auto* corpus : {&a, &b}) {
    for (const auto& s : *corpus) {
      auto chunks = extract_chunks(s.labels);
      ASSERT_EQ(chunks.size(), 2u);
      EXPECT_EQ(chunks[0].start, 0u);
      EXPECT_EQ(chunks[0].end, 1u);
      EXPECT_EQ(chunks[1].end, chunks[1].start + 1);
      EXPECT_EQ(chunks[0].entity_type, chunks[1].entity_type);
    }
  }
}

TEST(GenerateSynthetic, BitIdenticalForEqualSeeds) {
  auto c = small(99);
  c.sentences = 300;
  c.entity_type_count = 4;
  c.dependency_rule = SynthConfig::shift_rule(4);
  EXPECT_EQ(generate_synthetic(c), generate_synthetic(c));
}

TEST(GenerateSynthetic, GapMeanMatchesUniformOneToSix) {
  auto c = small(5);
  c.sentences = 10000;
  auto corpus = generate_synthetic(c);
  double sum = 0;
  for (const auto& s : corpus) {
    auto chunks = extract_chunks(s.labels);
    sum += static_cast<double>(chunks[1].start - chunks[0].end);
  }
  EXPECT_NEAR(sum / 10000.0, 3.5, 0.1);
  EXPECT_DOUBLE_EQ(c.gap.mean(), 3.5);
}

TEST(GenerateSynthetic, RuleIsApplied) {
  SynthConfig c;
  c.entity_type_count = 3;
  c.dependency_rule = {2, 0, 1};
  c.sentences = 200;
  for (const auto& s : generate_synthetic(c)) {
    auto chunks = extract_chunks(s.labels);
    const std::size_t first = static_cast<std::size_t>(chunks[0].entity_type[0] - 'A');
    EXPECT_EQ(chunks[1].entity_type, synthetic_type_name(c.dependency_rule[first]));
  }
}

// The dependent entity and its radius-1 neighbours come from vocabularies
// that carry no type information: the dependent token is always from the
// shared vocabulary and its neighbours are fillers or the end sentinel.
TEST(GenerateSynthetic, DependentEntityWindowIsTypeFree) {
  SynthConfig c;
  c.entity_type_count = 3;
  c.gap = GapDistribution::uniform(2, 6);
  c.sentences = 2000;
  const auto vocab = synthetic_vocabulary(c);
  for (std::size_t t = 0; t < c.entity_type_count; ++t) {
    for (const auto& w : vocab.precursors[t]) {
      EXPECT_FALSE(vocab.fillers.count(w));
      EXPECT_FALSE(vocab.shared.count(w));
      for (std::size_t u = t + 1; u < c.entity_type_count; ++u) EXPECT_FALSE(vocab.precursors[u].count(w));
    }
  }
  for (const auto& w : vocab.shared) EXPECT_FALSE(vocab.fillers.count(w));
  for (const auto& s : generate_synthetic(c)) {
    const auto dep = extract_chunks(s.labels)[1].start;
    EXPECT_TRUE(vocab.shared.count(s.tokens[dep].text));
    EXPECT_TRUE(vocab.fillers.count(s.tokens[dep - 1].text));
    if (dep + 1 < s.size()) {
      EXPECT_TRUE(vocab.fillers.count(s.tokens[dep + 1].text));
    }
  }
}

TEST(GenerateSynthetic, RejectsInvalidConfigs) {
  auto c = small(1);
  c.entity_type_count = 1;
  c.dependency_rule.clear();
  EXPECT_THROW(generate_synthetic(c), Error);
  c = small(1);
  c.dependency_rule = {0, 0};
  EXPECT_THROW(generate_synthetic(c), Error);
  EXPECT_THROW(GapDistribution::uniform(0, 3), Error);
}

TEST(ChanceLevel, BijectiveRuleGivesOneOverE) {
  SynthConfig c;
  c.entity_type_count = 2;
  EXPECT_DOUBLE_EQ(dependent_type_chance_level(c), 0.5);
  c.entity_type_count = 5;
  c.dependency_rule = SynthConfig::shift_rule(5);
  EXPECT_DOUBLE_EQ(dependent_type_chance_level(c), 0.2);
}

}  // namespace
}  // namespace picrf
