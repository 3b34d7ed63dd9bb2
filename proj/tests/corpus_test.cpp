#include <gtest/gtest.h>

#include <random>

#include "picrf/corpus.hpp"

namespace picrf {
namespace {

TEST(ReadConll, SingleSentenceWithTrailingBlankLine) {
  auto s = read_conll_string("IL-2\tB-protein\ngene\tI-protein\n\n");
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].tokens, (std::vector<Token>{{"IL-2"}, {"gene"}}));
  EXPECT_EQ(s[0].labels, (Labels{"B-protein", "I-protein"}));
}

TEST(ReadConll, EmptyInputIsEmptyCorpus) { EXPECT_TRUE(read_conll_string("").empty()); }

TEST(ReadConll, MixedSeparatorsAndMissingFinalBlankLine) {
  const std::string text =
      "The DT O\n"
      "IL-2\tNN\tB-protein\n"
      "gene  NN\tI-protein\n"
      "\n"
      "\n"
      "cells NNS   B-cell_type\n"
      "\r\n"
      "x\tSYM O\r\n"
      "y Z\tB-DNA";
  auto s = read_conll_string(text);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].tokens, (std::vector<Token>{{"The"}, {"IL-2"}, {"gene"}}));
  EXPECT_EQ(s[0].labels, (Labels{"O", "B-protein", "I-protein"}));
  EXPECT_EQ(s[1].tokens, (std::vector<Token>{{"cells"}}));
  EXPECT_EQ(s[1].labels, (Labels{"B-cell_type"}));
  EXPECT_EQ(s[2].tokens, (std::vector<Token>{{"x"}, {"y"}}));
  EXPECT_EQ(s[2].labels, (Labels{"O", "B-DNA"}));
}

TEST(ReadConll, ExplicitColumns) {
  auto s = read_conll_string("a X B-t\nb Y O\n", 1, LabelColumn::at(0));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].tokens, (std::vector<Token>{{"X"}, {"Y"}}));
  EXPECT_EQ(s[0].labels, (Labels{"a", "b"}));
  auto unl = read_conll_string("a\nb\n", 0, LabelColumn::none());
  ASSERT_EQ(unl.size(), 1u);
  EXPECT_FALSE(unl[0].has_labels());
}

TEST(ReadConll, TooFewColumnsNamesTheLine) {
  try {
    read_conll_string("a O\nb O\nlonely\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_THROW(read_conll_string("a b\n", 0, LabelColumn::at(4)), ParseError);
}

TEST(ValidateIob2, RepairsOrphanInside) {
  EXPECT_EQ(validate_iob2({"O", "I-test"}, Iob2Mode::Repair), (Labels{"O", "B-test"}));
  EXPECT_EQ(validate_iob2({"B-test", "I-drug"}, Iob2Mode::Repair), (Labels{"B-test", "B-drug"}));
  EXPECT_EQ(validate_iob2({"I-a", "I-a", "O", "I-a"}, Iob2Mode::Repair), (Labels{"B-a", "I-a", "O", "B-a"}));
}

TEST(ValidateIob2, StrictAcceptsWellFormedAndRejectsOrphans) {
  const Labels ok{"B-test", "I-test", "O"};
  EXPECT_EQ(validate_iob2(ok, Iob2Mode::Strict), ok);
  EXPECT_THROW(validate_iob2({"O", "I-test"}, Iob2Mode::Strict), LabelError);
  EXPECT_THROW(validate_iob2({"B-test", "I-drug"}, Iob2Mode::Strict), LabelError);
}

TEST(ValidateIob2, UnknownLabelsFailInBothModes) {
  for (auto mode : {Iob2Mode::Strict, Iob2Mode::Repair}) {
    EXPECT_THROW(validate_iob2({"O", "X-foo"}, mode), LabelError);
    EXPECT_THROW(validate_iob2({"B-"}, mode), LabelError);
    EXPECT_THROW(validate_iob2({"o"}, mode), LabelError);
    const std::set<std::string> types{"test"};
    EXPECT_THROW(validate_iob2({"B-drug"}, mode, &types), LabelError);
  }
}

TEST(ExtractChunks, Definitions) {
  EXPECT_EQ(extract_chunks({"B-A", "I-A", "O", "B-B"}), (std::vector<Chunk>{{"A", 0, 2}, {"B", 3, 4}}));
  EXPECT_TRUE(extract_chunks({"O", "O", "O"}).empty());
  EXPECT_EQ(extract_chunks({"B-A", "B-A"}), (std::vector<Chunk>{{"A", 0, 1}, {"A", 1, 2}}));
  EXPECT_THROW(extract_chunks({"I-A"}), LabelError);
}

TEST(WriteConll, Columns) {
  std::vector<Sentence> s{{{{"a"}, {"b"}}, {"B-X", "O"}}};
  std::vector<Labels> pred{{"O", "O"}};
  EXPECT_EQ(write_conll_string(s, &pred), "a\tB-X\tO\nb\tO\tO\n\n");
  EXPECT_EQ(write_conll_string({}), "");
}

TEST(WriteConll, MisalignedPredictionNamesSentence) {
  std::vector<Sentence> s{{{{"a"}}, {"O"}}, {{{"b"}, {"c"}}, {"O", "O"}}};
  std::vector<Labels> pred{{"O"}, {"O"}};
  try {
    write_conll_string(s, &pred);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("sentence 1"), std::string::npos);
  }
}

// Random well-formed corpora survive write -> read unchanged, and chunking
// agrees before and after a (no-op) repair.
TEST(CorpusProperties, RoundTripAndRepairAgreement) {
  std::mt19937_64 rng(3);
  const std::vector<std::string> types{"A", "gene", "cell_line"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Sentence> corpus(1 + rng() % 4);
    for (auto& s : corpus) {
      const std::size_t n = 1 + rng() % 12;
      std::string open;
      for (std::size_t i = 0; i < n; ++i) {
        s.tokens.push_back({"tok" + std::to_string(rng() % 50)});
        const auto r = rng() % 3;
        if (r == 0 || (r == 2 && open.empty())) {
          s.labels.emplace_back("O");
          open.clear();
        } else if (r == 1) {
          open = types[rng() % types.size()];
          s.labels.push_back("B-" + open);
        } else {
          s.labels.push_back("I-" + open);
        }
      }
    }
    EXPECT_EQ(read_conll_string(write_conll_string(corpus)), corpus);
    for (const auto& s : corpus) {
      EXPECT_EQ(extract_chunks(s.labels), extract_chunks(validate_iob2(s.labels, Iob2Mode::Repair)));
    }
  }
}

}  // namespace
}  // namespace picrf
