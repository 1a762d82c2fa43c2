#include <gtest/gtest.h>

#include <cmath>

#include "oracles/bleu_oracle.hpp"
#include "wmtkit/metrics.hpp"
#include "wmtkit/random.hpp"

using namespace wmtkit;
using metrics::Corpus;
using text::Sentence;

namespace {

Sentence ws(const std::string& s) { return text::tokenize(s, text::TokenizeMode::whitespace); }

Corpus corpus(const std::vector<std::string>& lines) {
  Corpus c;
  for (const auto& l : lines) c.push_back(ws(l));
  return c;
}

std::string random_line(rng::Engine& e, std::size_t vocab, std::size_t max_len) {
  std::string s;
  const auto n = rng::uniform_index(e, max_len + 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += "w" + std::to_string(rng::uniform_index(e, vocab));
  }
  return s;
}

}  // namespace

TEST(Bleu, IdenticalIsHundred) {
  const auto c = corpus({"the cat sat on the mat", "a dog barks loudly at night"});
  const auto r = metrics::corpus_bleu(c, c);
  EXPECT_DOUBLE_EQ(r.score, 100.0);
  EXPECT_DOUBLE_EQ(r.brevity_penalty, 1.0);
}

TEST(Bleu, DisjointIsZero) {
  EXPECT_DOUBLE_EQ(metrics::corpus_bleu(corpus({"a b c d"}), corpus({"e f g h"})).score, 0.0);
}

TEST(Bleu, DerivedSingleSentenceCase) {
  const auto r = metrics::corpus_bleu(corpus({"the cat sat on the mat"}), corpus({"the cat is on the mat"}));
  EXPECT_EQ(r.matches, (std::vector<std::size_t>{5, 3, 1, 0}));
  EXPECT_EQ(r.totals, (std::vector<std::size_t>{6, 5, 4, 3}));
  EXPECT_DOUBLE_EQ(r.score, 0.0);
  metrics::BleuOptions smooth;
  smooth.smoothing = metrics::Smoothing::add_one;
  const double expected = 100.0 * std::exp((std::log(5.0 / 6) + std::log(4.0 / 6) + std::log(2.0 / 5) +
                                            std::log(1.0 / 4)) / 4.0);
  EXPECT_NEAR(metrics::corpus_bleu(corpus({"the cat sat on the mat"}), corpus({"the cat is on the mat"}), smooth).score,
              expected, 1e-9);
}

TEST(Bleu, BrevityPenaltyShortHypothesis) {
  const auto r = metrics::corpus_bleu(corpus({"a b c d"}), corpus({"a b c d e f g h"}));
  EXPECT_NEAR(r.brevity_penalty, std::exp(1.0 - 8.0 / 4.0), 1e-12);
  EXPECT_NEAR(r.score, 100.0 * std::exp(-1.0), 1e-9);
}

TEST(Bleu, ClosestReferenceLength) {
  const std::vector<Sentence> hyps = {ws("a b c d e")};
  const std::vector<std::vector<Sentence>> refs = {{ws("a b c d e f g h i j"), ws("a b c d e f")}};
  const auto r = metrics::corpus_bleu(hyps, std::span<const std::vector<Sentence>>(refs));
  EXPECT_EQ(r.ref_len, 6u);
}

TEST(Bleu, ClipsRepeatedNgrams) {
  const auto r = metrics::corpus_bleu(corpus({"the the the the"}), corpus({"the cat"}));
  EXPECT_EQ(r.matches[0], 1u);
  EXPECT_EQ(r.totals[0], 4u);
}

TEST(Bleu, CaseInsensitiveOption) {
  metrics::BleuOptions o;
  o.case_sensitive = false;
  EXPECT_DOUBLE_EQ(metrics::corpus_bleu(corpus({"The Cat Sat On"}), corpus({"the cat sat on"}), o).score, 100.0);
  EXPECT_LT(metrics::corpus_bleu(corpus({"The Cat Sat On"}), corpus({"the cat sat on"})).score, 100.0);
}

TEST(Bleu, RejectsBadInput) {
  EXPECT_THROW(metrics::corpus_bleu(Corpus{}, Corpus{}), std::invalid_argument);
  EXPECT_THROW(metrics::corpus_bleu(corpus({"a"}), corpus({"a", "b"})), std::invalid_argument);
}

TEST(BleuProperty, MatchesReferenceImplementation) {
  rng::Engine e(21);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng::uniform_index(e, 6);
    const std::size_t nrefs = 1 + rng::uniform_index(e, 3);
    std::vector<std::string> hyp_lines;
    std::vector<std::vector<std::string>> ref_lines(n);
    std::vector<Sentence> hyps;
    std::vector<std::vector<Sentence>> refs(n);
    for (std::size_t i = 0; i < n; ++i) {
      hyp_lines.push_back(random_line(e, 5, 12));
      hyps.push_back(ws(hyp_lines.back()));
      for (std::size_t r = 0; r < nrefs; ++r) {
        ref_lines[i].push_back(random_line(e, 5, 12));
        refs[i].push_back(ws(ref_lines[i].back()));
      }
    }
    const auto expected = oracle::bleu(hyp_lines, ref_lines);
    const auto got = metrics::corpus_bleu(hyps, std::span<const std::vector<Sentence>>(refs));
    EXPECT_NEAR(got.score, expected.score, 1e-9);
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_EQ(got.matches[k], static_cast<std::size_t>(expected.matches[k]));
      EXPECT_EQ(got.totals[k], static_cast<std::size_t>(expected.totals[k]));
    }
    EXPECT_GE(got.score, 0.0);
    EXPECT_LE(got.score, 100.0);
  }
}

TEST(SelfBleu, PairIsSymmetric) {
  rng::Engine e(22);
  for (int trial = 0; trial < 50; ++trial) {
    Corpus a, b;
    for (int i = 0; i < 5; ++i) {
      a.push_back(ws(random_line(e, 6, 10)));
      b.push_back(ws(random_line(e, 6, 10)));
    }
    EXPECT_DOUBLE_EQ(metrics::self_bleu_pair(a, b), metrics::self_bleu_pair(b, a));
  }
}

TEST(SelfBleu, MatrixIsValidAndThreadIndependent) {
  rng::Engine e(23);
  std::vector<Corpus> systems(5);
  std::vector<std::string> ids;
  for (std::size_t m = 0; m < systems.size(); ++m) {
    ids.push_back("m" + std::to_string(m));
    for (int i = 0; i < 8; ++i) systems[m].push_back(ws(random_line(e, 4, 9)));
  }
  const auto serial = metrics::self_bleu_matrix(ids, systems, {}, 1);
  EXPECT_NO_THROW(serial.validate());
  for (unsigned t : {2u, 4u, 0u}) {
    EXPECT_EQ(metrics::self_bleu_matrix(ids, systems, {}, t).values, serial.values);
  }
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_DOUBLE_EQ(serial.at(i, i), 100.0);
    for (std::size_t j = 0; j < 5; ++j) {
      if (i != j) EXPECT_DOUBLE_EQ(serial.at(i, j), metrics::self_bleu_pair(systems[i], systems[j]));
    }
  }
}

TEST(SelfBleu, AverageExcludesDiagonal) {
  metrics::SelfBleuMatrix m;
  m.model_ids = {"a", "b", "c"};
  m.values = {100, 90, 60, 90, 100, 60, 60, 60, 100};
  EXPECT_NO_THROW(m.validate());
  EXPECT_EQ(metrics::avg_self_bleu(m), (std::vector<double>{75, 75, 60}));
  m.at(0, 1) = 80;
  EXPECT_THROW(m.validate(), std::invalid_argument);
}

TEST(SelfBleu, MultiReferenceUsesAllOthers) {
  const std::vector<Corpus> systems = {corpus({"a b c d"}), corpus({"a b c d"}), corpus({"e f g h"})};
  EXPECT_DOUBLE_EQ(metrics::self_bleu_multi_ref(systems, 0), 100.0);
  EXPECT_DOUBLE_EQ(metrics::self_bleu_multi_ref(systems, 2), 0.0);
}
