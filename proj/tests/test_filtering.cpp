#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "wmtkit/filtering.hpp"
#include "wmtkit/ngram_lm.hpp"
#include "wmtkit/random.hpp"

using namespace wmtkit;
using filter::FilterRuleSet;
using text::ParallelPair;
using text::Sentence;
using Reasons = std::vector<std::string>;

namespace {

std::vector<ParallelPair> load_fixture() {
  std::ifstream in(std::string(WMTKIT_FIXTURES) + "/filter_en_zh.tsv", std::ios::binary);
  std::vector<ParallelPair> pairs;
  for (const auto& line : text::read_lines(in)) {
    const auto tab = line.find('\t');
    pairs.push_back(filter::make_pair(line.substr(0, tab), line.substr(tab + 1)));
  }
  return pairs;
}

Sentence words(const std::string& s) { return text::tokenize(s, text::TokenizeMode::word); }

// Fails on every sentence.
class BrokenDetector final : public filter::LanguageDetector {
 public:
  std::string detect(const Sentence&) const override { throw filter::DetectionError("offline"); }
};

}  // namespace

TEST(FilterFixture, EachPairTripsItsDesignedRule) {
  const auto pairs = load_fixture();
  ASSERT_EQ(pairs.size(), 12u);
  const auto rules = FilterRuleSet::for_language_pair("en-zh");
  const filter::ScriptDetector detector;
  const auto result = filter::filter_corpus(pairs, rules, detector);

  const std::vector<std::pair<std::size_t, Reasons>> expected = {
      {1, {"duplicate"}},       {2, {"max_len"}},    {3, {"max_word_chars"}},
      {4, {"ratio"}},           {5, {"ratio"}},      {6, {"invalid_unicode"}},
      {7, {"invalid_unicode"}}, {8, {"zh_latin"}},   {9, {"langid"}},
      {10, {"langid"}},         {11, {"max_len", "ratio"}}};
  ASSERT_EQ(result.kept.size(), 1u);
  EXPECT_EQ(result.kept[0].source.raw, "the cat sat on the mat");
  ASSERT_EQ(result.rejected.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(result.rejected[i].index, expected[i].first);
    EXPECT_EQ(result.rejected[i].verdict.reasons, expected[i].second) << "line " << expected[i].first + 1;
    EXPECT_FALSE(result.rejected[i].verdict.kept);
  }
}

TEST(FilterFixture, ThreadCountDoesNotChangeResult) {
  const auto pairs = load_fixture();
  const auto rules = FilterRuleSet::for_language_pair("en-zh");
  const filter::ScriptDetector detector;
  const auto serial = filter::filter_corpus(pairs, rules, detector, 1);
  for (unsigned t : {2u, 3u, 8u}) {
    const auto par = filter::filter_corpus(pairs, rules, detector, t);
    ASSERT_EQ(par.rejected.size(), serial.rejected.size());
    for (std::size_t i = 0; i < par.rejected.size(); ++i) {
      EXPECT_EQ(par.rejected[i].index, serial.rejected[i].index);
      EXPECT_EQ(par.rejected[i].verdict.reasons, serial.rejected[i].verdict.reasons);
    }
  }
}

TEST(FilterProperty, KeptAndRejectedPartitionInput) {
  rng::Engine e(31);
  const std::vector<std::string> vocab = {"a", "bb", "the", "xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx", "猫", "ü"};
  auto rules = FilterRuleSet::for_language_pair("en-de");
  rules.langid_check = false;
  rules.max_len_words = 6;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ParallelPair> pairs;
    for (int i = 0; i < 30; ++i) {
      std::string s, t;
      for (std::size_t k = 0, n = rng::uniform_index(e, 9); k < n; ++k) s += vocab[rng::uniform_index(e, 3)] + " ";
      for (std::size_t k = 0, n = rng::uniform_index(e, 9); k < n; ++k) t += vocab[rng::uniform_index(e, vocab.size())] + " ";
      pairs.push_back(filter::make_pair(s, t));
    }
    const auto r = filter::filter_corpus(pairs, rules, filter::ScriptDetector{});
    ASSERT_EQ(r.kept.size() + r.rejected.size(), pairs.size());
    std::vector<bool> seen(pairs.size(), false);
    for (const auto& rej : r.rejected) {
      EXPECT_FALSE(rej.verdict.reasons.empty());
      seen[rej.index] = true;
    }
    // Filtering the survivors again removes nothing.
    const auto again = filter::filter_corpus(r.kept, rules, filter::ScriptDetector{});
    EXPECT_TRUE(again.rejected.empty());
    EXPECT_EQ(again.kept.size(), r.kept.size());
  }
}

TEST(FilterRules, WordRulesSkipChineseSide) {
  auto rules = FilterRuleSet::for_language_pair("en-zh");
  rules.max_len_words = 3;
  rules.max_word_chars = 2;
  rules.ratio_limit = 100;
  const auto pair = filter::make_pair("ab cd", "这是一个很长的中文句子");
  const filter::ScriptDetector d;
  EXPECT_TRUE(filter::check_rule("length", pair, rules, d).empty());
  EXPECT_TRUE(filter::check_rule("word_chars", pair, rules, d).empty());
}

TEST(FilterRules, RatioCountsChineseCharacters) {
  auto rules = FilterRuleSet::for_language_pair("en-zh");
  const filter::ScriptDetector d;
  EXPECT_TRUE(filter::check_rule("ratio", filter::make_pair("one two", "一二三四五六七八"), rules, d).size() == 0);
  EXPECT_EQ(filter::check_rule("ratio", filter::make_pair("one two", "一二三四五六七八九"), rules, d),
            (Reasons{"ratio"}));
  EXPECT_EQ(filter::check_rule("ratio", filter::make_pair("", "x"), FilterRuleSet{}, d), (Reasons{"ratio"}));
}

TEST(FilterRules, DisabledRulesDoNotFire) {
  FilterRuleSet rules;
  rules.unicode_check = false;
  rules.langid_check = false;
  const auto pair = filter::make_pair("bad \xFF byte", "schlecht \xFF Byte");
  EXPECT_TRUE(filter::filter_pair(pair, rules, filter::ScriptDetector{}).kept);
}

TEST(FilterRules, DetectorFailureIsReported) {
  FilterRuleSet rules;
  const auto v = filter::filter_pair(filter::make_pair("hello there", "hallo da"), rules, BrokenDetector{});
  EXPECT_EQ(v.reasons, (Reasons{"langid_error"}));
  EXPECT_THROW(filter::check_rule("nope", filter::make_pair("a", "b"), rules, BrokenDetector{}),
               std::invalid_argument);
}

TEST(FilterRules, ValidationAndPairIds) {
  FilterRuleSet r;
  r.ratio_limit = 0;
  EXPECT_THROW(r.validate(), std::invalid_argument);
  EXPECT_THROW(FilterRuleSet::for_language_pair("enzh"), std::invalid_argument);
  EXPECT_TRUE(FilterRuleSet::for_language_pair("zh-en").zh_reject_latin);
  EXPECT_FALSE(FilterRuleSet::for_language_pair("en-de").zh_reject_latin);
}

TEST(Dedup, KeyCollapsesWhitespace) {
  EXPECT_EQ(filter::dedup_key(filter::make_pair("  a   b ", "c\t d")),
            filter::dedup_key(filter::make_pair("a b", "c d")));
  FilterRuleSet rules;
  rules.langid_check = false;
  const std::vector<ParallelPair> pairs = {filter::make_pair("x y", "u v"), filter::make_pair("x  y", "u v"),
                                           filter::make_pair("x y", "u w")};
  const auto r = filter::filter_corpus(pairs, rules, filter::ScriptDetector{});
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_EQ(r.rejected[0].index, 1u);
}

TEST(Unicode, InvalidDetection) {
  EXPECT_FALSE(filter::has_invalid_unicode("plain ascii"));
  EXPECT_FALSE(filter::has_invalid_unicode("tab\tis fine"));
  EXPECT_FALSE(filter::has_invalid_unicode("猫 ü"));
  EXPECT_TRUE(filter::has_invalid_unicode("bell\x07"));
  EXPECT_TRUE(filter::has_invalid_unicode("del\x7F"));
  EXPECT_TRUE(filter::has_invalid_unicode("c1\xC2\x85"));
  EXPECT_TRUE(filter::has_invalid_unicode("\xEF\xBF\xBD"));
  EXPECT_TRUE(filter::has_invalid_unicode("\xED\xA0\x80"));
  EXPECT_TRUE(filter::has_invalid_unicode("trunc\xE7\x8C"));
}

TEST(Unicode, ZhLatin) {
  EXPECT_TRUE(filter::zh_contains_latin(words("新iPhone手机")));
  EXPECT_FALSE(filter::zh_contains_latin(words("这是中文，123。")));
}

TEST(Detector, ScriptMajority) {
  EXPECT_EQ(filter::detect_language_script(words("hello world")), filter::Script::latin);
  EXPECT_EQ(filter::detect_language_script(words("你好世界")), filter::Script::han);
  EXPECT_EQ(filter::detect_language_script(words("これはペンです")), filter::Script::japanese);
  EXPECT_EQ(filter::detect_language_script(words("123 !!")), filter::Script::unknown);
  // Exactly half is not a majority.
  EXPECT_EQ(filter::detect_language_script(words("ab 你好")), filter::Script::unknown);
  EXPECT_TRUE(filter::language_matches("latin", "en"));
  EXPECT_TRUE(filter::language_matches("han", "zh"));
  EXPECT_TRUE(filter::language_matches("zh", "zh"));
  EXPECT_FALSE(filter::language_matches("han", "en"));
}

TEST(Detector, Predictions) {
  std::istringstream in("__label__en\thello there\n__label__fr\tbonjour\n");
  const auto d = filter::PredictionsDetector::from_tsv(in);
  EXPECT_EQ(d.detect(filter::make_pair("hello there", "x").source), "en");
  EXPECT_EQ(d.detect(filter::make_pair("bonjour", "x").source), "fr");
  EXPECT_THROW(d.detect(filter::make_pair("unseen", "x").source), filter::DetectionError);
}

TEST(Percentile, NumpyConvention) {
  EXPECT_DOUBLE_EQ(filter::percentile({1, 2, 3, 4}, 50), 2.5);
  EXPECT_DOUBLE_EQ(filter::percentile({1, 2, 3, 4, 5}, 95), 4.8);
  EXPECT_DOUBLE_EQ(filter::percentile({7}, 95), 7);
  EXPECT_DOUBLE_EQ(filter::percentile({3, 1, 2}, 100), 3);
  EXPECT_THROW(filter::percentile({}, 50), std::invalid_argument);
}

TEST(NgramLm, ConditionalsSumToOne) {
  rng::Engine e(32);
  std::vector<Sentence> corpus;
  for (int i = 0; i < 40; ++i) {
    std::vector<std::string> t;
    for (std::size_t k = 0, n = 1 + rng::uniform_index(e, 7); k < n; ++k) {
      t.push_back("w" + std::to_string(rng::uniform_index(e, 8)));
    }
    corpus.emplace_back(t);
  }
  const auto lm = lm::train_ngram_lm(corpus, 3, 0.1);
  std::vector<std::string> context_vocab(lm.vocab().begin(), lm.vocab().end());
  context_vocab.push_back(std::string(lm::kBos));
  context_vocab.push_back("never-seen");
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> h;
    for (std::size_t k = 0, n = rng::uniform_index(e, 4); k < n; ++k) {
      h.push_back(context_vocab[rng::uniform_index(e, context_vocab.size())]);
    }
    double total = 0.0;
    for (const auto& w : lm.vocab()) total += lm.prob(h, w);
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(NgramLm, HandComputedUnigram) {
  const std::vector<Sentence> corpus = {Sentence({"a", "b"}), Sentence({"a"})};
  const lm::NgramLm lm(corpus, 1, 1.0);
  // Vocabulary {a, b, </s>, <unk>}; counts a=2, b=1, </s>=2 over 5 tokens.
  EXPECT_EQ(lm.vocab_size(), 4u);
  EXPECT_DOUBLE_EQ(lm.prob({}, "a"), 3.0 / 9.0);
  EXPECT_DOUBLE_EQ(lm.prob({}, "zzz"), 1.0 / 9.0);
  const double lp = std::log(3.0 / 9.0) + std::log(3.0 / 9.0);
  EXPECT_NEAR(lm.log_prob(Sentence({"a"})), lp, 1e-12);
  EXPECT_NEAR(lm::lm_perplexity(lm, Sentence({"a"})), std::exp(-lp / 2.0), 1e-12);
}

TEST(NgramLm, RejectsBadParameters) {
  const std::vector<Sentence> corpus = {Sentence({"a"})};
  EXPECT_THROW(lm::NgramLm(corpus, 0, 0.1), std::invalid_argument);
  EXPECT_THROW(lm::NgramLm(corpus, 2, 0.0), std::invalid_argument);
  EXPECT_THROW(lm::NgramLm(std::vector<Sentence>{}, 2, 0.1), std::invalid_argument);
}

TEST(Monolingual, OutlierIsRejected) {
  std::vector<Sentence> train;
  for (int i = 0; i < 30; ++i) train.push_back(Sentence({"the", "cat", "sat", "on", "the", "mat"}));
  const auto lm = lm::train_ngram_lm(train, 3, 0.1);
  std::vector<Sentence> corpus(19, Sentence({"the", "cat", "sat", "on", "the", "mat"}));
  corpus.push_back(Sentence({"zebra", "quantum", "fjord", "xylophone"}));
  const auto r = filter::filter_monolingual(corpus, lm, 95.0);
  EXPECT_EQ(r.rejected, (std::vector<std::size_t>{19}));
  EXPECT_EQ(r.kept.size(), 19u);
  EXPECT_EQ(r.perplexities.size(), 20u);
  for (std::size_t i = 0; i < 19; ++i) EXPECT_LE(r.perplexities[i], r.threshold);
  EXPECT_GT(r.perplexities[19], r.threshold);
  EXPECT_THROW(filter::filter_monolingual(corpus, lm, 0.0), std::invalid_argument);
  EXPECT_THROW(filter::filter_monolingual(corpus, lm, 101.0), std::invalid_argument);
}

TEST(Monolingual, HundredthPercentileKeepsAll) {
  std::vector<Sentence> corpus = {Sentence({"a", "b"}), Sentence({"c"}), Sentence({"a"})};
  const auto lm = lm::train_ngram_lm(corpus, 2, 0.5);
  EXPECT_TRUE(filter::filter_monolingual(corpus, lm, 100.0).rejected.empty());
}
