#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "wmtkit/textcore.hpp"

namespace wmtkit::lm {

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kUnk = "<unk>";

/// Fixed-order n-gram model with additive-k smoothing:
///
///   p(w | h) = (c(h, w) + k) / (c(h) + k * |V|)
///
/// where V is the training vocabulary plus </s> and <unk>, and histories are
/// left-padded with <s>. Out-of-vocabulary words map to <unk> both as
/// predictions and inside histories.
class NgramLm {
 public:
  /// Throws std::invalid_argument for order 0, k <= 0, or an empty corpus.
  NgramLm(std::span<const text::Sentence> corpus, std::size_t order, double smoothing_k);

  std::size_t order() const { return order_; }
  double smoothing_k() const { return k_; }

  /// Prediction vocabulary size, including </s> and <unk>.
  std::size_t vocab_size() const { return vocab_.size(); }
  const std::set<std::string>& vocab() const { return vocab_; }

  double prob(std::span<const std::string> history, const std::string& word) const;

  /// Natural-log probability of the sentence including </s>.
  double log_prob(const text::Sentence& sentence) const;

 private:
  std::string map_word(const std::string& w) const;
  std::vector<std::string> history_key(std::span<const std::string> history) const;

  std::size_t order_;
  double k_;
  std::set<std::string> vocab_;
  std::map<std::vector<std::string>, std::size_t> ngram_counts_;
  std::map<std::vector<std::string>, std::size_t> history_counts_;
};

NgramLm train_ngram_lm(std::span<const text::Sentence> corpus, std::size_t order = 5,
                       double smoothing_k = 0.1);

/// exp(-mean log-likelihood), with </s> counted as a token.
double lm_perplexity(const NgramLm& lm, const text::Sentence& sentence);

}  // namespace wmtkit::lm
