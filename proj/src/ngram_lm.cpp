#include "wmtkit/ngram_lm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wmtkit::lm {

NgramLm::NgramLm(std::span<const text::Sentence> corpus, std::size_t order, double smoothing_k)
    : order_(order), k_(smoothing_k) {
  if (order == 0) throw std::invalid_argument("n-gram order must be >= 1");
  if (!(smoothing_k > 0.0)) throw std::invalid_argument("smoothing constant must be > 0");
  if (corpus.empty()) throw std::invalid_argument("cannot train a language model on an empty corpus");

  vocab_.emplace(kEos);
  vocab_.emplace(kUnk);
  for (const auto& s : corpus) vocab_.insert(s.tokens.begin(), s.tokens.end());

  for (const auto& s : corpus) {
    std::vector<std::string> seq(order_ - 1, std::string(kBos));
    seq.insert(seq.end(), s.tokens.begin(), s.tokens.end());
    seq.emplace_back(kEos);
    for (std::size_t p = order_ - 1; p < seq.size(); ++p) {
      std::vector<std::string> gram(seq.begin() + static_cast<std::ptrdiff_t>(p + 1 - order_),
                                    seq.begin() + static_cast<std::ptrdiff_t>(p + 1));
      ++ngram_counts_[gram];
      gram.pop_back();
      ++history_counts_[gram];
    }
  }
}

std::string NgramLm::map_word(const std::string& w) const {
  if (w == kBos || vocab_.contains(w)) return w;
  return std::string(kUnk);
}

std::vector<std::string> NgramLm::history_key(std::span<const std::string> history) const {
  std::vector<std::string> key(order_ - 1, std::string(kBos));
  const std::size_t take = std::min(history.size(), order_ - 1);
  for (std::size_t i = 0; i < take; ++i) {
    key[order_ - 1 - take + i] = map_word(history[history.size() - take + i]);
  }
  return key;
}

double NgramLm::prob(std::span<const std::string> history, const std::string& word) const {
  auto key = history_key(history);
  const auto h_it = history_counts_.find(key);
  const double c_h = h_it == history_counts_.end() ? 0.0 : static_cast<double>(h_it->second);
  key.push_back(word == kEos ? std::string(kEos) : map_word(word));
  const auto g_it = ngram_counts_.find(key);
  const double c_hw = g_it == ngram_counts_.end() ? 0.0 : static_cast<double>(g_it->second);
  return (c_hw + k_) / (c_h + k_ * static_cast<double>(vocab_.size()));
}

double NgramLm::log_prob(const text::Sentence& sentence) const {
  std::vector<std::string> seq = sentence.tokens;
  seq.emplace_back(kEos);
  double total = 0.0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    total += std::log(prob(std::span<const std::string>(seq.data(), i), seq[i]));
  }
  return total;
}

NgramLm train_ngram_lm(std::span<const text::Sentence> corpus, std::size_t order,
                       double smoothing_k) {
  return NgramLm(corpus, order, smoothing_k);
}

double lm_perplexity(const NgramLm& lm, const text::Sentence& sentence) {
  const double n = static_cast<double>(sentence.tokens.size() + 1);
  return std::exp(-lm.log_prob(sentence) / n);
}

}  // namespace wmtkit::lm
