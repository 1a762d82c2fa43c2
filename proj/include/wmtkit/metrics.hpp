#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "wmtkit/textcore.hpp"

namespace wmtkit::metrics {

using text::Sentence;
using Corpus = std::vector<Sentence>;

enum class Smoothing {
  none,     // shared-task corpus BLEU
  add_one,  // (m+1)/(t+1) on orders >= 2, for tiny fixtures
};

struct BleuOptions {
  std::size_t max_order = 4;
  bool case_sensitive = true;
  Smoothing smoothing = Smoothing::none;
};

struct BleuReport {
  double score = 0.0;  // percentage
  std::vector<double> precisions;
  std::vector<std::size_t> matches;
  std::vector<std::size_t> totals;
  double brevity_penalty = 0.0;
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
};

/// Corpus BLEU with clipped n-gram counts and a closest-reference-length
/// brevity penalty. `refs[i]` holds every reference for hypothesis i.
/// Throws std::invalid_argument on empty input or a size mismatch.
BleuReport corpus_bleu(std::span<const Sentence> hyps,
                       std::span<const std::vector<Sentence>> refs,
                       const BleuOptions& options = {});

/// Single-reference convenience overload.
BleuReport corpus_bleu(std::span<const Sentence> hyps, std::span<const Sentence> refs,
                       const BleuOptions& options = {});

/// Mean of BLEU(a|b) and BLEU(b|a); symmetric by construction.
double self_bleu_pair(std::span<const Sentence> a, std::span<const Sentence> b,
                      const BleuOptions& options = {});

/// Per-model Self-BLEU using all other models as references at once.
double self_bleu_multi_ref(std::span<const Corpus> translations, std::size_t model,
                           const BleuOptions& options = {});

struct SelfBleuMatrix {
  std::vector<std::string> model_ids;
  std::vector<double> values;  // row-major, size n*n

  std::size_t size() const { return model_ids.size(); }
  double at(std::size_t i, std::size_t j) const { return values[i * size() + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * size() + j]; }

  /// Throws std::invalid_argument unless the matrix is square, symmetric,
  /// has a diagonal of 100 and off-diagonal entries within [0, 100].
  void validate() const;
};

/// Pairwise Self-BLEU over all unordered pairs. Pairs are fanned out over
/// `threads` workers (0 = hardware concurrency); each pair writes its own
/// slot, so the result does not depend on the thread count.
SelfBleuMatrix self_bleu_matrix(std::span<const std::string> model_ids,
                                std::span<const Corpus> translations,
                                const BleuOptions& options = {}, unsigned threads = 1);

/// Row means excluding the diagonal.
std::vector<double> avg_self_bleu(const SelfBleuMatrix& matrix);

}  // namespace wmtkit::metrics
