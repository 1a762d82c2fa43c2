#pragma once

// Ensemble subset search: Boosted Self-BLEU based Ensemble (BSBE), the greedy
// and brute-force baselines, and search-cost accounting.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wmtkit/metrics.hpp"

namespace wmtkit::ensemble {

using metrics::Corpus;
using metrics::SelfBleuMatrix;

struct CandidatePool {
  std::vector<std::string> ids;
  std::vector<double> valid_bleu;      // B
  SelfBleuMatrix self_bleu;            // pairwise matrix
  std::vector<double> avg_self_bleu;   // S, row means of the matrix
  std::vector<Corpus> translations;    // optional: valid-set output per model
  Corpus references;                   // optional: valid-set references
  std::size_t translation_passes = 0;  // valid-set decodes spent building the pool

  std::size_t size() const { return ids.size(); }
  bool has_translations() const { return !translations.empty() && !references.empty(); }

  /// Throws std::invalid_argument for an unknown id.
  std::size_t index_of(std::string_view id) const;

  /// Pool from precomputed scores. The matrix must be valid (symmetric,
  /// diagonal 100) and match `ids` in size.
  static CandidatePool from_scores(std::vector<std::string> ids, std::vector<double> valid_bleu,
                                   SelfBleuMatrix matrix);

  /// Pool from valid-set translations. Each model's translation counts as one
  /// pass; B is scored against `references` unless given explicitly.
  static CandidatePool from_translations(std::vector<std::string> ids,
                                         std::vector<Corpus> translations, Corpus references,
                                         std::optional<std::vector<double>> valid_bleu = {},
                                         const metrics::BleuOptions& options = {},
                                         unsigned threads = 1);
};

/// Returns a larger-is-better score for a non-empty member set (pool indices).
using Evaluator = std::function<double(std::span<const std::size_t>)>;

struct WeightedScores {
  std::vector<double> scores;
  double weight = 1.0;
};

/// weight = (max S - min S) / (max B - min B), or 1 when all B are equal;
/// score_i = (b_i - min B) * weight + (max S - s_i).
WeightedScores weighted_scores(std::span<const double> valid_bleu,
                               std::span<const double> avg_self_bleu);

struct BsbeStep {
  std::vector<std::size_t> candidates;  // remaining models considered
  std::vector<double> mean_self_bleu;   // mean Self-BLEU of each candidate to the chosen set
  std::size_t picked = 0;
};

struct GreedyStep {
  std::size_t model = 0;
  bool retry = false;
  double score = 0.0;
  bool kept = false;
};

struct EnsembleSelection {
  std::vector<std::size_t> chosen;  // pool indices in pick order
  std::vector<std::string> chosen_ids;
  std::size_t target_size = 0;
  std::vector<double> weighted_scores;
  double weight = 1.0;
  std::size_t evaluations_used = 0;
  std::optional<double> score;  // evaluator score of the final set, if evaluated
  std::vector<BsbeStep> bsbe_trace;
  std::vector<GreedyStep> greedy_trace;
};

struct BsbeOptions {
  /// Restrict the loop to the N best models by weighted score.
  std::optional<std::size_t> top_n;
};

/// Starts from the highest weighted score, then repeatedly adds the remaining
/// model with the smallest mean Self-BLEU to the already chosen models. Ties
/// go to the lower pool index. evaluations_used follows the n + 1 cost contract.
/// Throws std::invalid_argument unless 1 <= c <= |M| (or top_n).
EnsembleSelection bsbe_select(const CandidatePool& pool, std::size_t c,
                              const BsbeOptions& options = {});

/// bsbe_select plus the single evaluation of the chosen ensemble;
/// evaluations_used = pool.translation_passes + 1.
EnsembleSelection bsbe_search(const CandidatePool& pool, std::size_t c,
                              const Evaluator& evaluator, const BsbeOptions& options = {});

/// Visits models by descending valid BLEU and keeps one iff the evaluator
/// improves; rejected models wait in a temporary list and are retried once
/// after the main pass, then withdrawn for good. At most 2n evaluations.
EnsembleSelection greedy_select(const CandidatePool& pool, const Evaluator& evaluator,
                                std::size_t c);

inline constexpr std::size_t kBruteForceMaxModels = 20;

/// Evaluates every non-empty subset of at most max_size models (size-major,
/// then lexicographic order) on `threads` workers; the first best subset in
/// that order wins. Throws std::invalid_argument for pools above 20 models.
EnsembleSelection brute_force_select(const CandidatePool& pool, const Evaluator& evaluator,
                                     std::size_t max_size, unsigned threads = 1);

enum class Algorithm { greedy, brute_force, bsbe };

std::optional<Algorithm> parse_algorithm(std::string_view name);

/// Number of valid-set translation passes: 2n, sum_{i=1..n} C(n,i), n+1.
std::size_t search_cost(Algorithm algorithm, std::size_t n);
std::size_t search_cost(std::string_view algorithm, std::size_t n);

/// sum_{i=1..max_size} C(n, i).
std::size_t brute_force_cost(std::size_t n, std::size_t max_size);

// ---------------------------------------------------------------------------
// Surrogate evaluators (stand-ins for decoding with a real model ensemble)

/// Position-wise plurality vote over the shortest member translation; a tied
/// vote goes to the token proposed by the member with the highest valid BLEU.
Corpus vote_translations(std::span<const std::size_t> members, const CandidatePool& pool);

/// Corpus BLEU of the voted translation against the pool references.
double vote_score(std::span<const std::size_t> members, const CandidatePool& pool,
                  const metrics::BleuOptions& options = {});

/// mean(B_members) + lambda * mean pairwise (100 - SelfBLEU) / 100.
double diversity_score(std::span<const std::size_t> members, const CandidatePool& pool,
                       double lambda = 1.0);

Evaluator make_vote_evaluator(const CandidatePool& pool, const metrics::BleuOptions& options = {});
Evaluator make_diversity_evaluator(const CandidatePool& pool, double lambda = 1.0);

}  // namespace wmtkit::ensemble
