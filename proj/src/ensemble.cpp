#include "wmtkit/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace wmtkit::ensemble {

std::size_t CandidatePool::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == id) return i;
  }
  throw std::invalid_argument("model '" + std::string(id) + "' is not in the pool");
}

CandidatePool CandidatePool::from_scores(std::vector<std::string> ids,
                                         std::vector<double> valid_bleu, SelfBleuMatrix matrix) {
  if (ids.size() != valid_bleu.size() || ids.size() != matrix.size()) {
    throw std::invalid_argument("pool: ids, valid BLEU and Self-BLEU matrix sizes differ");
  }
  if (ids.empty()) throw std::invalid_argument("pool: no models");
  matrix.validate();
  CandidatePool pool;
  pool.avg_self_bleu = metrics::avg_self_bleu(matrix);
  pool.ids = std::move(ids);
  pool.valid_bleu = std::move(valid_bleu);
  pool.self_bleu = std::move(matrix);
  return pool;
}

CandidatePool CandidatePool::from_translations(std::vector<std::string> ids,
                                               std::vector<Corpus> translations,
                                               Corpus references,
                                               std::optional<std::vector<double>> valid_bleu,
                                               const metrics::BleuOptions& options,
                                               unsigned threads) {
  if (ids.size() != translations.size()) {
    throw std::invalid_argument("pool: every model needs a translation set");
  }
  std::vector<double> b;
  if (valid_bleu) {
    b = std::move(*valid_bleu);
  } else {
    if (references.empty()) throw std::invalid_argument("pool: references needed to score B");
    for (const auto& t : translations) b.push_back(metrics::corpus_bleu(t, references, options).score);
  }
  auto matrix = metrics::self_bleu_matrix(ids, translations, options, threads);
  auto pool = from_scores(std::move(ids), std::move(b), std::move(matrix));
  pool.translation_passes = translations.size();
  pool.translations = std::move(translations);
  pool.references = std::move(references);
  return pool;
}

WeightedScores weighted_scores(std::span<const double> valid_bleu,
                               std::span<const double> avg_self_bleu) {
  if (valid_bleu.size() != avg_self_bleu.size()) {
    throw std::invalid_argument("weighted_scores: B and S differ in length");
  }
  if (valid_bleu.size() < 2) throw std::invalid_argument("weighted_scores: need at least two models");
  const auto [b_min, b_max] = std::minmax_element(valid_bleu.begin(), valid_bleu.end());
  const auto [s_min, s_max] = std::minmax_element(avg_self_bleu.begin(), avg_self_bleu.end());

  WeightedScores out;
  out.weight = *b_max == *b_min ? 1.0 : (*s_max - *s_min) / (*b_max - *b_min);
  out.scores.reserve(valid_bleu.size());
  for (std::size_t i = 0; i < valid_bleu.size(); ++i) {
    out.scores.push_back((valid_bleu[i] - *b_min) * out.weight + (*s_max - avg_self_bleu[i]));
  }
  return out;
}

namespace {

std::size_t argmax_first(std::span<const double> values, std::span<const std::size_t> among) {
  std::size_t best = among.front();
  for (auto i : among) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::vector<std::string> ids_of(const CandidatePool& pool, std::span<const std::size_t> idx) {
  std::vector<std::string> out;
  for (auto i : idx) out.push_back(pool.ids[i]);
  return out;
}

}  // namespace

EnsembleSelection bsbe_select(const CandidatePool& pool, std::size_t c, const BsbeOptions& options) {
  const std::size_t n = pool.size();
  const auto ws = n >= 2 ? weighted_scores(pool.valid_bleu, pool.avg_self_bleu)
                         : WeightedScores{std::vector<double>(n, 0.0), 1.0};

  std::vector<std::size_t> universe(n);
  std::iota(universe.begin(), universe.end(), 0);
  if (options.top_n) {
    if (*options.top_n == 0) throw std::invalid_argument("bsbe: top_n must be >= 1");
    std::stable_sort(universe.begin(), universe.end(),
                     [&](std::size_t a, std::size_t b) { return ws.scores[a] > ws.scores[b]; });
    universe.resize(std::min(*options.top_n, n));
    std::sort(universe.begin(), universe.end());
  }
  if (c < 1 || c > universe.size()) {
    throw std::invalid_argument("bsbe: ensemble size " + std::to_string(c) + " outside [1, " +
                                std::to_string(universe.size()) + "]");
  }

  EnsembleSelection sel;
  sel.target_size = c;
  sel.weighted_scores = ws.scores;
  sel.weight = ws.weight;
  sel.evaluations_used = search_cost(Algorithm::bsbe, n);

  sel.chosen.push_back(argmax_first(ws.scores, universe));
  std::vector<bool> in_c(n, false);
  in_c[sel.chosen.front()] = true;

  while (sel.chosen.size() < c) {
    BsbeStep step;
    for (auto i : universe) {
      if (in_c[i]) continue;
      double sum = 0.0;
      for (auto j : sel.chosen) sum += pool.self_bleu.at(i, j);
      step.candidates.push_back(i);
      step.mean_self_bleu.push_back(sum / static_cast<double>(sel.chosen.size()));
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < step.candidates.size(); ++k) {
      if (step.mean_self_bleu[k] < step.mean_self_bleu[best]) best = k;
    }
    step.picked = step.candidates[best];
    in_c[step.picked] = true;
    sel.chosen.push_back(step.picked);
    sel.bsbe_trace.push_back(std::move(step));
  }
  sel.chosen_ids = ids_of(pool, sel.chosen);
  return sel;
}

EnsembleSelection bsbe_search(const CandidatePool& pool, std::size_t c, const Evaluator& evaluator,
                              const BsbeOptions& options) {
  auto sel = bsbe_select(pool, c, options);
  sel.score = evaluator(sel.chosen);
  sel.evaluations_used = pool.translation_passes + 1;
  return sel;
}

EnsembleSelection greedy_select(const CandidatePool& pool, const Evaluator& evaluator,
                                std::size_t c) {
  const std::size_t n = pool.size();
  if (c < 1 || c > n) throw std::invalid_argument("greedy: ensemble size outside [1, n]");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pool.valid_bleu[a] > pool.valid_bleu[b];
  });

  EnsembleSelection sel;
  sel.target_size = c;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> temp;

  auto attempt = [&](std::size_t model, bool retry) {
    auto trial = sel.chosen;
    trial.push_back(model);
    const double score = evaluator(trial);
    ++sel.evaluations_used;
    const bool kept = score > best;
    if (kept) {
      sel.chosen = std::move(trial);
      best = score;
    }
    sel.greedy_trace.push_back({model, retry, score, kept});
    return kept;
  };

  for (auto m : order) {
    if (sel.chosen.size() >= c) break;
    if (!attempt(m, false)) temp.push_back(m);
  }
  for (auto m : temp) {
    if (sel.chosen.size() >= c) break;
    attempt(m, true);
  }
  sel.score = best;
  sel.chosen_ids = ids_of(pool, sel.chosen);
  return sel;
}

namespace {

// Size-major, then lexicographic combinations of {0..n-1}.
std::vector<std::vector<std::size_t>> enumerate_subsets(std::size_t n, std::size_t max_size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t k = 1; k <= max_size; ++k) {
    std::vector<std::size_t> comb(k);
    std::iota(comb.begin(), comb.end(), 0);
    while (true) {
      out.push_back(comb);
      std::size_t i = k;
      while (i > 0 && comb[i - 1] == n - k + (i - 1)) --i;
      if (i == 0) break;
      ++comb[i - 1];
      for (std::size_t j = i; j < k; ++j) comb[j] = comb[j - 1] + 1;
    }
  }
  return out;
}

}  // namespace

EnsembleSelection brute_force_select(const CandidatePool& pool, const Evaluator& evaluator,
                                     std::size_t max_size, unsigned threads) {
  const std::size_t n = pool.size();
  if (n > kBruteForceMaxModels) {
    throw std::invalid_argument("brute force over " + std::to_string(n) +
                                " models would need 2^n - 1 evaluations; use the bsbe strategy");
  }
  if (max_size < 1 || max_size > n) throw std::invalid_argument("brute force: max_size outside [1, n]");

  const auto subsets = enumerate_subsets(n, max_size);
  std::vector<double> scores(subsets.size());

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, subsets.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < subsets.size(); ++i) scores[i] = evaluator(subsets[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex mu;
    std::vector<std::thread> pool_threads;
    for (unsigned t = 0; t < threads; ++t) {
      pool_threads.emplace_back([&] {
        try {
          for (std::size_t i = next++; i < subsets.size(); i = next++) scores[i] = evaluator(subsets[i]);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
        }
      });
    }
    for (auto& th : pool_threads) th.join();
    if (error) std::rethrow_exception(error);
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  EnsembleSelection sel;
  sel.target_size = max_size;
  sel.chosen = subsets[best];
  sel.chosen_ids = ids_of(pool, sel.chosen);
  sel.evaluations_used = subsets.size();
  sel.score = scores[best];
  return sel;
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  if (name == "greedy") return Algorithm::greedy;
  if (name == "brute" || name == "brute_force" || name == "brute-force") return Algorithm::brute_force;
  if (name == "bsbe") return Algorithm::bsbe;
  return std::nullopt;
}

std::size_t brute_force_cost(std::size_t n, std::size_t max_size) {
  std::size_t total = 0;
  std::size_t binom = 1;  // C(n, 0)
  for (std::size_t i = 1; i <= std::min(n, max_size); ++i) {
    binom = binom * (n - i + 1) / i;
    total += binom;
  }
  return total;
}

std::size_t search_cost(Algorithm algorithm, std::size_t n) {
  if (n == 0) throw std::invalid_argument("search_cost: n must be >= 1");
  switch (algorithm) {
    case Algorithm::greedy:
      return 2 * n;
    case Algorithm::brute_force:
      return brute_force_cost(n, n);
    case Algorithm::bsbe:
      return n + 1;
  }
  throw std::invalid_argument("search_cost: unknown algorithm");
}

std::size_t search_cost(std::string_view algorithm, std::size_t n) {
  const auto alg = parse_algorithm(algorithm);
  if (!alg) throw std::invalid_argument("unknown search algorithm '" + std::string(algorithm) + "'");
  return search_cost(*alg, n);
}

namespace {

void check_members(std::span<const std::size_t> members, const CandidatePool& pool) {
  if (members.empty()) throw std::invalid_argument("surrogate: empty member set");
  for (auto m : members) {
    if (m >= pool.size()) throw std::out_of_range("surrogate: member index outside the pool");
  }
}

}  // namespace

Corpus vote_translations(std::span<const std::size_t> members, const CandidatePool& pool) {
  check_members(members, pool);
  if (!pool.has_translations()) throw std::invalid_argument("vote: pool carries no translations");

  // Members ranked by valid BLEU, ties by index, for resolving tied votes.
  std::vector<std::size_t> ranked(members.begin(), members.end());
  std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
    return pool.valid_bleu[a] > pool.valid_bleu[b] ||
           (pool.valid_bleu[a] == pool.valid_bleu[b] && a < b);
  });

  const std::size_t sentences = pool.references.size();
  Corpus out;
  out.reserve(sentences);
  for (std::size_t s = 0; s < sentences; ++s) {
    std::size_t len = std::numeric_limits<std::size_t>::max();
    for (auto m : members) len = std::min(len, pool.translations[m].at(s).size());
    std::vector<std::string> tokens;
    tokens.reserve(len);
    for (std::size_t p = 0; p < len; ++p) {
      std::map<std::string_view, std::size_t> votes;
      std::size_t top = 0;
      for (auto m : members) top = std::max(top, ++votes[pool.translations[m][s].tokens[p]]);
      for (auto m : ranked) {
        const auto& tok = pool.translations[m][s].tokens[p];
        if (votes[tok] == top) {
          tokens.push_back(tok);
          break;
        }
      }
    }
    out.emplace_back(std::move(tokens));
  }
  return out;
}

double vote_score(std::span<const std::size_t> members, const CandidatePool& pool,
                  const metrics::BleuOptions& options) {
  const auto voted = vote_translations(members, pool);
  return metrics::corpus_bleu(voted, pool.references, options).score;
}

double diversity_score(std::span<const std::size_t> members, const CandidatePool& pool,
                       double lambda) {
  check_members(members, pool);
  double b = 0.0;
  for (auto m : members) b += pool.valid_bleu[m];
  b /= static_cast<double>(members.size());
  double div = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      div += (100.0 - pool.self_bleu.at(members[i], members[j])) / 100.0;
      ++pairs;
    }
  }
  return b + (pairs ? lambda * div / static_cast<double>(pairs) : 0.0);
}

Evaluator make_vote_evaluator(const CandidatePool& pool, const metrics::BleuOptions& options) {
  return [&pool, options](std::span<const std::size_t> members) {
    return vote_score(members, pool, options);
  };
}

Evaluator make_diversity_evaluator(const CandidatePool& pool, double lambda) {
  return [&pool, lambda](std::span<const std::size_t> members) {
    return diversity_score(members, pool, lambda);
  };
}

}  // namespace wmtkit::ensemble
