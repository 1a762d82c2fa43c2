#include "wmtkit/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <string_view>
#include <thread>
#include <unordered_map>

namespace wmtkit::metrics {
namespace {

std::vector<std::string> prepare(const Sentence& s, bool case_sensitive) {
  if (case_sensitive) return s.tokens;
  std::vector<std::string> out = s.tokens;
  for (auto& t : out) {
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) {
      return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
    });
  }
  return out;
}

using Ids = std::vector<std::uint32_t>;

struct GramRun {
  std::size_t start;
  std::size_t count;
};

// Distinct order-n grams of `seq` in lexicographic order, with multiplicities.
std::vector<GramRun> sorted_grams(const Ids& seq, std::size_t n) {
  std::vector<GramRun> runs;
  if (seq.size() < n) return runs;
  std::vector<std::size_t> starts(seq.size() - n + 1);
  for (std::size_t i = 0; i < starts.size(); ++i) starts[i] = i;
  auto less = [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(seq.begin() + a, seq.begin() + a + n, seq.begin() + b,
                                        seq.begin() + b + n);
  };
  std::sort(starts.begin(), starts.end(), less);
  for (auto st : starts) {
    if (!runs.empty() && !less(runs.back().start, st)) {
      ++runs.back().count;
    } else {
      runs.push_back({st, 1});
    }
  }
  return runs;
}

// Clipped matches of hyp grams against the per-gram maximum over references.
std::size_t clipped_matches(const Ids& hyp, const std::vector<Ids>& refs, std::size_t n) {
  const auto hyp_runs = sorted_grams(hyp, n);
  std::vector<std::size_t> max_ref(hyp_runs.size(), 0);
  for (const auto& ref : refs) {
    const auto ref_runs = sorted_grams(ref, n);
    std::size_t j = 0;
    for (std::size_t i = 0; i < hyp_runs.size() && j < ref_runs.size();) {
      const auto h = hyp.begin() + static_cast<std::ptrdiff_t>(hyp_runs[i].start);
      const auto r = ref.begin() + static_cast<std::ptrdiff_t>(ref_runs[j].start);
      if (std::lexicographical_compare(h, h + n, r, r + n)) {
        ++i;
      } else if (std::lexicographical_compare(r, r + n, h, h + n)) {
        ++j;
      } else {
        max_ref[i] = std::max(max_ref[i], ref_runs[j].count);
        ++i;
        ++j;
      }
    }
  }
  std::size_t match = 0;
  for (std::size_t i = 0; i < hyp_runs.size(); ++i) match += std::min(hyp_runs[i].count, max_ref[i]);
  return match;
}

}  // namespace

BleuReport corpus_bleu(std::span<const Sentence> hyps,
                       std::span<const std::vector<Sentence>> refs,
                       const BleuOptions& options) {
  if (hyps.empty()) throw std::invalid_argument("corpus_bleu: empty hypothesis list");
  if (hyps.size() != refs.size()) {
    throw std::invalid_argument("corpus_bleu: " + std::to_string(hyps.size()) +
                                " hypotheses but " + std::to_string(refs.size()) +
                                " reference sets");
  }
  if (options.max_order == 0) throw std::invalid_argument("corpus_bleu: max_order must be >= 1");

  const std::size_t orders = options.max_order;
  BleuReport report;
  report.matches.assign(orders, 0);
  report.totals.assign(orders, 0);

  for (std::size_t s = 0; s < hyps.size(); ++s) {
    if (refs[s].empty()) {
      throw std::invalid_argument("corpus_bleu: sentence " + std::to_string(s) +
                                  " has no reference");
    }
    const auto hyp_words = prepare(hyps[s], options.case_sensitive);
    std::vector<std::vector<std::string>> ref_words;
    ref_words.reserve(refs[s].size());
    for (const auto& r : refs[s]) ref_words.push_back(prepare(r, options.case_sensitive));

    std::unordered_map<std::string_view, std::uint32_t> vocab;
    auto intern = [&vocab](const std::vector<std::string>& words) {
      Ids ids;
      ids.reserve(words.size());
      for (const auto& w : words) {
        ids.push_back(vocab.emplace(w, static_cast<std::uint32_t>(vocab.size())).first->second);
      }
      return ids;
    };
    const Ids hyp = intern(hyp_words);
    std::vector<Ids> ref_ids;
    for (const auto& r : ref_words) ref_ids.push_back(intern(r));

    // Closest reference length; ties go to the shorter reference.
    std::size_t closest = ref_ids.front().size();
    for (const auto& r : ref_ids) {
      const auto d = [&](std::size_t len) {
        return len > hyp.size() ? len - hyp.size() : hyp.size() - len;
      };
      if (d(r.size()) < d(closest) || (d(r.size()) == d(closest) && r.size() < closest)) {
        closest = r.size();
      }
    }
    report.hyp_len += hyp.size();
    report.ref_len += closest;

    for (std::size_t n = 1; n <= orders; ++n) {
      report.matches[n - 1] += clipped_matches(hyp, ref_ids, n);
      report.totals[n - 1] += hyp.size() >= n ? hyp.size() - n + 1 : 0;
    }
  }

  report.precisions.resize(orders);
  bool any_zero = false;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < orders; ++n) {
    double m = static_cast<double>(report.matches[n]);
    double t = static_cast<double>(report.totals[n]);
    if (options.smoothing == Smoothing::add_one && n >= 1) {
      m += 1.0;
      t += 1.0;
    }
    const double p = t > 0.0 ? m / t : 0.0;
    report.precisions[n] = p;
    if (p <= 0.0) {
      any_zero = true;
    } else {
      log_sum += std::log(p);
    }
  }

  if (report.hyp_len == 0) {
    report.brevity_penalty = 0.0;
  } else if (report.hyp_len < report.ref_len) {
    report.brevity_penalty = std::exp(1.0 - static_cast<double>(report.ref_len) /
                                                static_cast<double>(report.hyp_len));
  } else {
    report.brevity_penalty = 1.0;
  }

  report.score = any_zero ? 0.0
                          : 100.0 * report.brevity_penalty *
                                std::exp(log_sum / static_cast<double>(orders));
  return report;
}

BleuReport corpus_bleu(std::span<const Sentence> hyps, std::span<const Sentence> refs,
                       const BleuOptions& options) {
  std::vector<std::vector<Sentence>> wrapped;
  wrapped.reserve(refs.size());
  for (const auto& r : refs) wrapped.push_back({r});
  return corpus_bleu(hyps, std::span<const std::vector<Sentence>>(wrapped), options);
}

double self_bleu_pair(std::span<const Sentence> a, std::span<const Sentence> b,
                      const BleuOptions& options) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("self_bleu_pair: translation lists are not line-aligned (" +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                                ")");
  }
  const double ab = corpus_bleu(a, b, options).score;
  const double ba = corpus_bleu(b, a, options).score;
  return 0.5 * (ab + ba);
}

double self_bleu_multi_ref(std::span<const Corpus> translations, std::size_t model,
                           const BleuOptions& options) {
  if (translations.size() < 2) {
    throw std::invalid_argument("self_bleu_multi_ref: need at least two models");
  }
  if (model >= translations.size()) throw std::out_of_range("self_bleu_multi_ref: bad model");
  const auto& hyps = translations[model];
  std::vector<std::vector<Sentence>> refs(hyps.size());
  for (std::size_t m = 0; m < translations.size(); ++m) {
    if (m == model) continue;
    if (translations[m].size() != hyps.size()) {
      throw std::invalid_argument("self_bleu_multi_ref: translation lists are not line-aligned");
    }
    for (std::size_t i = 0; i < hyps.size(); ++i) refs[i].push_back(translations[m][i]);
  }
  return corpus_bleu(hyps, std::span<const std::vector<Sentence>>(refs), options).score;
}

void SelfBleuMatrix::validate() const {
  const std::size_t n = size();
  if (values.size() != n * n) throw std::invalid_argument("self-BLEU matrix is not square");
  for (std::size_t i = 0; i < n; ++i) {
    if (at(i, i) != 100.0) throw std::invalid_argument("self-BLEU diagonal must be 100");
    for (std::size_t j = 0; j < n; ++j) {
      if (at(i, j) != at(j, i)) throw std::invalid_argument("self-BLEU matrix is not symmetric");
      if (!(at(i, j) >= 0.0 && at(i, j) <= 100.0)) {
        throw std::invalid_argument("self-BLEU entry outside [0, 100]");
      }
    }
  }
}

SelfBleuMatrix self_bleu_matrix(std::span<const std::string> model_ids,
                                std::span<const Corpus> translations,
                                const BleuOptions& options, unsigned threads) {
  const std::size_t n = translations.size();
  if (n < 2) throw std::invalid_argument("self_bleu_matrix: need at least two models");
  if (model_ids.size() != n) throw std::invalid_argument("self_bleu_matrix: id count mismatch");
  for (const auto& t : translations) {
    if (t.size() != translations.front().size()) {
      throw std::invalid_argument("self_bleu_matrix: models translated different valid sets");
    }
  }

  SelfBleuMatrix matrix;
  matrix.model_ids.assign(model_ids.begin(), model_ids.end());
  matrix.values.assign(n * n, 100.0);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }

  auto work = [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    const double v = self_bleu_pair(translations[i], translations[j], options);
    matrix.at(i, j) = v;
    matrix.at(j, i) = v;
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, pairs.size()));
  if (threads <= 1) {
    for (std::size_t k = 0; k < pairs.size(); ++k) work(k);
    return matrix;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mu;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      try {
        for (std::size_t k = next++; k < pairs.size(); k = next++) work(k);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return matrix;
}

std::vector<double> avg_self_bleu(const SelfBleuMatrix& matrix) {
  const std::size_t n = matrix.size();
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sum += matrix.at(i, j);
    }
    out[i] = sum / static_cast<double>(n - 1);
  }
  return out;
}

}  // namespace wmtkit::metrics
