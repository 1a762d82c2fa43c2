#include "wmtkit/augment.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include "wmtkit/utf8.hpp"

namespace wmtkit::augment {

std::optional<Granularity> parse_granularity(std::string_view name) {
  if (name == "token") return Granularity::token;
  if (name == "word") return Granularity::word;
  if (name == "span") return Granularity::span;
  return std::nullopt;
}

std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::token:
      return "token";
    case Granularity::word:
      return "word";
    case Granularity::span:
      return "span";
  }
  return "word";
}

void NoiseSpec::validate() const {
  for (double p : {p_replace, p_delete, p_permute}) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("noise probabilities must lie in [0, 1]");
  }
  if (span_len == 0) throw std::invalid_argument("span_len must be >= 1");
  if (permute_window == 0) throw std::invalid_argument("permute_window must be >= 1");
}

std::vector<std::string> build_vocab(std::span<const Sentence> corpus) {
  std::set<std::string> vocab;
  for (const auto& s : corpus) vocab.insert(s.tokens.begin(), s.tokens.end());
  return {vocab.begin(), vocab.end()};
}

namespace {

using Unit = std::vector<std::string>;

std::vector<Unit> split_units(const Sentence& s, Granularity g) {
  std::vector<Unit> units;
  const bool bpe = g != Granularity::token &&
                   std::any_of(s.tokens.begin(), s.tokens.end(), [](const std::string& t) {
                     return std::string_view(t).ends_with(text::kEndOfWord);
                   });
  if (!bpe) {
    for (const auto& t : s.tokens) units.push_back({t});
    return units;
  }
  Unit current;
  for (const auto& t : s.tokens) {
    current.push_back(t);
    if (std::string_view(t).ends_with(text::kEndOfWord)) {
      units.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) units.push_back(std::move(current));
  return units;
}

}  // namespace

NoiseOutcome apply_noise_traced(const Sentence& sentence, const NoiseSpec& spec,
                                std::span<const std::string> vocab, rng::Engine& engine) {
  spec.validate();
  NoiseOutcome out;
  out.enabled.replace = rng::bernoulli(engine, spec.p_replace);
  out.enabled.remove = rng::bernoulli(engine, spec.p_delete);
  out.enabled.permute = rng::bernoulli(engine, spec.p_permute);

  auto units = split_units(sentence, spec.granularity);
  const std::size_t width = spec.granularity == Granularity::span ? spec.span_len : 1;

  std::vector<std::string> fallback;
  if (vocab.empty()) {
    fallback = build_vocab(std::span<const Sentence>(&sentence, 1));
    vocab = fallback;
  }

  if (out.enabled.replace && !units.empty() && !vocab.empty()) {
    const std::size_t len = std::min(width, units.size());
    const std::size_t start = rng::uniform_index(engine, units.size() - len + 1);
    for (std::size_t i = start; i < start + len; ++i) {
      units[i] = {vocab[rng::uniform_index(engine, vocab.size())]};
    }
  }

  if (out.enabled.remove) {
    const std::size_t len = std::min(width, units.size());
    if (units.size() > len) {
      const std::size_t start = rng::uniform_index(engine, units.size() - len + 1);
      units.erase(units.begin() + static_cast<std::ptrdiff_t>(start),
                  units.begin() + static_cast<std::ptrdiff_t>(start + len));
    }
  }

  if (out.enabled.permute) {
    std::vector<Unit> blocks;
    for (std::size_t i = 0; i < units.size(); i += width) {
      Unit block;
      for (std::size_t j = i; j < std::min(i + width, units.size()); ++j) {
        block.insert(block.end(), units[j].begin(), units[j].end());
      }
      blocks.push_back(std::move(block));
    }
    const std::size_t w = std::min(spec.permute_window, blocks.size());
    if (w >= 2) {
      const std::size_t start = rng::uniform_index(engine, blocks.size() - w + 1);
      rng::shuffle(std::span<Unit>(blocks.data() + start, w), engine);
    }
    units = std::move(blocks);
  }

  std::vector<std::string> tokens;
  for (auto& u : units) tokens.insert(tokens.end(), u.begin(), u.end());
  out.sentence = Sentence(std::move(tokens));
  return out;
}

Sentence apply_noise(const Sentence& sentence, const NoiseSpec& spec,
                     std::span<const std::string> vocab, rng::Engine& engine) {
  return apply_noise_traced(sentence, spec, vocab, engine).sentence;
}

std::vector<Sentence> onthefly_noise_stream(std::span<const Sentence> corpus,
                                            const NoiseSpec& spec,
                                            std::span<const std::string> vocab,
                                            std::uint64_t epoch, unsigned threads) {
  spec.validate();
  std::vector<Sentence> out(corpus.size());
  auto work = [&](std::size_t i) {
    rng::Engine engine(rng::derive_seed(spec.seed, epoch, i));
    out[i] = apply_noise(corpus[i], spec, vocab, engine);
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, corpus.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < corpus.size(); ++i) work(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      try {
        for (std::size_t i = next++; i < corpus.size(); i = next++) work(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return out;
}

DenoiseOutcome target_denoise_traced(const ParallelPair& pair, rng::Engine& engine,
                                     const DenoiseSpec& spec) {
  DenoiseOutcome out{pair, false, {}};
  out.selected = rng::bernoulli(engine, spec.select_prob);
  if (!out.selected) return out;

  const auto& original = pair.target.tokens;
  auto tokens = original;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (rng::bernoulli(engine, spec.replace_prob)) {
      out.replaced.push_back(i);
      tokens[i] = original[rng::uniform_index(engine, original.size())];
    }
  }
  out.pair.target = Sentence(std::move(tokens));
  return out;
}

ParallelPair target_denoise(const ParallelPair& pair, rng::Engine& engine,
                            const DenoiseSpec& spec) {
  return target_denoise_traced(pair, engine, spec).pair;
}

Sentence tag_sentence(const Sentence& sentence, std::string_view tag) {
  if (tag.empty()) throw std::invalid_argument("tag must not be empty");
  for (char32_t c : utf8::decode(tag)) {
    if (utf8::is_space(c)) throw std::invalid_argument("tag must not contain whitespace");
  }
  std::vector<std::string> tokens;
  tokens.reserve(sentence.size() + 1);
  tokens.emplace_back(tag);
  tokens.insert(tokens.end(), sentence.tokens.begin(), sentence.tokens.end());
  return Sentence(std::move(tokens));
}

Sentence strip_tag(const Sentence& sentence, std::string_view tag) {
  if (sentence.tokens.empty() || sentence.tokens.front() != tag) return sentence;
  return Sentence(std::vector<std::string>(sentence.tokens.begin() + 1, sentence.tokens.end()));
}

Sentence reverse_sentence(const Sentence& sentence) {
  return Sentence(std::vector<std::string>(sentence.tokens.rbegin(), sentence.tokens.rend()));
}

}  // namespace wmtkit::augment
