#pragma once

// Synthetic-data noising, target denoising, tagging and R2L transforms.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wmtkit/random.hpp"
#include "wmtkit/textcore.hpp"

namespace wmtkit::augment {

using text::ParallelPair;
using text::Sentence;

enum class Granularity {
  token,  // every subword is a unit
  word,   // subwords glued by the BPE end-of-word marker form one unit
  span,   // runs of span_len words
};

std::optional<Granularity> parse_granularity(std::string_view name);
std::string_view to_string(Granularity g);

struct NoiseSpec {
  Granularity granularity = Granularity::word;
  double p_replace = 0.2;
  double p_delete = 0.2;
  double p_permute = 0.2;
  std::size_t span_len = 3;
  std::size_t permute_window = 3;  // in units (blocks of span_len words for span)
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on probabilities outside [0, 1] or zero lengths.
  void validate() const;
};

struct NoiseOps {
  bool replace = false;
  bool remove = false;
  bool permute = false;
};

struct NoiseOutcome {
  Sentence sentence;
  NoiseOps enabled;  // operations drawn for this sentence
};

/// Sorted unique tokens of a corpus; the default replacement vocabulary.
std::vector<std::string> build_vocab(std::span<const Sentence> corpus);

/// Draws the three operations independently, then applies the enabled ones
/// in the order replace, delete, permute:
///   replace: a uniformly chosen unit (span: window of span_len words) is
///            overwritten with uniformly drawn vocabulary tokens;
///   delete:  a uniformly chosen unit is removed, never emptying the sentence;
///   permute: a uniformly placed window of permute_window units is shuffled.
/// An empty `vocab` falls back to the sentence's own tokens.
NoiseOutcome apply_noise_traced(const Sentence& sentence, const NoiseSpec& spec,
                                std::span<const std::string> vocab, rng::Engine& engine);

Sentence apply_noise(const Sentence& sentence, const NoiseSpec& spec,
                     std::span<const std::string> vocab, rng::Engine& engine);

/// Noise realisation for sentence i depends only on (spec.seed, epoch, i),
/// so sharding over `threads` workers reproduces the serial output.
std::vector<Sentence> onthefly_noise_stream(std::span<const Sentence> corpus,
                                            const NoiseSpec& spec,
                                            std::span<const std::string> vocab,
                                            std::uint64_t epoch, unsigned threads = 1);

struct DenoiseSpec {
  double select_prob = 0.3;
  double replace_prob = 0.15;
};

struct DenoiseOutcome {
  ParallelPair pair;
  bool selected = false;
  std::vector<std::size_t> replaced;  // target positions that drew a replacement
};

/// Selected pairs get each target token replaced, with replace_prob, by a
/// uniformly drawn token of the same (original) target sentence. The source
/// side is never touched.
DenoiseOutcome target_denoise_traced(const ParallelPair& pair, rng::Engine& engine,
                                     const DenoiseSpec& spec = {});

ParallelPair target_denoise(const ParallelPair& pair, rng::Engine& engine,
                            const DenoiseSpec& spec = {});

inline constexpr std::string_view kBackTranslationTag = "<BT>";

/// Prepends `tag`; throws std::invalid_argument if the tag is empty or
/// contains whitespace.
Sentence tag_sentence(const Sentence& sentence, std::string_view tag = kBackTranslationTag);

/// Removes one leading `tag` if present.
Sentence strip_tag(const Sentence& sentence, std::string_view tag = kBackTranslationTag);

Sentence reverse_sentence(const Sentence& sentence);

}  // namespace wmtkit::augment
