#pragma once

// Tokenization, BPE, n-grams and small text normalizations shared by the
// rest of the toolkit.

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace wmtkit::text {

enum class TokenizeMode {
  word,        // whitespace split, then punctuation split off word characters
  char_level,  // one token per non-whitespace codepoint
  whitespace,  // whitespace split only, for pre-tokenized / BPE'd text
};

std::optional<TokenizeMode> parse_tokenize_mode(std::string_view name);
std::string_view to_string(TokenizeMode mode);

/// Languages scored and length-counted per character (ja, zh).
bool is_char_level_language(std::string_view lang);

struct Sentence {
  std::vector<std::string> tokens;
  std::string raw;

  Sentence() = default;
  explicit Sentence(std::vector<std::string> toks);
  Sentence(std::vector<std::string> toks, std::string original)
      : tokens(std::move(toks)), raw(std::move(original)) {}

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }

  friend bool operator==(const Sentence& a, const Sentence& b) { return a.tokens == b.tokens; }
};

struct ParallelPair {
  Sentence source;
  Sentence target;
};

/// Throws utf8::DecodeError on malformed input.
Sentence tokenize(std::string_view text, TokenizeMode mode);

/// Same as tokenize() but malformed bytes become U+FFFD in the tokens; raw
/// keeps the original bytes untouched.
Sentence tokenize_lossy(std::string_view text, TokenizeMode mode);

std::string join(std::span<const std::string> tokens, std::string_view sep = " ");
inline std::string join(const Sentence& s) { return join(s.tokens); }

// ---------------------------------------------------------------------------
// Byte-pair encoding

/// Appended to the last subword of every word.
inline constexpr std::string_view kEndOfWord = "</w>";

struct BpeMerge {
  std::string left;
  std::string right;

  friend auto operator<=>(const BpeMerge&, const BpeMerge&) = default;
};

class BpeModel {
 public:
  BpeModel() = default;
  /// Throws std::invalid_argument on a repeated merge.
  explicit BpeModel(std::vector<BpeMerge> merges);

  const std::vector<BpeMerge>& merges() const { return merges_; }
  std::size_t num_merges() const { return merges_.size(); }
  bool empty() const { return merges_.empty(); }

  /// Priority of a pair (lower applies first), if it is a known merge.
  std::optional<std::size_t> rank(const std::string& left, const std::string& right) const;

  /// Word segmentation of a single whitespace-free token.
  std::vector<std::string> segment(std::string_view word) const;

 private:
  std::vector<BpeMerge> merges_;
  std::map<std::pair<std::string, std::string>, std::size_t> ranks_;
};

/// Learns up to `num_merges` merges from the word-frequency table of the
/// corpus. Each step merges the most frequent adjacent pair; equal counts go
/// to the lexicographically smallest pair.
BpeModel bpe_learn(std::span<const Sentence> corpus, std::size_t num_merges);

Sentence bpe_apply(const Sentence& sentence, const BpeModel& model);

/// Inverse of bpe_apply: glues subwords until one carries the end-of-word marker.
Sentence bpe_join(const Sentence& sentence);

/// One "left right" pair per line.
BpeModel read_merges(std::istream& in);
void write_merges(std::ostream& out, const BpeModel& model);

// ---------------------------------------------------------------------------

using Ngram = std::vector<std::string>;
using NgramCounts = std::map<Ngram, std::size_t>;

/// Multiset of order-n n-grams; throws std::invalid_argument when n == 0.
NgramCounts ngrams(std::span<const std::string> tokens, std::size_t n);
inline NgramCounts ngrams(const Sentence& s, std::size_t n) { return ngrams(s.tokens, n); }

/// Rewrites paired ASCII double quotes as German „...“ quotes. A sentence
/// with an odd quote count is returned unchanged.
Sentence germanize_quotes(const Sentence& sentence);
std::string germanize_quotes(std::string_view text);

/// Reads LF-separated lines; a trailing CR on a line is dropped.
std::vector<std::string> read_lines(std::istream& in);

}  // namespace wmtkit::text
