#pragma once

// Rule-based parallel-corpus filtering and LM-based monolingual filtering.

#include <cstddef>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "wmtkit/ngram_lm.hpp"
#include "wmtkit/textcore.hpp"

namespace wmtkit::filter {

using text::ParallelPair;
using text::Sentence;

/// Stable identifiers used in verdicts and rejection reports.
namespace reason {
inline constexpr std::string_view max_len = "max_len";
inline constexpr std::string_view max_word_chars = "max_word_chars";
inline constexpr std::string_view ratio = "ratio";
inline constexpr std::string_view duplicate = "duplicate";
inline constexpr std::string_view langid = "langid";
inline constexpr std::string_view langid_error = "langid_error";
inline constexpr std::string_view invalid_unicode = "invalid_unicode";
inline constexpr std::string_view zh_latin = "zh_latin";
}  // namespace reason

struct FilterRuleSet {
  std::size_t max_len_words = 100;
  std::size_t max_word_chars = 40;
  double ratio_limit = 4.0;
  bool dedup = true;
  bool langid_check = true;
  bool unicode_check = true;
  bool zh_reject_latin = false;
  std::string source_lang = "en";
  std::string target_lang = "de";

  /// Defaults for a language pair id such as "en-zh"; enables the
  /// Latin-in-Chinese rule when either side is zh.
  static FilterRuleSet for_language_pair(std::string_view pair_id);

  /// Throws std::invalid_argument on non-positive thresholds.
  void validate() const;
};

struct Verdict {
  bool kept = true;
  std::vector<std::string> reasons;  // empty iff kept
};

enum class Script { latin, han, japanese, unknown };

std::string_view to_string(Script s);

class DetectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pluggable language identification. detect() returns a language code
/// ("en", "zh", ...) or a script name ("latin", "han", "japanese",
/// "unknown"); it throws DetectionError when it cannot answer.
class LanguageDetector {
 public:
  virtual ~LanguageDetector() = default;
  virtual std::string detect(const Sentence& sentence) const = 0;
};

/// Majority-script heuristic over letters; a script needs strictly more
/// than half of the letters to win. Any kana plus a kana+Han majority reads
/// as Japanese.
Script detect_language_script(const Sentence& sentence);

class ScriptDetector final : public LanguageDetector {
 public:
  std::string detect(const Sentence& sentence) const override;
};

/// Backed by precomputed predictions (e.g. fastText output) keyed by the raw
/// sentence text. Labels may carry a "__label__" prefix.
class PredictionsDetector final : public LanguageDetector {
 public:
  explicit PredictionsDetector(std::map<std::string, std::string> predictions);

  /// Reads "label<TAB>text" lines.
  static PredictionsDetector from_tsv(std::istream& in);

  std::string detect(const Sentence& sentence) const override;

 private:
  std::map<std::string, std::string> predictions_;
};

/// True when `guess` (code or script name) is compatible with `lang`.
bool language_matches(std::string_view guess, std::string_view lang);

/// Invalid UTF-8 (including encoded surrogates), U+FFFD, or a control
/// character other than TAB (C0, DEL, C1).
bool has_invalid_unicode(std::string_view raw);
inline bool has_invalid_unicode(const Sentence& s) { return has_invalid_unicode(s.raw); }

bool zh_contains_latin(const Sentence& sentence);

/// Builds a word-mode pair from raw lines without throwing on bad UTF-8.
ParallelPair make_pair(std::string_view source, std::string_view target);

/// Per-pair rule names in canonical reporting order.
std::vector<std::string_view> rule_ids();

/// Reason ids raised by a single rule; rules are independent of each other.
std::vector<std::string> check_rule(std::string_view rule, const ParallelPair& pair,
                                    const FilterRuleSet& rules, const LanguageDetector& detector);

/// Evaluates every enabled rule except dedup (which needs corpus state) and
/// reports all violations in a fixed order. The word-count and word-length
/// rules skip ja/zh sides; the ratio rule counts their characters.
Verdict filter_pair(const ParallelPair& pair, const FilterRuleSet& rules,
                    const LanguageDetector& detector);

struct Rejection {
  std::size_t index;  // position in the input
  ParallelPair pair;
  Verdict verdict;
};

struct FilterResult {
  std::vector<ParallelPair> kept;
  std::vector<Rejection> rejected;
};

/// Whitespace-trimmed, whitespace-collapsed "source\ttarget" dedup key.
std::string dedup_key(const ParallelPair& pair);

/// Per-pair rules run on `threads` workers; dedup is a serial pass in input
/// order, so the first occurrence of a pair always wins.
FilterResult filter_corpus(const std::vector<ParallelPair>& pairs, const FilterRuleSet& rules,
                           const LanguageDetector& detector, unsigned threads = 1);

// ---------------------------------------------------------------------------
// Monolingual LM filter

struct MonolingualResult {
  std::vector<Sentence> kept;
  std::vector<std::size_t> rejected;  // input indices
  std::vector<double> perplexities;
  double threshold = 0.0;
};

/// Linear-interpolated percentile of `values` (same convention as numpy).
double percentile(std::vector<double> values, double pct);

/// Rejects sentences whose perplexity is strictly above the given
/// percentile of the corpus perplexities. pct must lie in (0, 100].
MonolingualResult filter_monolingual(const std::vector<Sentence>& corpus, const lm::NgramLm& lm,
                                     double percentile_threshold = 95.0);

}  // namespace wmtkit::filter
