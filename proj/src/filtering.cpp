#include "wmtkit/filtering.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_set>

#include "wmtkit/utf8.hpp"

namespace wmtkit::filter {

FilterRuleSet FilterRuleSet::for_language_pair(std::string_view pair_id) {
  FilterRuleSet rules;
  const auto dash = pair_id.find('-');
  if (dash == std::string_view::npos || dash == 0 || dash + 1 >= pair_id.size()) {
    throw std::invalid_argument("language pair id must look like 'en-zh', got '" +
                                std::string(pair_id) + "'");
  }
  rules.source_lang = std::string(pair_id.substr(0, dash));
  rules.target_lang = std::string(pair_id.substr(dash + 1));
  rules.zh_reject_latin = rules.source_lang == "zh" || rules.target_lang == "zh";
  return rules;
}

void FilterRuleSet::validate() const {
  if (max_len_words == 0) throw std::invalid_argument("max_len_words must be positive");
  if (max_word_chars == 0) throw std::invalid_argument("max_word_chars must be positive");
  if (!(ratio_limit > 0.0)) throw std::invalid_argument("ratio_limit must be positive");
}

std::string_view to_string(Script s) {
  switch (s) {
    case Script::latin:
      return "latin";
    case Script::han:
      return "han";
    case Script::japanese:
      return "japanese";
    case Script::unknown:
      return "unknown";
  }
  return "unknown";
}

namespace {

bool is_latin_letter(char32_t c) {
  return (c >= U'A' && c <= U'Z') || (c >= U'a' && c <= U'z') ||
         (c >= 0xC0 && c <= 0x24F && c != 0xD7 && c != 0xF7) || (c >= 0x1E00 && c <= 0x1EFF);
}

bool is_han(char32_t c) {
  return (c >= 0x4E00 && c <= 0x9FFF) || (c >= 0x3400 && c <= 0x4DBF) ||
         (c >= 0xF900 && c <= 0xFAFF) || (c >= 0x20000 && c <= 0x2A6DF);
}

bool is_kana(char32_t c) {
  return (c >= 0x3040 && c <= 0x309F) || (c >= 0x30A0 && c <= 0x30FF) ||
         (c >= 0x31F0 && c <= 0x31FF) || (c >= 0xFF66 && c <= 0xFF9F);
}

// Letters of other scripts (Cyrillic, Hangul, ...) still count toward the total.
bool is_other_letter(char32_t c) {
  return (c >= 0x370 && c <= 0x3FF) || (c >= 0x400 && c <= 0x52F) ||
         (c >= 0x590 && c <= 0x6FF) || (c >= 0xAC00 && c <= 0xD7AF) ||
         (c >= 0x1100 && c <= 0x11FF) || (c >= 0x900 && c <= 0xDFF);
}

std::string_view text_of(const Sentence& s, std::string& scratch) {
  if (!s.raw.empty()) return s.raw;
  scratch = text::join(s.tokens);
  return scratch;
}

}  // namespace

Script detect_language_script(const Sentence& sentence) {
  std::string scratch;
  std::size_t latin = 0, han = 0, kana = 0, total = 0;
  for (char32_t c : utf8::decode_lossy(text_of(sentence, scratch))) {
    if (is_latin_letter(c)) {
      ++latin;
    } else if (is_han(c)) {
      ++han;
    } else if (is_kana(c)) {
      ++kana;
    } else if (!is_other_letter(c)) {
      continue;
    }
    ++total;
  }
  if (total == 0) return Script::unknown;
  const auto dominant = [total](std::size_t n) { return 2 * n > total; };
  if (kana > 0 && dominant(kana + han)) return Script::japanese;
  if (dominant(latin)) return Script::latin;
  if (dominant(han)) return Script::han;
  return Script::unknown;
}

std::string ScriptDetector::detect(const Sentence& sentence) const {
  return std::string(to_string(detect_language_script(sentence)));
}

PredictionsDetector::PredictionsDetector(std::map<std::string, std::string> predictions)
    : predictions_(std::move(predictions)) {}

PredictionsDetector PredictionsDetector::from_tsv(std::istream& in) {
  std::map<std::string, std::string> preds;
  std::size_t line_no = 0;
  for (const auto& line : text::read_lines(in)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::invalid_argument("predictions line " + std::to_string(line_no) +
                                  ": expected 'label<TAB>text'");
    }
    preds.emplace(line.substr(tab + 1), line.substr(0, tab));
  }
  return PredictionsDetector(std::move(preds));
}

std::string PredictionsDetector::detect(const Sentence& sentence) const {
  std::string scratch;
  auto it = predictions_.find(std::string(text_of(sentence, scratch)));
  if (it == predictions_.end()) throw DetectionError("no prediction for sentence");
  std::string_view label = it->second;
  constexpr std::string_view prefix = "__label__";
  if (label.starts_with(prefix)) label.remove_prefix(prefix.size());
  return std::string(label);
}

bool language_matches(std::string_view guess, std::string_view lang) {
  if (guess == lang) return true;
  static const std::set<std::string_view> latin_langs = {
      "en", "de", "fr", "es", "it", "pt", "nl", "cs", "pl", "ro", "fi", "et", "lv", "lt",
      "hu", "tr", "sv", "da", "no", "is", "hr", "sl", "sk", "id", "ms", "vi", "ha"};
  if (guess == "latin") return latin_langs.contains(lang);
  if (guess == "han") return lang == "zh" || lang == "ja";
  if (guess == "japanese") return lang == "ja";
  return false;
}

bool has_invalid_unicode(std::string_view raw) {
  if (!utf8::is_valid(raw)) return true;
  for (char32_t c : utf8::decode(raw)) {
    if (c == utf8::kReplacementChar) return true;
    if ((c < 0x20 && c != U'\t') || c == 0x7F || (c >= 0x80 && c <= 0x9F)) return true;
  }
  return false;
}

bool zh_contains_latin(const Sentence& sentence) {
  std::string scratch;
  for (char c : text_of(sentence, scratch)) {
    if ((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z')) return true;
  }
  return false;
}

ParallelPair make_pair(std::string_view source, std::string_view target) {
  return {text::tokenize_lossy(source, text::TokenizeMode::word),
          text::tokenize_lossy(target, text::TokenizeMode::word)};
}

namespace {

std::size_t length_units(const Sentence& s, std::string_view lang) {
  if (!text::is_char_level_language(lang)) return s.tokens.size();
  std::size_t n = 0;
  std::string scratch;
  for (char32_t c : utf8::decode_lossy(text_of(s, scratch))) {
    if (!utf8::is_space(c)) ++n;
  }
  return n;
}

// Word rules do not apply to ja/zh sides.
bool too_many_words(const Sentence& s, std::string_view lang, std::size_t limit) {
  return !text::is_char_level_language(lang) && s.tokens.size() > limit;
}

bool has_long_word(const Sentence& s, std::string_view lang, std::size_t limit) {
  if (text::is_char_level_language(lang)) return false;
  return std::any_of(s.tokens.begin(), s.tokens.end(),
                     [limit](const std::string& t) { return utf8::length(t) > limit; });
}

}  // namespace

std::vector<std::string_view> rule_ids() {
  return {"unicode", "length", "word_chars", "ratio", "langid", "zh_latin"};
}

std::vector<std::string> check_rule(std::string_view rule, const ParallelPair& pair,
                                    const FilterRuleSet& rules, const LanguageDetector& detector) {
  std::vector<std::string> out;
  const auto& src = pair.source;
  const auto& tgt = pair.target;
  if (rule == "unicode") {
    if (rules.unicode_check && (has_invalid_unicode(src) || has_invalid_unicode(tgt))) {
      out.emplace_back(reason::invalid_unicode);
    }
  } else if (rule == "length") {
    if (too_many_words(src, rules.source_lang, rules.max_len_words) ||
        too_many_words(tgt, rules.target_lang, rules.max_len_words)) {
      out.emplace_back(reason::max_len);
    }
  } else if (rule == "word_chars") {
    if (has_long_word(src, rules.source_lang, rules.max_word_chars) ||
        has_long_word(tgt, rules.target_lang, rules.max_word_chars)) {
      out.emplace_back(reason::max_word_chars);
    }
  } else if (rule == "ratio") {
    const double a = static_cast<double>(length_units(src, rules.source_lang));
    const double b = static_cast<double>(length_units(tgt, rules.target_lang));
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);
    if (lo == 0.0 || hi / lo > rules.ratio_limit) out.emplace_back(reason::ratio);
  } else if (rule == "langid") {
    if (rules.langid_check) {
      bool mismatch = false;
      bool failed = false;
      for (const auto* side : {&src, &tgt}) {
        const auto& lang = side == &src ? rules.source_lang : rules.target_lang;
        try {
          if (!language_matches(detector.detect(*side), lang)) mismatch = true;
        } catch (const DetectionError&) {
          failed = true;
        }
      }
      if (mismatch) out.emplace_back(reason::langid);
      if (failed) out.emplace_back(reason::langid_error);
    }
  } else if (rule == "zh_latin") {
    if (rules.zh_reject_latin && ((rules.source_lang == "zh" && zh_contains_latin(src)) ||
                                  (rules.target_lang == "zh" && zh_contains_latin(tgt)))) {
      out.emplace_back(reason::zh_latin);
    }
  } else {
    throw std::invalid_argument("unknown filter rule '" + std::string(rule) + "'");
  }
  return out;
}

Verdict filter_pair(const ParallelPair& pair, const FilterRuleSet& rules,
                    const LanguageDetector& detector) {
  Verdict v;
  for (auto rule : rule_ids()) {
    for (auto& r : check_rule(rule, pair, rules, detector)) v.reasons.push_back(std::move(r));
  }
  v.kept = v.reasons.empty();
  return v;
}

std::string dedup_key(const ParallelPair& pair) {
  auto normalize = [](const Sentence& s) {
    std::string scratch;
    std::string out;
    bool pending_space = false;
    for (char32_t c : utf8::decode_lossy(text_of(s, scratch))) {
      if (utf8::is_space(c)) {
        pending_space = !out.empty();
        continue;
      }
      if (pending_space) out.push_back(' ');
      pending_space = false;
      utf8::append(out, c);
    }
    return out;
  };
  return normalize(pair.source) + '\t' + normalize(pair.target);
}

FilterResult filter_corpus(const std::vector<ParallelPair>& pairs, const FilterRuleSet& rules,
                           const LanguageDetector& detector, unsigned threads) {
  rules.validate();
  std::vector<Verdict> verdicts(pairs.size());

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, pairs.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < pairs.size(); ++i) verdicts[i] = filter_pair(pairs[i], rules, detector);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        try {
          for (std::size_t i = next++; i < pairs.size(); i = next++) {
            verdicts[i] = filter_pair(pairs[i], rules, detector);
          }
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
  }

  FilterResult result;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    Verdict v = std::move(verdicts[i]);
    if (rules.dedup && !seen.insert(dedup_key(pairs[i])).second) {
      v.reasons.emplace_back(reason::duplicate);
      v.kept = false;
    }
    if (v.kept) {
      result.kept.push_back(pairs[i]);
    } else {
      result.rejected.push_back({i, pairs[i], std::move(v)});
    }
  }
  return result;
}

double percentile(std::vector<double> values, double pct) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = (static_cast<double>(values.size()) - 1.0) * pct / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

MonolingualResult filter_monolingual(const std::vector<Sentence>& corpus, const lm::NgramLm& lm,
                                     double percentile_threshold) {
  if (!(percentile_threshold > 0.0 && percentile_threshold <= 100.0)) {
    throw std::invalid_argument("percentile threshold must lie in (0, 100]");
  }
  MonolingualResult result;
  if (corpus.empty()) return result;
  result.perplexities.reserve(corpus.size());
  for (const auto& s : corpus) result.perplexities.push_back(lm::lm_perplexity(lm, s));
  result.threshold = percentile(result.perplexities, percentile_threshold);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (result.perplexities[i] > result.threshold) {
      result.rejected.push_back(i);
    } else {
      result.kept.push_back(corpus[i]);
    }
  }
  return result;
}

}  // namespace wmtkit::filter
