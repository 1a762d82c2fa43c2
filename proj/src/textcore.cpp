#include "wmtkit/textcore.hpp"

#include <algorithm>
#include <stdexcept>

#include "wmtkit/utf8.hpp"

namespace wmtkit::text {

std::optional<TokenizeMode> parse_tokenize_mode(std::string_view name) {
  if (name == "word") return TokenizeMode::word;
  if (name == "char") return TokenizeMode::char_level;
  if (name == "none" || name == "whitespace") return TokenizeMode::whitespace;
  return std::nullopt;
}

std::string_view to_string(TokenizeMode mode) {
  switch (mode) {
    case TokenizeMode::word:
      return "word";
    case TokenizeMode::char_level:
      return "char";
    case TokenizeMode::whitespace:
      return "none";
  }
  return "word";
}

bool is_char_level_language(std::string_view lang) { return lang == "ja" || lang == "zh"; }

Sentence::Sentence(std::vector<std::string> toks) : tokens(std::move(toks)), raw(join(tokens)) {}

namespace {

bool is_digit(char32_t c) { return c >= U'0' && c <= U'9'; }

Sentence tokenize_codepoints(const std::u32string& cps, std::string_view original,
                             TokenizeMode mode) {
  Sentence out;
  out.raw = std::string(original);
  std::string current;
  auto flush = [&] {
    if (!current.empty()) out.tokens.push_back(std::move(current));
    current.clear();
  };

  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t c = cps[i];
    if (utf8::is_space(c)) {
      flush();
      continue;
    }
    switch (mode) {
      case TokenizeMode::whitespace:
        utf8::append(current, c);
        break;
      case TokenizeMode::char_level:
        utf8::append(current, c);
        flush();
        break;
      case TokenizeMode::word: {
        // 13a-style: keep "3.5" and "1,000" together.
        const bool numeric_sep = (c == U'.' || c == U',') && i > 0 && i + 1 < cps.size() &&
                                 is_digit(cps[i - 1]) && is_digit(cps[i + 1]);
        if (utf8::is_punct(c) && !numeric_sep) {
          flush();
          utf8::append(current, c);
          flush();
        } else {
          utf8::append(current, c);
        }
        break;
      }
    }
  }
  flush();
  return out;
}

}  // namespace

Sentence tokenize(std::string_view text, TokenizeMode mode) {
  return tokenize_codepoints(utf8::decode(text), text, mode);
}

Sentence tokenize_lossy(std::string_view text, TokenizeMode mode) {
  return tokenize_codepoints(utf8::decode_lossy(text), text, mode);
}

std::string join(std::span<const std::string> tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// BPE

BpeModel::BpeModel(std::vector<BpeMerge> merges) : merges_(std::move(merges)) {
  for (std::size_t i = 0; i < merges_.size(); ++i) {
    auto [it, inserted] = ranks_.emplace(std::pair{merges_[i].left, merges_[i].right}, i);
    if (!inserted) {
      throw std::invalid_argument("duplicate BPE merge: " + merges_[i].left + " " +
                                  merges_[i].right);
    }
  }
}

std::optional<std::size_t> BpeModel::rank(const std::string& left,
                                          const std::string& right) const {
  auto it = ranks_.find({left, right});
  if (it == ranks_.end()) return std::nullopt;
  return it->second;
}

namespace {

std::vector<std::string> initial_symbols(std::string_view word) {
  std::vector<std::string> symbols;
  const auto cps = utf8::decode_lossy(word);
  symbols.reserve(cps.size());
  for (char32_t c : cps) {
    std::string s;
    utf8::append(s, c);
    symbols.push_back(std::move(s));
  }
  if (!symbols.empty()) symbols.back() += kEndOfWord;
  return symbols;
}

// Merges every non-overlapping occurrence of (left, right), scanning left to right.
void merge_pair(std::vector<std::string>& symbols, const std::string& left,
                const std::string& right) {
  std::vector<std::string> out;
  out.reserve(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
      out.push_back(left + right);
      ++i;
    } else {
      out.push_back(std::move(symbols[i]));
    }
  }
  symbols = std::move(out);
}

}  // namespace

std::vector<std::string> BpeModel::segment(std::string_view word) const {
  auto symbols = initial_symbols(word);
  while (symbols.size() > 1) {
    std::optional<std::size_t> best;
    std::size_t best_pos = 0;
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      auto r = rank(symbols[i], symbols[i + 1]);
      if (r && (!best || *r < *best)) {
        best = r;
        best_pos = i;
      }
    }
    if (!best) break;
    const std::string left = symbols[best_pos];
    const std::string right = symbols[best_pos + 1];
    merge_pair(symbols, left, right);
  }
  return symbols;
}

BpeModel bpe_learn(std::span<const Sentence> corpus, std::size_t num_merges) {
  std::map<std::string, std::size_t> word_freq;
  for (const auto& s : corpus) {
    for (const auto& t : s.tokens) ++word_freq[t];
  }

  struct Word {
    std::vector<std::string> symbols;
    std::size_t freq;
  };
  std::vector<Word> words;
  words.reserve(word_freq.size());
  for (const auto& [w, f] : word_freq) words.push_back({initial_symbols(w), f});

  std::vector<BpeMerge> merges;
  while (merges.size() < num_merges) {
    std::map<std::pair<std::string, std::string>, std::size_t> pair_freq;
    for (const auto& w : words) {
      for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
        pair_freq[{w.symbols[i], w.symbols[i + 1]}] += w.freq;
      }
    }
    if (pair_freq.empty()) break;

    // std::map iterates in lexicographic order, so the first maximum wins ties.
    auto best = pair_freq.begin();
    for (auto it = pair_freq.begin(); it != pair_freq.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    const auto [left, right] = best->first;
    for (auto& w : words) merge_pair(w.symbols, left, right);
    merges.push_back({left, right});
  }
  return BpeModel(std::move(merges));
}

Sentence bpe_apply(const Sentence& sentence, const BpeModel& model) {
  std::vector<std::string> out;
  out.reserve(sentence.tokens.size() * 2);
  for (const auto& tok : sentence.tokens) {
    auto pieces = model.segment(tok);
    std::move(pieces.begin(), pieces.end(), std::back_inserter(out));
  }
  return Sentence(std::move(out));
}

Sentence bpe_join(const Sentence& sentence) {
  std::vector<std::string> out;
  std::string current;
  for (const auto& piece : sentence.tokens) {
    std::string_view p = piece;
    if (p.ends_with(kEndOfWord)) {
      current += p.substr(0, p.size() - kEndOfWord.size());
      out.push_back(std::move(current));
      current.clear();
    } else {
      current += p;
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return Sentence(std::move(out));
}

BpeModel read_merges(std::istream& in) {
  std::vector<BpeMerge> merges;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(in)) {
    ++line_no;
    if (line.empty() || line.starts_with("#version")) continue;
    const auto sep = line.find(' ');
    if (sep == std::string::npos || sep == 0 || sep + 1 >= line.size() ||
        line.find(' ', sep + 1) != std::string::npos) {
      throw std::invalid_argument("malformed merge at line " + std::to_string(line_no));
    }
    merges.push_back({line.substr(0, sep), line.substr(sep + 1)});
  }
  return BpeModel(std::move(merges));
}

void write_merges(std::ostream& out, const BpeModel& model) {
  for (const auto& m : model.merges()) out << m.left << ' ' << m.right << '\n';
}

// ---------------------------------------------------------------------------

NgramCounts ngrams(std::span<const std::string> tokens, std::size_t n) {
  if (n == 0) throw std::invalid_argument("n-gram order must be >= 1");
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                   tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

namespace {

constexpr std::string_view kGermanOpen = "„";   // „
constexpr std::string_view kGermanClose = "“";  // “

std::size_t count_quotes(std::string_view s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '"'));
}

// `open` carries the pairing state across calls.
std::string replace_quotes(std::string_view s, bool& open) {
  std::string out;
  out.reserve(s.size() + 4);
  for (char c : s) {
    if (c == '"') {
      out += open ? kGermanClose : kGermanOpen;
      open = !open;
    } else {
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string germanize_quotes(std::string_view text) {
  if (count_quotes(text) % 2 != 0) return std::string(text);
  bool open = false;
  return replace_quotes(text, open);
}

Sentence germanize_quotes(const Sentence& sentence) {
  std::size_t n = 0;
  for (const auto& t : sentence.tokens) n += count_quotes(t);
  Sentence out = sentence;
  if (n % 2 == 0 && n > 0) {
    bool open = false;
    for (auto& t : out.tokens) t = replace_quotes(t, open);
  }
  out.raw = germanize_quotes(sentence.raw);
  return out;
}

std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace wmtkit::text
