#include "wmtkit/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "wmtkit/augment.hpp"
#include "wmtkit/decoder.hpp"
#include "wmtkit/ensemble.hpp"
#include "wmtkit/filtering.hpp"
#include "wmtkit/kernel_invariants.hpp"
#include "wmtkit/metrics.hpp"
#include "wmtkit/ngram_lm.hpp"
#include "wmtkit/schedulers.hpp"
#include "wmtkit/textcore.hpp"
#include "wmtkit/utf8.hpp"

#ifndef WMTKIT_VERSION
#define WMTKIT_VERSION "0.0.0"
#endif

namespace wmtkit::cli {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string data_error_message(const std::string& file, std::size_t line, const std::string& msg) {
  if (file.empty()) return msg;
  if (line == 0) return file + ": " + msg;
  return file + ":" + std::to_string(line) + ": " + msg;
}

}  // namespace

DataError::DataError(const std::string& file, std::size_t line, const std::string& message)
    : std::runtime_error(data_error_message(file, line, message)), file_(file), line_(line) {}

const char* version() { return WMTKIT_VERSION; }

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

bool verbose() {
  const char* v = std::getenv("WMTKIT_VERBOSE");
  return v != nullptr && *v != '\0' && std::string_view(v) != "0";
}

struct Io {
  std::ostream& out;
  std::ostream& err;

  void log(const std::string& message) const {
    if (verbose()) err << "[wmtkit] " << message << '\n';
  }
};

// ---------------------------------------------------------------------------
// File helpers

std::vector<std::string> read_file_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path, 0, "cannot open file");
  return text::read_lines(in);
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path, 0, "cannot open file");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw DataError(path, 0, std::string("invalid JSON: ") + e.what());
  }
}

std::unique_ptr<std::ostream> open_output(const std::string& path) {
  auto f = std::make_unique<std::ofstream>(path, std::ios::binary);
  if (!*f) throw DataError(path, 0, "cannot open for writing");
  return f;
}

// Relative paths inside a manifest are resolved against the manifest's directory.
std::string resolve(const std::string& base_file, const std::string& path) {
  const fs::path p(path);
  if (p.is_absolute()) return path;
  return (fs::path(base_file).parent_path() / p).lexically_normal().string();
}

metrics::Corpus tokenize_lines(const std::string& path, const std::vector<std::string>& lines,
                               text::TokenizeMode mode) {
  metrics::Corpus corpus;
  corpus.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      corpus.push_back(text::tokenize(lines[i], mode));
    } catch (const utf8::DecodeError& e) {
      throw DataError(path, i + 1,
                      "invalid UTF-8 at byte " + std::to_string(e.offset()) + ": " + e.what());
    }
  }
  return corpus;
}

metrics::Corpus read_corpus(const std::string& path, text::TokenizeMode mode) {
  return tokenize_lines(path, read_file_lines(path), mode);
}

void require_same_length(const std::string& path, std::size_t expected, std::size_t actual) {
  if (expected != actual) {
    throw DataError(path, std::min(expected, actual) + 1,
                    "expected " + std::to_string(expected) + " lines, found " +
                        std::to_string(actual));
  }
}

std::string shell_join(const std::vector<std::string>& tokens) { return text::join(tokens); }

// ---------------------------------------------------------------------------
// Reports

struct ReportTarget {
  std::string path;  // empty: stdout
  bool suppressed_on_stdout = false;
};

Json make_report(const std::string& command, std::uint64_t seed, Json config, Json result) {
  Json r;
  r["tool"] = "wmtkit";
  r["version"] = version();
  r["command"] = command;
  r["seed"] = seed;
  r["config"] = std::move(config);
  r["result"] = std::move(result);
  return r;
}

void emit_report(const Io& io, const ReportTarget& target, const Json& report) {
  const std::string body = report.dump(2) + "\n";
  if (!target.path.empty()) {
    auto f = open_output(target.path);
    *f << body;
    return;
  }
  if (!target.suppressed_on_stdout) io.out << body;
}

std::string fmt_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared BLEU flags

struct BleuFlags {
  std::string tokenize;  // empty: word, or char for ja/zh
  std::string lang;
  bool lowercase = false;
  std::string smooth = "none";
  std::size_t max_order = 4;

  void add_to(CLI::App* app) {
    app->add_option("--tokenize", tokenize, "Tokenization: word, char or none (whitespace)")
        ->check(CLI::IsMember({"word", "char", "none", "whitespace"}));
    app->add_option("--lang", lang, "Target language code; ja and zh default to char tokenization");
    app->add_flag("--lowercase", lowercase, "Case-insensitive matching");
    app->add_option("--smooth", smooth, "Smoothing: none or add-one")
        ->check(CLI::IsMember({"none", "add-one"}));
    app->add_option("--max-order", max_order, "Largest n-gram order")->check(CLI::Range(1, 9));
  }

  text::TokenizeMode mode() const {
    if (!tokenize.empty()) return *text::parse_tokenize_mode(tokenize);
    return text::is_char_level_language(lang) ? text::TokenizeMode::char_level
                                              : text::TokenizeMode::word;
  }

  metrics::BleuOptions options() const {
    metrics::BleuOptions o;
    o.max_order = max_order;
    o.case_sensitive = !lowercase;
    o.smoothing = smooth == "add-one" ? metrics::Smoothing::add_one : metrics::Smoothing::none;
    return o;
  }

  Json echo() const {
    Json j;
    j["tokenize"] = std::string(text::to_string(mode()));
    j["lang"] = lang;
    j["lowercase"] = lowercase;
    j["smooth"] = smooth;
    j["max_order"] = max_order;
    return j;
  }
};

Json bleu_json(const metrics::BleuReport& r) {
  Json j;
  j["score"] = r.score;
  j["precisions"] = r.precisions;
  j["matches"] = r.matches;
  j["totals"] = r.totals;
  j["brevity_penalty"] = r.brevity_penalty;
  j["hyp_len"] = r.hyp_len;
  j["ref_len"] = r.ref_len;
  return j;
}

// ---------------------------------------------------------------------------
// bleu

struct BleuCmd {
  std::string hyp;
  std::vector<std::string> refs;
  BleuFlags flags;
  std::string report;

  void add_to(CLI::App* app) {
    app->add_option("--hyp", hyp, "Hypothesis file, one sentence per line")->required();
    app->add_option("--ref", refs, "Reference file; repeat for multiple references")->required();
    flags.add_to(app);
    app->add_option("--report", report, "Write the JSON report to this file instead of stdout");
  }

  int run(const Io& io) const {
    const auto mode = flags.mode();
    const auto hyps = read_corpus(hyp, mode);
    if (hyps.empty()) throw DataError(hyp, 0, "no sentences");
    std::vector<std::vector<text::Sentence>> per_hyp(hyps.size());
    for (const auto& ref_path : refs) {
      const auto ref = read_corpus(ref_path, mode);
      require_same_length(ref_path, hyps.size(), ref.size());
      for (std::size_t i = 0; i < ref.size(); ++i) per_hyp[i].push_back(ref[i]);
    }
    io.log("scoring " + std::to_string(hyps.size()) + " sentences");
    const auto result = metrics::corpus_bleu(hyps, per_hyp, flags.options());

    Json config = flags.echo();
    config["hyp"] = hyp;
    config["refs"] = refs;
    Json res = bleu_json(result);
    res["sentences"] = hyps.size();
    emit_report(io, {report}, make_report("bleu", 0, std::move(config), std::move(res)));
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// selfbleu

struct ManifestEntry {
  std::string id;
  std::string path;
};

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  const Json m = read_json_file(path);
  std::vector<ManifestEntry> out;
  if (m.is_object()) {
    for (const auto& [id, file] : m.items()) {
      if (!file.is_string()) throw DataError(path, 0, "model '" + id + "' needs a file path");
      out.push_back({id, resolve(path, file.get<std::string>())});
    }
  } else if (m.is_array()) {
    for (const auto& e : m) {
      if (!e.is_object() || !e.contains("id") || !e.contains("translation")) {
        throw DataError(path, 0, "manifest entries need 'id' and 'translation'");
      }
      out.push_back({e["id"].get<std::string>(), resolve(path, e["translation"].get<std::string>())});
    }
  } else {
    throw DataError(path, 0, "manifest must be an object or an array");
  }
  if (out.size() < 2) throw DataError(path, 0, "manifest needs at least two models");
  return out;
}

std::vector<metrics::Corpus> read_translations(const std::vector<ManifestEntry>& entries,
                                               text::TokenizeMode mode) {
  std::vector<metrics::Corpus> out;
  for (const auto& e : entries) {
    out.push_back(read_corpus(e.path, mode));
    require_same_length(e.path, out.front().size(), out.back().size());
  }
  if (out.front().empty()) throw DataError(entries.front().path, 0, "no sentences");
  return out;
}

struct SelfBleuCmd {
  std::string manifest;
  bool multi_ref = false;
  unsigned threads = 1;
  BleuFlags flags;
  std::string report;

  void add_to(CLI::App* app) {
    app->add_option("--manifest", manifest,
                    "JSON object {id: file} or array [{\"id\", \"translation\"}]")
        ->required();
    app->add_flag("--multi-ref", multi_ref,
                  "Also score each model against all other models as joint references");
    app->add_option("--threads", threads, "Worker threads (0 = all cores)");
    flags.add_to(app);
    app->add_option("--report", report, "Write the JSON report to this file instead of stdout");
  }

  int run(const Io& io) const {
    const auto entries = read_manifest(manifest);
    const auto translations = read_translations(entries, flags.mode());
    std::vector<std::string> ids;
    for (const auto& e : entries) ids.push_back(e.id);
    io.log("computing " + std::to_string(ids.size() * (ids.size() - 1) / 2) + " pairs");
    const auto matrix = metrics::self_bleu_matrix(ids, translations, flags.options(), threads);
    const auto avg = metrics::avg_self_bleu(matrix);

    Json res;
    res["ids"] = ids;
    Json rows = Json::array();
    for (std::size_t i = 0; i < matrix.size(); ++i) {
      Json row = Json::array();
      for (std::size_t j = 0; j < matrix.size(); ++j) row.push_back(matrix.at(i, j));
      rows.push_back(std::move(row));
    }
    res["matrix"] = std::move(rows);
    res["avg_self_bleu"] = avg;
    if (multi_ref) {
      std::vector<double> mr;
      for (std::size_t i = 0; i < ids.size(); ++i) {
        mr.push_back(metrics::self_bleu_multi_ref(translations, i, flags.options()));
      }
      res["multi_ref"] = mr;
    }
    Json config = flags.echo();
    config["manifest"] = manifest;
    config["multi_ref"] = multi_ref;
    emit_report(io, {report}, make_report("selfbleu", 0, std::move(config), std::move(res)));
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// ensemble-search

struct EnsembleCmd {
  std::string pool_path;
  std::string ref;
  std::string strategy = "bsbe";
  std::size_t size = 0;
  std::size_t top_n = 0;
  std::string evaluator = "auto";
  double lambda = 1.0;
  unsigned threads = 1;
  BleuFlags flags;
  std::string report;

  void add_to(CLI::App* app) {
    app->add_option("--pool", pool_path,
                    "Pool manifest: {\"models\": [{\"id\", \"valid_bleu\", \"translation\"}], "
                    "\"references\", \"self_bleu\"}")
        ->required();
    app->add_option("--ref", ref, "Valid-set references (overrides the pool's entry)");
    app->add_option("--strategy", strategy, "bsbe, greedy or brute")
        ->check(CLI::IsMember({"bsbe", "greedy", "brute"}));
    app->add_option("--size", size, "Ensemble size c (0 = whole pool); brute force caps subsets at c");
    app->add_option("--top-n", top_n, "BSBE: only consider the N best models by weighted score");
    app->add_option("--evaluator", evaluator,
                    "Surrogate ensemble scorer: vote (needs translations), diversity, or auto")
        ->check(CLI::IsMember({"auto", "vote", "diversity"}));
    app->add_option("--lambda", lambda, "Diversity weight of the diversity evaluator");
    app->add_option("--threads", threads, "Worker threads (0 = all cores)");
    flags.add_to(app);
    app->add_option("--report", report, "Write the JSON report to this file instead of stdout");
  }

  ensemble::CandidatePool load_pool(const Io& io) const {
    const Json p = read_json_file(pool_path);
    if (!p.is_object() || !p.contains("models") || !p["models"].is_array()) {
      throw DataError(pool_path, 0, "pool needs a 'models' array");
    }
    std::vector<std::string> ids;
    std::vector<double> bleu;
    std::vector<std::string> files;
    for (const auto& m : p["models"]) {
      if (!m.is_object() || !m.contains("id")) throw DataError(pool_path, 0, "model without 'id'");
      ids.push_back(m["id"].get<std::string>());
      if (m.contains("valid_bleu")) bleu.push_back(m["valid_bleu"].get<double>());
      if (m.contains("translation")) files.push_back(resolve(pool_path, m["translation"].get<std::string>()));
    }
    if (ids.empty()) throw DataError(pool_path, 0, "pool has no models");
    if (!bleu.empty() && bleu.size() != ids.size()) {
      throw DataError(pool_path, 0, "valid_bleu must be given for every model or none");
    }
    if (!files.empty() && files.size() != ids.size()) {
      throw DataError(pool_path, 0, "translation must be given for every model or none");
    }
    std::string ref_path = ref;
    if (ref_path.empty() && p.contains("references")) {
      ref_path = resolve(pool_path, p["references"].get<std::string>());
    }

    std::vector<metrics::Corpus> translations;
    metrics::Corpus references;
    if (!files.empty()) {
      std::vector<ManifestEntry> entries;
      for (std::size_t i = 0; i < ids.size(); ++i) entries.push_back({ids[i], files[i]});
      translations = read_translations(entries, flags.mode());
      if (!ref_path.empty()) {
        references = read_corpus(ref_path, flags.mode());
        require_same_length(ref_path, translations.front().size(), references.size());
      }
    }

    try {
      if (p.contains("self_bleu")) {
        if (bleu.empty()) throw DataError(pool_path, 0, "a precomputed self_bleu matrix needs valid_bleu");
        metrics::SelfBleuMatrix matrix;
        matrix.model_ids = ids;
        const Json& rows = p["self_bleu"];
        if (!rows.is_array() || rows.size() != ids.size()) {
          throw DataError(pool_path, 0, "self_bleu must be an n x n array");
        }
        for (const auto& row : rows) {
          if (!row.is_array() || row.size() != ids.size()) {
            throw DataError(pool_path, 0, "self_bleu must be an n x n array");
          }
          for (const auto& v : row) matrix.values.push_back(v.get<double>());
        }
        auto pool = ensemble::CandidatePool::from_scores(ids, bleu, std::move(matrix));
        pool.translations = std::move(translations);
        pool.references = std::move(references);
        return pool;
      }
      if (translations.empty()) {
        throw DataError(pool_path, 0, "pool needs either translations or a self_bleu matrix");
      }
      if (bleu.empty() && references.empty()) {
        throw DataError(pool_path, 0, "without valid_bleu the pool needs references to score models");
      }
      io.log("building Self-BLEU matrix for " + std::to_string(ids.size()) + " models");
      std::optional<std::vector<double>> given;
      if (!bleu.empty()) given = bleu;
      return ensemble::CandidatePool::from_translations(ids, std::move(translations),
                                                        std::move(references), given,
                                                        flags.options(), threads);
    } catch (const std::invalid_argument& e) {
      throw DataError(pool_path, 0, e.what());
    }
  }

  int run(const Io& io) const {
    const auto pool = load_pool(io);
    const std::size_t n = pool.size();
    const std::size_t c = size == 0 ? n : size;
    if (c > n) {
      throw UsageError("--size " + std::to_string(c) + " exceeds the pool size " + std::to_string(n));
    }

    std::string eval_name = evaluator;
    if (eval_name == "auto") eval_name = pool.has_translations() ? "vote" : "diversity";
    if (eval_name == "vote" && !pool.has_translations()) {
      throw UsageError("the vote evaluator needs translations and references in the pool");
    }
    const auto eval = eval_name == "vote" ? ensemble::make_vote_evaluator(pool, flags.options())
                                          : ensemble::make_diversity_evaluator(pool, lambda);

    ensemble::EnsembleSelection sel;
    if (strategy == "bsbe") {
      ensemble::BsbeOptions opts;
      if (top_n > 0) opts.top_n = top_n;
      sel = ensemble::bsbe_select(pool, c, opts);
      sel.score = eval(sel.chosen);
    } else if (strategy == "greedy") {
      sel = ensemble::greedy_select(pool, eval, c);
    } else {
      sel = ensemble::brute_force_select(pool, eval, c, threads);
    }
    if (sel.weighted_scores.empty() && n >= 2) {
      const auto ws = ensemble::weighted_scores(pool.valid_bleu, pool.avg_self_bleu);
      sel.weighted_scores = ws.scores;
      sel.weight = ws.weight;
    }

    Json res;
    res["ids"] = pool.ids;
    res["valid_bleu"] = pool.valid_bleu;
    res["avg_self_bleu"] = pool.avg_self_bleu;
    res["weight"] = sel.weight;
    res["weighted_scores"] = sel.weighted_scores;
    res["chosen_ids"] = sel.chosen_ids;
    res["chosen"] = sel.chosen;
    res["evaluations_used"] = sel.evaluations_used;
    res["evaluator"] = eval_name;
    if (sel.score) res["score"] = *sel.score;
    if (!sel.bsbe_trace.empty()) {
      Json steps = Json::array();
      for (const auto& s : sel.bsbe_trace) {
        Json st;
        std::vector<std::string> cands;
        for (auto i : s.candidates) cands.push_back(pool.ids[i]);
        st["candidates"] = cands;
        st["mean_self_bleu"] = s.mean_self_bleu;
        st["picked"] = pool.ids[s.picked];
        steps.push_back(std::move(st));
      }
      res["trace"] = std::move(steps);
    }
    if (!sel.greedy_trace.empty()) {
      Json steps = Json::array();
      for (const auto& s : sel.greedy_trace) {
        steps.push_back(Json{{"model", pool.ids[s.model]},
                             {"retry", s.retry},
                             {"score", s.score},
                             {"kept", s.kept}});
      }
      res["trace"] = std::move(steps);
    }
    Json cost;
    cost["greedy"] = ensemble::search_cost(ensemble::Algorithm::greedy, n);
    if (n <= 63) cost["brute_force"] = ensemble::search_cost(ensemble::Algorithm::brute_force, n);
    cost["bsbe"] = ensemble::search_cost(ensemble::Algorithm::bsbe, n);
    res["search_cost"] = std::move(cost);

    Json config = flags.echo();
    config["pool"] = pool_path;
    config["ref"] = ref;
    config["strategy"] = strategy;
    config["size"] = c;
    config["top_n"] = top_n;
    config["evaluator"] = evaluator;
    config["lambda"] = lambda;
    emit_report(io, {report}, make_report("ensemble-search", 0, std::move(config), std::move(res)));
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// filter

struct FilterCmd {
  std::string tsv, src, tgt, mono;
  std::string lang_pair = "en-de";
  std::string config_path;
  std::string out_path, rejects_path, langid_predictions;
  std::size_t max_len = 0, max_word_chars = 0;
  double ratio = 0.0;
  bool no_dedup = false, no_langid = false, no_unicode = false;
  bool zh_latin = false, no_zh_latin = false;
  unsigned threads = 1;
  // monolingual mode
  std::string lm_train, lang;
  std::size_t lm_order = 5;
  double lm_k = 0.1;
  double pct = 95.0;
  std::string report;

  void add_to(CLI::App* app) {
    auto* tsv_opt = app->add_option("--tsv", tsv, "Parallel corpus as source<TAB>target lines");
    auto* src_opt = app->add_option("--src", src, "Source side, line-aligned with --tgt");
    auto* tgt_opt = app->add_option("--tgt", tgt, "Target side, line-aligned with --src");
    auto* mono_opt = app->add_option("--mono", mono, "Monolingual corpus for LM perplexity filtering");
    src_opt->needs(tgt_opt);
    tgt_opt->needs(src_opt);
    tsv_opt->excludes(src_opt)->excludes(mono_opt);
    src_opt->excludes(mono_opt);
    app->add_option("--lang-pair", lang_pair, "Language pair id such as en-zh");
    app->add_option("--config", config_path, "JSON file with rule thresholds and switches");
    app->add_option("--out", out_path, "Kept corpus (default: stdout)");
    app->add_option("--rejects", rejects_path, "Rejection report as JSONL (line number, reasons)");
    app->add_option("--langid-predictions", langid_predictions,
                    "label<TAB>text predictions used instead of the script heuristic");
    app->add_option("--max-len", max_len, "Longest sentence in words");
    app->add_option("--max-word-chars", max_word_chars, "Longest word in characters");
    app->add_option("--ratio", ratio, "Largest length ratio between the sides");
    app->add_flag("--no-dedup", no_dedup, "Keep duplicate pairs");
    app->add_flag("--no-langid", no_langid, "Skip the language id check");
    app->add_flag("--no-unicode", no_unicode, "Skip the invalid Unicode check");
    app->add_flag("--zh-latin", zh_latin, "Reject Chinese sentences containing Latin letters");
    app->add_flag("--no-zh-latin", no_zh_latin, "Disable the Latin-in-Chinese rule");
    app->add_option("--threads", threads, "Worker threads (0 = all cores)");
    app->add_option("--lm-train", lm_train, "LM training corpus (default: the --mono corpus)");
    app->add_option("--lang", lang, "Language of the --mono corpus; ja and zh use characters");
    app->add_option("--lm-order", lm_order, "n-gram order")->check(CLI::Range(1, 10));
    app->add_option("--lm-k", lm_k, "Additive smoothing constant")
        ->check(CLI::PositiveNumber);
    app->add_option("--percentile", pct, "Reject perplexities above this corpus percentile")
        ->check(CLI::Range(0.0, 100.0));
    app->add_option("--report", report, "Write the JSON report to this file");
  }

  filter::FilterRuleSet rules() const {
    auto r = filter::FilterRuleSet::for_language_pair(lang_pair);
    if (!config_path.empty()) {
      const Json c = read_json_file(config_path);
      if (!c.is_object()) throw DataError(config_path, 0, "config must be a JSON object");
      try {
        for (const auto& [key, value] : c.items()) {
          if (key == "max_len_words") r.max_len_words = value.get<std::size_t>();
          else if (key == "max_word_chars") r.max_word_chars = value.get<std::size_t>();
          else if (key == "ratio_limit") r.ratio_limit = value.get<double>();
          else if (key == "dedup") r.dedup = value.get<bool>();
          else if (key == "langid_check") r.langid_check = value.get<bool>();
          else if (key == "unicode_check") r.unicode_check = value.get<bool>();
          else if (key == "zh_reject_latin") r.zh_reject_latin = value.get<bool>();
          else if (key == "source_lang") r.source_lang = value.get<std::string>();
          else if (key == "target_lang") r.target_lang = value.get<std::string>();
          else throw DataError(config_path, 0, "unknown config key '" + key + "'");
        }
      } catch (const Json::type_error& e) {
        throw DataError(config_path, 0, e.what());
      }
    }
    if (max_len > 0) r.max_len_words = max_len;
    if (max_word_chars > 0) r.max_word_chars = max_word_chars;
    if (ratio > 0.0) r.ratio_limit = ratio;
    if (no_dedup) r.dedup = false;
    if (no_langid) r.langid_check = false;
    if (no_unicode) r.unicode_check = false;
    if (zh_latin) r.zh_reject_latin = true;
    if (no_zh_latin) r.zh_reject_latin = false;
    try {
      r.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return r;
  }

  static Json rules_json(const filter::FilterRuleSet& r) {
    Json j;
    j["max_len_words"] = r.max_len_words;
    j["max_word_chars"] = r.max_word_chars;
    j["ratio_limit"] = r.ratio_limit;
    j["dedup"] = r.dedup;
    j["langid_check"] = r.langid_check;
    j["unicode_check"] = r.unicode_check;
    j["zh_reject_latin"] = r.zh_reject_latin;
    j["source_lang"] = r.source_lang;
    j["target_lang"] = r.target_lang;
    return j;
  }

  std::vector<filter::ParallelPair> load_pairs() const {
    std::vector<filter::ParallelPair> pairs;
    if (!tsv.empty()) {
      const auto lines = read_file_lines(tsv);
      for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto tab = lines[i].find('\t');
        if (tab == std::string::npos) throw DataError(tsv, i + 1, "expected source<TAB>target");
        if (lines[i].find('\t', tab + 1) != std::string::npos) {
          throw DataError(tsv, i + 1, "more than one TAB on the line");
        }
        pairs.push_back(filter::make_pair(std::string_view(lines[i]).substr(0, tab),
                                          std::string_view(lines[i]).substr(tab + 1)));
      }
      return pairs;
    }
    const auto s = read_file_lines(src);
    const auto t = read_file_lines(tgt);
    require_same_length(tgt, s.size(), t.size());
    for (std::size_t i = 0; i < s.size(); ++i) pairs.push_back(filter::make_pair(s[i], t[i]));
    return pairs;
  }

  int run_parallel(const Io& io) const {
    const auto r = rules();
    std::unique_ptr<filter::LanguageDetector> detector;
    if (!langid_predictions.empty()) {
      std::ifstream in(langid_predictions, std::ios::binary);
      if (!in) throw DataError(langid_predictions, 0, "cannot open file");
      try {
        detector = std::make_unique<filter::PredictionsDetector>(filter::PredictionsDetector::from_tsv(in));
      } catch (const std::invalid_argument& e) {
        throw DataError(langid_predictions, 0, e.what());
      }
    } else {
      detector = std::make_unique<filter::ScriptDetector>();
    }
    const auto pairs = load_pairs();
    io.log("filtering " + std::to_string(pairs.size()) + " pairs");
    const auto result = filter::filter_corpus(pairs, r, *detector, threads);

    {
      std::unique_ptr<std::ostream> file;
      std::ostream* os = &io.out;
      if (!out_path.empty()) {
        file = open_output(out_path);
        os = file.get();
      }
      for (const auto& p : result.kept) *os << p.source.raw << '\t' << p.target.raw << '\n';
    }
    std::map<std::string, std::size_t> counts;
    std::unique_ptr<std::ostream> rej;
    if (!rejects_path.empty()) rej = open_output(rejects_path);
    for (const auto& rejection : result.rejected) {
      for (const auto& reason : rejection.verdict.reasons) ++counts[reason];
      if (rej) {
        *rej << Json{{"line", rejection.index + 1}, {"reasons", rejection.verdict.reasons}}.dump()
             << '\n';
      }
    }

    Json res;
    res["total"] = pairs.size();
    res["kept"] = result.kept.size();
    res["rejected"] = result.rejected.size();
    Json reasons = Json::object();
    for (const auto& [k, v] : counts) reasons[k] = v;
    res["reason_counts"] = std::move(reasons);

    Json config;
    config["input"] = tsv.empty() ? Json{{"src", src}, {"tgt", tgt}} : Json{{"tsv", tsv}};
    config["lang_pair"] = lang_pair;
    config["rules"] = rules_json(r);
    config["langid"] = langid_predictions.empty() ? "script" : langid_predictions;
    config["out"] = out_path;
    config["rejects"] = rejects_path;
    emit_report(io, {report, out_path.empty()},
                make_report("filter", 0, std::move(config), std::move(res)));
    return kExitOk;
  }

  int run_mono(const Io& io) const {
    if (pct <= 0.0) throw UsageError("--percentile must lie in (0, 100]");
    const auto mode = text::is_char_level_language(lang) ? text::TokenizeMode::char_level
                                                         : text::TokenizeMode::word;
    const auto lines = read_file_lines(mono);
    std::vector<text::Sentence> corpus;
    for (const auto& l : lines) corpus.push_back(text::tokenize_lossy(l, mode));
    std::vector<text::Sentence> train = corpus;
    if (!lm_train.empty()) {
      train.clear();
      for (const auto& l : read_file_lines(lm_train)) train.push_back(text::tokenize_lossy(l, mode));
    }
    if (train.empty()) throw DataError(lm_train.empty() ? mono : lm_train, 0, "no sentences to train on");
    io.log("training order-" + std::to_string(lm_order) + " LM on " + std::to_string(train.size()) +
           " sentences");
    const auto lm = lm::train_ngram_lm(train, lm_order, lm_k);
    const auto result = filter::filter_monolingual(corpus, lm, pct);

    {
      std::unique_ptr<std::ostream> file;
      std::ostream* os = &io.out;
      if (!out_path.empty()) {
        file = open_output(out_path);
        os = file.get();
      }
      std::size_t next = 0;
      for (std::size_t i = 0; i < lines.size(); ++i) {
        if (next < result.rejected.size() && result.rejected[next] == i) {
          ++next;
          continue;
        }
        *os << lines[i] << '\n';
      }
    }
    if (!rejects_path.empty()) {
      auto rej = open_output(rejects_path);
      for (auto i : result.rejected) {
        *rej << Json{{"line", i + 1},
                     {"reasons", {"lm_perplexity"}},
                     {"perplexity", result.perplexities[i]}}
                    .dump()
             << '\n';
      }
    }
    Json res;
    res["total"] = corpus.size();
    res["kept"] = result.kept.size();
    res["rejected"] = result.rejected.size();
    res["threshold"] = result.threshold;
    Json config;
    config["mono"] = mono;
    config["lm_train"] = lm_train.empty() ? mono : lm_train;
    config["lang"] = lang;
    config["lm_order"] = lm_order;
    config["lm_k"] = lm_k;
    config["percentile"] = pct;
    config["out"] = out_path;
    config["rejects"] = rejects_path;
    emit_report(io, {report, out_path.empty()},
                make_report("filter", 0, std::move(config), std::move(res)));
    return kExitOk;
  }

  int run(const Io& io) const {
    if (!mono.empty()) return run_mono(io);
    if (tsv.empty() && src.empty()) throw UsageError("give --tsv, --src/--tgt or --mono");
    return run_parallel(io);
  }
};

// ---------------------------------------------------------------------------
// noise

struct NoiseCmd {
  std::string input;
  std::string tokenize = "none";
  std::string granularity = "word";
  double p_replace = 0.2, p_delete = 0.2, p_permute = 0.2;
  std::size_t span_len = 3, permute_window = 3;
  std::uint64_t seed = 0, epoch = 0;
  std::string vocab_path;
  bool target_denoise = false;
  double select_prob = 0.3, replace_prob = 0.15;
  bool fixture = false;
  unsigned threads = 1;
  std::string out_path, report;

  void add_to(CLI::App* app) {
    app->add_option("--input", input, "Text file (TSV pairs with --target-denoise)");
    app->add_option("--tokenize", tokenize, "How to split lines: none (whitespace), word or char")
        ->check(CLI::IsMember({"word", "char", "none", "whitespace"}));
    app->add_option("--granularity", granularity, "Noise unit: token, word or span")
        ->check(CLI::IsMember({"token", "word", "span"}));
    app->add_option("--p-replace", p_replace, "Probability of enabling replacement")
        ->check(CLI::Range(0.0, 1.0));
    app->add_option("--p-delete", p_delete, "Probability of enabling deletion")
        ->check(CLI::Range(0.0, 1.0));
    app->add_option("--p-permute", p_permute, "Probability of enabling permutation")
        ->check(CLI::Range(0.0, 1.0));
    app->add_option("--span-len", span_len, "Words per span")->check(CLI::PositiveNumber);
    app->add_option("--permute-window", permute_window, "Units shuffled by permutation")
        ->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "RNG seed");
    app->add_option("--epoch", epoch, "Epoch number; each epoch draws fresh noise");
    app->add_option("--vocab", vocab_path, "Replacement vocabulary, one token per line");
    app->add_flag("--target-denoise", target_denoise, "Corrupt the target side of TSV pairs");
    app->add_option("--select-prob", select_prob, "Target denoising: share of pairs selected")
        ->check(CLI::Range(0.0, 1.0));
    app->add_option("--replace-prob", replace_prob, "Target denoising: per-token replacement")
        ->check(CLI::Range(0.0, 1.0));
    app->add_flag("--fixture", fixture, "Emit the seed-42 golden run on a fixed 6-token sentence");
    app->add_option("--threads", threads, "Worker threads (0 = all cores)");
    app->add_option("--out", out_path, "Noised output (default: stdout)");
    app->add_option("--report", report, "Write the JSON report to this file");
  }

  augment::NoiseSpec spec() const {
    augment::NoiseSpec s;
    s.granularity = *augment::parse_granularity(granularity);
    s.p_replace = p_replace;
    s.p_delete = p_delete;
    s.p_permute = p_permute;
    s.span_len = span_len;
    s.permute_window = permute_window;
    s.seed = seed;
    return s;
  }

  Json config() const {
    Json c;
    c["input"] = input;
    c["tokenize"] = tokenize;
    c["granularity"] = granularity;
    c["p_replace"] = p_replace;
    c["p_delete"] = p_delete;
    c["p_permute"] = p_permute;
    c["span_len"] = span_len;
    c["permute_window"] = permute_window;
    c["epoch"] = epoch;
    c["vocab"] = vocab_path;
    c["target_denoise"] = target_denoise;
    if (target_denoise) {
      c["select_prob"] = select_prob;
      c["replace_prob"] = replace_prob;
    }
    c["out"] = out_path;
    return c;
  }

  static Json ops_json(const augment::NoiseOps& ops) {
    return Json{{"replace", ops.replace}, {"delete", ops.remove}, {"permute", ops.permute}};
  }

  int run_fixture(const Io& io) const {
    const auto sentence = text::tokenize("the quick brown fox jumps over", text::TokenizeMode::whitespace);
    auto s = augment::NoiseSpec{};
    s.seed = 42;
    rng::Engine engine(rng::derive_seed(s.seed, 0, 0));
    const auto outcome = augment::apply_noise_traced(sentence, s, {}, engine);
    Json res;
    res["input"] = sentence.tokens;
    res["output"] = outcome.sentence.tokens;
    res["enabled"] = ops_json(outcome.enabled);
    Json c;
    c["fixture"] = true;
    c["granularity"] = std::string(augment::to_string(s.granularity));
    c["p_replace"] = s.p_replace;
    c["p_delete"] = s.p_delete;
    c["p_permute"] = s.p_permute;
    c["span_len"] = s.span_len;
    c["permute_window"] = s.permute_window;
    c["vocab"] = "sentence";
    emit_report(io, {report}, make_report("noise", s.seed, std::move(c), std::move(res)));
    return kExitOk;
  }

  int run(const Io& io) const {
    if (fixture) return run_fixture(io);
    if (input.empty()) throw UsageError("--input is required unless --fixture is given");
    const auto mode = *text::parse_tokenize_mode(tokenize);
    const auto lines = read_file_lines(input);

    std::unique_ptr<std::ostream> file;
    std::ostream* os = &io.out;
    if (!out_path.empty()) {
      file = open_output(out_path);
      os = file.get();
    }

    Json res;
    res["sentences"] = lines.size();
    if (target_denoise) {
      augment::DenoiseSpec ds{select_prob, replace_prob};
      std::size_t selected = 0, replaced = 0, tokens = 0;
      for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto tab = lines[i].find('\t');
        if (tab == std::string::npos) throw DataError(input, i + 1, "expected source<TAB>target");
        const auto one = tokenize_lines(input, {lines[i].substr(0, tab), lines[i].substr(tab + 1)}, mode);
        rng::Engine engine(rng::derive_seed(seed, epoch, i));
        const auto outcome = augment::target_denoise_traced({one[0], one[1]}, engine, ds);
        if (outcome.selected) {
          ++selected;
          tokens += one[1].tokens.size();
          replaced += outcome.replaced.size();
        }
        *os << lines[i].substr(0, tab) << '\t' << shell_join(outcome.pair.target.tokens) << '\n';
      }
      res["selected_pairs"] = selected;
      res["selected_tokens"] = tokens;
      res["replacement_draws"] = replaced;
    } else {
      const auto corpus = tokenize_lines(input, lines, mode);
      std::vector<std::string> vocab;
      if (!vocab_path.empty()) {
        for (auto& v : read_file_lines(vocab_path)) {
          if (!v.empty()) vocab.push_back(std::move(v));
        }
      } else {
        vocab = augment::build_vocab(corpus);
      }
      const auto s = spec();
      io.log("noising " + std::to_string(corpus.size()) + " sentences, epoch " + std::to_string(epoch));
      const auto noised = augment::onthefly_noise_stream(corpus, s, vocab, epoch, threads);
      std::size_t changed = 0;
      for (std::size_t i = 0; i < noised.size(); ++i) {
        if (noised[i].tokens != corpus[i].tokens) ++changed;
        *os << shell_join(noised[i].tokens) << '\n';
      }
      res["changed"] = changed;
      res["vocab_size"] = vocab.size();
    }
    emit_report(io, {report, out_path.empty()}, make_report("noise", seed, config(), std::move(res)));
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// kernel-check

kernels::Matrix read_matrix_file(const std::string& path) {
  const Json j = read_json_file(path);
  try {
    if (j.is_object()) {
      const auto shape = j.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 2) throw DataError(path, 0, "shape must have two entries");
      return kernels::Matrix(shape[0], shape[1], j.at("data").get<std::vector<double>>());
    }
    if (j.is_array()) {
      std::vector<double> data;
      const std::size_t rows = j.size();
      const std::size_t cols = rows ? j[0].size() : 0;
      for (const auto& row : j) {
        if (!row.is_array() || row.size() != cols) throw DataError(path, 0, "ragged matrix");
        for (const auto& v : row) data.push_back(v.get<double>());
      }
      return kernels::Matrix(rows, cols, std::move(data));
    }
  } catch (const Json::exception& e) {
    throw DataError(path, 0, e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(path, 0, e.what());
  }
  throw DataError(path, 0, "expected {\"shape\": [r, c], \"data\": [...]} or nested arrays");
}

struct KernelCheckCmd {
  std::uint64_t seed = 1;
  std::size_t trials = 50;
  std::size_t max_dim = 6;
  std::string w_l_path, w_w_path;
  std::string report;

  void add_to(CLI::App* app) {
    app->add_option("--seed", seed, "RNG seed for the random cases");
    app->add_option("--trials", trials, "Random cases per invariant")->check(CLI::PositiveNumber);
    app->add_option("--max-dim", max_dim, "Largest sequence length, width and head count")
        ->check(CLI::Range(2, 64));
    auto* wl = app->add_option("--w-l", w_l_path, "Logit mixer W_l (JSON matrix) for an extra causality check");
    auto* ww = app->add_option("--w-w", w_w_path, "Weight mixer W_w (JSON matrix)");
    wl->needs(ww);
    ww->needs(wl);
    app->add_option("--report", report, "Write the JSON report to this file instead of stdout");
  }

  int run(const Io& io) const {
    kernels::InvariantConfig cfg;
    cfg.seed = seed;
    cfg.trials = trials;
    cfg.max_dim = max_dim;
    if (!w_l_path.empty()) {
      cfg.w_l = read_matrix_file(w_l_path);
      cfg.w_w = read_matrix_file(w_w_path);
      if (cfg.w_l->rows() != cfg.w_l->cols() || cfg.w_l->rows() == 0 || !(cfg.w_w->rows() == cfg.w_l->rows() && cfg.w_w->cols() == cfg.w_l->rows())) {
        throw DataError(w_l_path, 0, "head mixers must be square with equal sizes");
      }
    }
    const auto results = kernels::run_kernel_invariants(cfg);

    bool all = true;
    Json checks = Json::array();
    std::size_t width = 0;
    for (const auto& r : results) width = std::max(width, r.name.size());
    for (const auto& r : results) {
      all = all && r.passed;
      std::string line = r.passed ? "PASS  " : "FAIL  ";
      line += r.name + std::string(width - r.name.size() + 2, ' ');
      line += "worst " + fmt_number(r.worst) + "  tol " + fmt_number(r.tolerance);
      if (!r.detail.empty()) line += "  (" + r.detail + ")";
      io.err << line << '\n';
      Json c;
      c["name"] = r.name;
      c["passed"] = r.passed;
      c["worst"] = r.worst;
      c["tolerance"] = r.tolerance;
      c["trials"] = r.trials;
      if (!r.detail.empty()) c["detail"] = r.detail;
      checks.push_back(std::move(c));
    }
    Json res;
    res["passed"] = all;
    res["checks"] = std::move(checks);
    Json config;
    config["trials"] = trials;
    config["max_dim"] = max_dim;
    config["w_l"] = w_l_path;
    config["w_w"] = w_w_path;
    emit_report(io, {report}, make_report("kernel-check", seed, std::move(config), std::move(res)));
    return all ? kExitOk : kExitData;
  }
};

// ---------------------------------------------------------------------------
// schedule-plot

struct SchedulePlotCmd {
  std::size_t steps = 1000;
  std::size_t stride = 1;
  std::vector<std::string> kinds = {"linear", "exponential", "inv_sigmoid"};
  double linear_k = -0.005, linear_b = 1.0, linear_epsilon = 0.1;
  double exp_k = 0.99;
  double sigmoid_k = 10.0;
  std::string out_path, report;

  void add_to(CLI::App* app) {
    app->add_option("--steps", steps, "Last step t (inclusive)");
    app->add_option("--stride", stride, "Step between rows")->check(CLI::PositiveNumber);
    app->add_option("--kind", kinds, "Decays to tabulate (repeatable)")
        ->check(CLI::IsMember({"linear", "exponential", "inv_sigmoid"}));
    app->add_option("--linear-k", linear_k, "Linear slope k (< 0)");
    app->add_option("--linear-b", linear_b, "Linear intercept b");
    app->add_option("--linear-epsilon", linear_epsilon, "Linear floor epsilon");
    app->add_option("--exp-k", exp_k, "Exponential base k in (0, 1)");
    app->add_option("--sigmoid-k", sigmoid_k, "Inverse sigmoid k (>= 1)");
    app->add_option("--out", out_path, "CSV output (default: stdout)");
    app->add_option("--report", report, "Write the JSON report to this file");
  }

  sched::DecayParams params(const std::string& kind) const {
    sched::DecayParams p;
    p.kind = *sched::parse_decay_kind(kind);
    switch (p.kind) {
      case sched::DecayKind::linear:
        p.k = linear_k;
        p.b = linear_b;
        p.epsilon = linear_epsilon;
        break;
      case sched::DecayKind::exponential: p.k = exp_k; break;
      case sched::DecayKind::inv_sigmoid: p.k = sigmoid_k; break;
    }
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return p;
  }

  int run(const Io& io) const {
    std::vector<sched::DecayParams> ps;
    for (const auto& k : kinds) ps.push_back(params(k));

    std::unique_ptr<std::ostream> file;
    std::ostream* os = &io.out;
    if (!out_path.empty()) {
      file = open_output(out_path);
      os = file.get();
    }
    *os << "t";
    for (const auto& k : kinds) *os << ',' << k;
    *os << '\n';
    std::size_t rows = 0;
    for (std::size_t t = 0; t <= steps; t += stride) {
      *os << t;
      for (const auto& p : ps) *os << ',' << fmt_number(sched::decay(static_cast<double>(t), p));
      *os << '\n';
      ++rows;
    }
    Json config;
    config["steps"] = steps;
    config["stride"] = stride;
    Json decays = Json::array();
    for (std::size_t i = 0; i < ps.size(); ++i) {
      Json d{{"kind", kinds[i]}, {"k", ps[i].k}};
      if (ps[i].kind == sched::DecayKind::linear) {
        d["b"] = ps[i].b;
        d["epsilon"] = ps[i].epsilon;
      }
      decays.push_back(std::move(d));
    }
    config["decays"] = std::move(decays);
    config["out"] = out_path;
    emit_report(io, {report, out_path.empty()},
                make_report("schedule-plot", 0, std::move(config), Json{{"rows", rows}}));
    return kExitOk;
  }
};

// ---------------------------------------------------------------------------
// bpe-learn / bpe-apply

struct BpeLearnCmd {
  std::string input;
  std::size_t merges = 0;
  std::string tokenize = "word";
  std::string out_path, report;

  void add_to(CLI::App* app) {
    app->add_option("--input", input, "Training text")->required();
    app->add_option("--merges", merges, "Number of merge operations")->required();
    app->add_option("--tokenize", tokenize, "word, char or none (whitespace)")
        ->check(CLI::IsMember({"word", "char", "none", "whitespace"}));
    app->add_option("--out", out_path, "Merges file (default: stdout)");
    app->add_option("--report", report, "Write the JSON report to this file");
  }

  int run(const Io& io) const {
    const auto corpus = read_corpus(input, *text::parse_tokenize_mode(tokenize));
    io.log("learning " + std::to_string(merges) + " merges");
    const auto model = text::bpe_learn(corpus, merges);
    {
      std::unique_ptr<std::ostream> file;
      std::ostream* os = &io.out;
      if (!out_path.empty()) {
        file = open_output(out_path);
        os = file.get();
      }
      text::write_merges(*os, model);
    }
    Json config{{"input", input}, {"merges", merges}, {"tokenize", tokenize}, {"out", out_path}};
    emit_report(io, {report, out_path.empty()},
                make_report("bpe-learn", 0, std::move(config),
                            Json{{"merges_learned", model.num_merges()}, {"sentences", corpus.size()}}));
    return kExitOk;
  }
};

struct BpeApplyCmd {
  std::string input, codes;
  std::string tokenize = "word";
  bool undo = false;
  std::string out_path, report;

  void add_to(CLI::App* app) {
    app->add_option("--input", input, "Text to segment")->required();
    app->add_option("--codes", codes, "Merges file from bpe-learn");
    app->add_option("--tokenize", tokenize, "word, char or none (whitespace)")
        ->check(CLI::IsMember({"word", "char", "none", "whitespace"}));
    app->add_flag("--undo", undo, "Join segmented text back into words instead");
    app->add_option("--out", out_path, "Output (default: stdout)");
    app->add_option("--report", report, "Write the JSON report to this file");
  }

  int run(const Io& io) const {
    if (!undo && codes.empty()) throw UsageError("--codes is required unless --undo is given");
    const auto mode = undo ? text::TokenizeMode::whitespace : *text::parse_tokenize_mode(tokenize);
    const auto corpus = read_corpus(input, mode);
    text::BpeModel model;
    if (!undo) {
      std::ifstream in(codes, std::ios::binary);
      if (!in) throw DataError(codes, 0, "cannot open file");
      try {
        model = text::read_merges(in);
      } catch (const std::invalid_argument& e) {
        throw DataError(codes, 0, e.what());
      }
    }
    std::unique_ptr<std::ostream> file;
    std::ostream* os = &io.out;
    if (!out_path.empty()) {
      file = open_output(out_path);
      os = file.get();
    }
    std::size_t tokens = 0;
    for (const auto& s : corpus) {
      const auto seg = undo ? text::bpe_join(s) : text::bpe_apply(s, model);
      tokens += seg.tokens.size();
      *os << shell_join(seg.tokens) << '\n';
    }
    Json config{{"input", input}, {"codes", codes}, {"tokenize", tokenize}, {"undo", undo}, {"out", out_path}};
    emit_report(io, {report, out_path.empty()},
                make_report("bpe-apply", 0, std::move(config),
                            Json{{"sentences", corpus.size()}, {"tokens", tokens}}));
    return kExitOk;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const Io io{out, err};
  CLI::App app{"wmtkit: corpus filtering, noising, BLEU/Self-BLEU, ensemble search and "
               "attention-kernel checks"};
  app.name("wmtkit");
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  BleuCmd bleu;
  SelfBleuCmd selfbleu;
  EnsembleCmd ens;
  FilterCmd filt;
  NoiseCmd noise;
  KernelCheckCmd kcheck;
  SchedulePlotCmd splot;
  BpeLearnCmd bpe_learn;
  BpeApplyCmd bpe_apply;

  auto* c_bleu = app.add_subcommand("bleu", "Corpus BLEU of a hypothesis file");
  bleu.add_to(c_bleu);
  auto* c_self = app.add_subcommand("selfbleu", "Pairwise Self-BLEU matrix of several systems");
  selfbleu.add_to(c_self);
  auto* c_ens = app.add_subcommand("ensemble-search", "Pick an ensemble from a candidate pool");
  ens.add_to(c_ens);
  auto* c_filt = app.add_subcommand("filter", "Rule-based parallel or LM-based monolingual filtering");
  filt.add_to(c_filt);
  auto* c_noise = app.add_subcommand("noise", "Seeded on-the-fly noise or target denoising");
  noise.add_to(c_noise);
  auto* c_kc = app.add_subcommand("kernel-check", "Run the attention kernel invariant suite");
  kcheck.add_to(c_kc);
  auto* c_sp = app.add_subcommand("schedule-plot", "Tabulate scheduled-sampling decays as CSV");
  splot.add_to(c_sp);
  auto* c_bl = app.add_subcommand("bpe-learn", "Learn BPE merges");
  bpe_learn.add_to(c_bl);
  auto* c_ba = app.add_subcommand("bpe-apply", "Apply BPE merges");
  bpe_apply.add_to(c_ba);

  auto usage_of = [&]() -> std::string {
    const auto parsed = app.get_subcommands();
    return parsed.empty() ? app.help() : parsed.back()->help();
  };

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << usage_of();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << usage_of();
    return kExitUsage;
  }

  try {
    if (c_bleu->parsed()) return bleu.run(io);
    if (c_self->parsed()) return selfbleu.run(io);
    if (c_ens->parsed()) return ens.run(io);
    if (c_filt->parsed()) return filt.run(io);
    if (c_noise->parsed()) return noise.run(io);
    if (c_kc->parsed()) return kcheck.run(io);
    if (c_sp->parsed()) return splot.run(io);
    if (c_bl->parsed()) return bpe_learn.run(io);
    if (c_ba->parsed()) return bpe_apply.run(io);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << usage_of();
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace wmtkit::cli
