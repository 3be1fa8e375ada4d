#include "icq/annotate.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "icq/error.hpp"
#include "icq/util.hpp"

#ifndef ICQ_DEFAULT_RESOURCE_DIR
#define ICQ_DEFAULT_RESOURCE_DIR "resources"
#endif

namespace icq {

using json = nlohmann::json;

namespace {

constexpr std::array<std::string_view, 7> kKindNames{"WORD", "SENTIMENT", "TENSE", "NEGATION",
                                                     "OVERLAP", "NER", "TYPO"};

bool is_marker_kind(FeatureKind kind) {
  return kind == FeatureKind::kNegation || kind == FeatureKind::kOverlap || kind == FeatureKind::kTypo;
}

}  // namespace

std::string_view to_string(FeatureKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

FeatureKind parse_feature_kind(std::string_view text) {
  std::string upper(text);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == upper) return static_cast<FeatureKind>(i);
  }
  throw ValidationError("unknown feature kind '" + std::string(text) + "'");
}

FeatureSpec make_feature(FeatureKind kind, std::string value) {
  auto bad = [&] {
    return ValidationError("invalid value '" + value + "' for feature kind " + std::string(to_string(kind)));
  };
  switch (kind) {
    case FeatureKind::kWord:
      if (value.empty() || case_fold(value) != value) throw bad();
      break;
    case FeatureKind::kSentiment:
      if (value != "positive" && value != "negative" && value != "neutral") throw bad();
      break;
    case FeatureKind::kTense:
      if (value != "past" && value != "present" && value != "future") throw bad();
      break;
    case FeatureKind::kNer:
      if (std::find(kNerCategories.begin(), kNerCategories.end(), value) == kNerCategories.end()) throw bad();
      break;
    case FeatureKind::kNegation:
    case FeatureKind::kOverlap:
    case FeatureKind::kTypo:
      if (value != kPresent) throw bad();
      break;
  }
  return FeatureSpec{kind, std::move(value)};
}

FeatureSpec parse_feature(std::string_view literal) {
  const auto colon = literal.find(':');
  const auto kind = parse_feature_kind(literal.substr(0, colon));
  if (colon == std::string_view::npos) {
    if (!is_marker_kind(kind)) {
      throw ValidationError("feature kind " + std::string(to_string(kind)) + " needs a value (KIND:value)");
    }
    return FeatureSpec{kind, std::string(kPresent)};
  }
  std::string value(literal.substr(colon + 1));
  if (kind == FeatureKind::kWord) value = case_fold(value);
  if (kind == FeatureKind::kNer) {
    std::transform(value.begin(), value.end(), value.begin(), [](unsigned char c) { return std::toupper(c); });
  }
  return make_feature(kind, std::move(value));
}

std::string to_string(const FeatureSpec& feature) {
  std::string out(to_string(feature.kind));
  if (!is_marker_kind(feature.kind)) out += ":" + feature.value;
  return out;
}

// --- resources -------------------------------------------------------------

namespace {

std::vector<std::string> resource_words(std::string_view text) {
  std::vector<std::string> out;
  for (auto line : split_lines(text)) {
    const auto b = line.find_first_not_of(" \t");
    if (b == std::string_view::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t");
    out.push_back(case_fold(line.substr(b, e - b + 1)));
  }
  return out;
}

std::unordered_set<std::string> word_set(std::string_view text) {
  auto words = resource_words(text);
  return {words.begin(), words.end()};
}

}  // namespace

ResourceBundle ResourceBundle::load(const std::filesystem::path& dir) {
  ResourceBundle res;
  std::string hash_material = "icq-resources-v1\n";
  auto read = [&](const std::string& name) {
    const auto path = dir / name;
    if (!std::filesystem::exists(path)) throw ValidationError("missing resource file " + path.string());
    auto text = read_file(path);
    hash_material += name + '\0' + sha256_hex(text) + '\n';
    return text;
  };

  const auto sentiment_text = read("sentiment.tsv");
  std::size_t line_no = 0;
  for (auto line : split_lines(sentiment_text)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw ParseError("sentiment.tsv", line_no, "expected <word>\\t<polarity>");
    const auto pol = line.substr(tab + 1);
    int polarity = 0;
    if (pol == "1" || pol == "+1") {
      polarity = 1;
    } else if (pol == "-1") {
      polarity = -1;
    } else if (pol != "0") {
      throw ParseError("sentiment.tsv", line_no, "polarity must be -1, 0 or 1");
    }
    res.sentiment_lexicon[case_fold(line.substr(0, tab))] = polarity;
  }
  res.stopwords = word_set(read("stopwords.txt"));
  res.dictionary = word_set(read("dictionary.txt"));
  res.negation_words = word_set(read("negation.txt"));
  res.irregular_past_verbs = word_set(read("past-verbs.txt"));
  res.present_verbs = word_set(read("present-verbs.txt"));
  res.future_auxiliaries = word_set(read("future-aux.txt"));
  res.non_verbs = word_set(read("non-verbs.txt"));
  for (const auto& cat : kNerCategories) res.gazetteers[cat] = word_set(read("gazetteer-" + cat + ".txt"));
  res.content_hash = sha256_hex(hash_material);
  return res;
}

std::filesystem::path ResourceBundle::default_dir() {
  if (const char* env = std::getenv("ICQ_RESOURCES"); env != nullptr && *env != '\0') return env;
  return ICQ_DEFAULT_RESOURCE_DIR;
}

// --- annotators ------------------------------------------------------------

namespace {

template <typename Fn>
void for_each_in_scope(const TokenizedInstance& tokens, Scope scope, Fn&& fn) {
  if (scope == Scope::kBoth) {
    for (const auto& t : tokens.premise_tokens) fn(t);
  }
  for (const auto& t : tokens.hypothesis_tokens) fn(t);
}

template <typename Fn>
void for_each_side(const TokenizedInstance& tokens, Scope scope, Fn&& fn) {
  if (scope == Scope::kBoth) fn(tokens.premise_tokens);
  fn(tokens.hypothesis_tokens);
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool has_apostrophe(std::string_view s) { return s.find('\'') != std::string_view::npos; }

bool is_past_form(const Token& t, const ResourceBundle& res) {
  if (!t.is_alpha) return false;
  if (res.irregular_past_verbs.count(t.lower)) return true;
  return t.lower.size() >= 4 && ends_with(t.lower, "ed") && !has_apostrophe(t.lower) && !res.non_verbs.count(t.lower);
}

bool is_verb_candidate(const Token& t, const ResourceBundle& res) {
  if (!t.is_alpha) return false;
  if (is_past_form(t, res) || res.present_verbs.count(t.lower)) return true;
  return t.lower.size() >= 5 && ends_with(t.lower, "ing") && !res.non_verbs.count(t.lower);
}

std::size_t code_points(std::string_view utf8) {
  return static_cast<std::size_t>(
      std::count_if(utf8.begin(), utf8.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

bool is_numeral(std::string_view s) {
  if (s.empty() || !std::isdigit(static_cast<unsigned char>(s.front())) ||
      !std::isdigit(static_cast<unsigned char>(s.back()))) {
    return false;
  }
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == ','; });
}

bool is_sentence_end(const Token& t) { return t.surface == "." || t.surface == "!" || t.surface == "?"; }

bool is_quote(const Token& t) {
  return t.surface == "\"" || t.surface == "'" || t.surface == "“" || t.surface == "‘" || t.surface == "(";
}

}  // namespace

std::set<FeatureSpec> annotate_word(const TokenizedInstance& tokens, Scope scope, const Vocabulary* vocab) {
  std::set<FeatureSpec> out;
  for_each_in_scope(tokens, scope, [&](const Token& t) {
    if (!t.is_alpha) return;
    if (vocab != nullptr && !vocab->count(t.lower)) return;
    out.insert(FeatureSpec{FeatureKind::kWord, t.lower});
  });
  return out;
}

FeatureSpec annotate_sentiment(const TokenizedInstance& tokens, const ResourceBundle& res, Scope scope) {
  long sum = 0;
  for_each_in_scope(tokens, scope, [&](const Token& t) {
    if (auto it = res.sentiment_lexicon.find(t.lower); it != res.sentiment_lexicon.end()) sum += it->second;
  });
  const char* value = sum > 0 ? "positive" : (sum < 0 ? "negative" : "neutral");
  return FeatureSpec{FeatureKind::kSentiment, value};
}

std::optional<FeatureSpec> annotate_tense(const TokenizedInstance& tokens, const ResourceBundle& res, Scope scope) {
  bool future = false;
  bool past = false;
  bool present = false;
  for_each_side(tokens, scope, [&](const std::vector<Token>& side) {
    for (std::size_t i = 0; i < side.size(); ++i) {
      const auto& t = side[i];
      if (res.future_auxiliaries.count(t.lower)) {
        // "will join", "will not join", "won't ... " style: the next word
        // after any negation is taken as the governed verb.
        std::size_t j = i + 1;
        while (j < side.size() && res.negation_words.count(side[j].lower)) ++j;
        if (j < side.size() && side[j].is_alpha) future = true;
      }
      if (is_past_form(t, res)) past = true;
      if (is_verb_candidate(t, res)) present = true;
    }
  });
  if (future) return FeatureSpec{FeatureKind::kTense, "future"};
  if (past) return FeatureSpec{FeatureKind::kTense, "past"};
  if (present) return FeatureSpec{FeatureKind::kTense, "present"};
  return std::nullopt;
}

std::optional<FeatureSpec> annotate_negation(const TokenizedInstance& tokens, const ResourceBundle& res, Scope scope) {
  bool found = false;
  for_each_in_scope(tokens, scope, [&](const Token& t) { found = found || res.negation_words.count(t.lower) != 0; });
  if (!found) return std::nullopt;
  return FeatureSpec{FeatureKind::kNegation, std::string(kPresent)};
}

std::optional<FeatureSpec> annotate_overlap(const TokenizedInstance& tokens, const ResourceBundle& res) {
  std::unordered_set<std::string_view> premise_words;
  for (const auto& t : tokens.premise_tokens) {
    if (t.is_alpha && !res.stopwords.count(t.lower)) premise_words.insert(t.lower);
  }
  for (const auto& t : tokens.hypothesis_tokens) {
    if (t.is_alpha && premise_words.count(t.lower)) return FeatureSpec{FeatureKind::kOverlap, std::string(kPresent)};
  }
  return std::nullopt;
}

std::set<FeatureSpec> annotate_ner(const TokenizedInstance& tokens, const ResourceBundle& res, Scope scope) {
  std::set<FeatureSpec> out;
  const auto& cardinal = res.gazetteers.at("CARDINAL");
  const auto& time = res.gazetteers.at("TIME");
  for_each_side(tokens, scope, [&](const std::vector<Token>& side) {
    bool sentence_initial = true;
    for (const auto& t : side) {
      if (is_numeral(t.surface) || cardinal.count(t.lower)) out.insert(FeatureSpec{FeatureKind::kNer, "CARDINAL"});
      if (time.count(t.lower)) out.insert(FeatureSpec{FeatureKind::kNer, "TIME"});
      // A capitalized sentence-initial function word ("Will ...") is not a name.
      if (t.is_capitalized && !(sentence_initial && res.stopwords.count(t.lower))) {
        for (const char* cat : {"PER", "ORG", "LOC"}) {
          if (res.gazetteers.at(cat).count(t.lower)) out.insert(FeatureSpec{FeatureKind::kNer, cat});
        }
      }
      if (is_sentence_end(t)) {
        sentence_initial = true;
      } else if (!is_quote(t)) {
        sentence_initial = false;
      }
    }
  });
  return out;
}

std::optional<FeatureSpec> annotate_typo(const TokenizedInstance& tokens, const ResourceBundle& res, Scope scope) {
  bool found = false;
  for_each_in_scope(tokens, scope, [&](const Token& t) {
    if (found || !t.is_alpha || t.is_capitalized || has_apostrophe(t.lower)) return;
    if (code_points(t.lower) >= 3 && !res.dictionary.count(t.lower)) found = true;
  });
  if (!found) return std::nullopt;
  return FeatureSpec{FeatureKind::kTypo, std::string(kPresent)};
}

AnnotationSet annotate_instance(const TokenizedInstance& tokens, const ResourceBundle& res, Scope scope,
                                const Vocabulary* vocab) {
  AnnotationSet out;
  out.id = tokens.id;
  out.features = annotate_word(tokens, scope, vocab);
  out.features.insert(annotate_sentiment(tokens, res, scope));
  if (auto f = annotate_tense(tokens, res, scope)) out.features.insert(*f);
  if (auto f = annotate_negation(tokens, res, scope)) out.features.insert(*f);
  if (auto f = annotate_overlap(tokens, res)) out.features.insert(*f);
  out.features.merge(annotate_ner(tokens, res, scope));
  if (auto f = annotate_typo(tokens, res, scope)) out.features.insert(*f);
  return out;
}

namespace {

std::size_t worker_count(std::size_t requested, std::size_t work) {
  std::size_t n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, work / 64 + 1));
}

/// Runs fn(i) for i in [0, n) on `jobs` threads. Each index is written by
/// exactly one worker, so results do not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  const auto workers = worker_count(jobs, n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> threads;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  threads.clear();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct TokenizedDataset {
  std::vector<TokenizedInstance> train;
  std::vector<TokenizedInstance> test;
};

TokenizedDataset tokenize_dataset(const Dataset& dataset, const TokenizerConfig& config, std::size_t jobs) {
  TokenizedDataset out;
  out.train.resize(dataset.train().size());
  out.test.resize(dataset.test().size());
  const auto n_train = out.train.size();
  parallel_for(n_train + out.test.size(), jobs, [&](std::size_t i) {
    if (i < n_train) {
      out.train[i] = tokenize(dataset.train()[i], config);
    } else {
      out.test[i - n_train] = tokenize(dataset.test()[i - n_train], config);
    }
  });
  return out;
}

Vocabulary vocabulary_of(const TokenizedDataset& tokens, Scope scope, std::size_t min_freq) {
  std::unordered_map<std::string, std::size_t> freq;
  auto count = [&](const TokenizedInstance& inst) {
    std::unordered_set<std::string_view> seen;
    for_each_in_scope(inst, scope, [&](const Token& t) {
      if (t.is_alpha && seen.insert(t.lower).second) ++freq[t.lower];
    });
  };
  for (const auto& inst : tokens.train) count(inst);
  for (const auto& inst : tokens.test) count(inst);
  Vocabulary vocab;
  for (auto& [word, n] : freq) {
    if (n >= min_freq) vocab.insert(word);
  }
  return vocab;
}

}  // namespace

Vocabulary build_vocabulary(const Dataset& dataset, std::size_t min_freq, const TokenizerConfig& tokenizer) {
  return vocabulary_of(tokenize_dataset(dataset, tokenizer, 1), scope_for(dataset.task_kind()), min_freq);
}

DatasetAnnotations annotate_all(const Dataset& dataset, const ResourceBundle& res, const AnnotateConfig& config) {
  if (config.vocab_min_freq < 1) throw ValidationError("vocab_min_freq must be >= 1");
  const auto tokens = tokenize_dataset(dataset, config.tokenizer, config.jobs);
  const auto scope = scope_for(dataset.task_kind());
  const auto vocab = vocabulary_of(tokens, scope, config.vocab_min_freq);

  DatasetAnnotations out;
  out.train.resize(tokens.train.size());
  out.test.resize(tokens.test.size());
  const auto n_train = tokens.train.size();
  parallel_for(n_train + tokens.test.size(), config.jobs, [&](std::size_t i) {
    if (i < n_train) {
      out.train[i] = annotate_instance(tokens.train[i], res, scope, &vocab);
    } else {
      out.test[i - n_train] = annotate_instance(tokens.test[i - n_train], res, scope, &vocab);
    }
  });
  return out;
}

// --- sidecar ---------------------------------------------------------------

std::vector<AnnotationSet> parse_sidecar(std::string_view text, const std::string& source) {
  std::vector<AnnotationSet> out;
  std::size_t line_no = 0;
  for (auto line : split_lines(text)) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source, line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_string() || !rec.contains("features") ||
        !rec["features"].is_array()) {
      throw ParseError(source, line_no, "expected {\"id\": str, \"features\": [...]}");
    }
    AnnotationSet set;
    set.id = rec["id"].get<std::string>();
    int sentiments = 0;
    int tenses = 0;
    for (const auto& f : rec["features"]) {
      if (!f.is_object() || !f.contains("kind") || !f["kind"].is_string()) {
        throw ParseError(source, line_no, "feature entries need a string \"kind\"");
      }
      try {
        const auto kind = parse_feature_kind(f["kind"].get<std::string>());
        std::string value = f.contains("value") && f["value"].is_string() ? f["value"].get<std::string>()
                                                                          : std::string(kPresent);
        auto spec = make_feature(kind, std::move(value));
        sentiments += kind == FeatureKind::kSentiment;
        tenses += kind == FeatureKind::kTense;
        set.features.insert(std::move(spec));
      } catch (const ParseError&) {
        throw;
      } catch (const ValidationError& e) {
        throw ParseError(source, line_no, e.what());
      }
    }
    if (sentiments > 1 || tenses > 1) throw ParseError(source, line_no, "at most one SENTIMENT and one TENSE per id");
    out.push_back(std::move(set));
  }
  return out;
}

void apply_sidecar(DatasetAnnotations& annotations, const Dataset& dataset, const std::vector<AnnotationSet>& sidecar,
                   SidecarMode mode) {
  std::vector<std::string> unknown;
  for (const auto& entry : sidecar) {
    bool matched = false;
    for (auto split : {Split::kTrain, Split::kTest}) {
      auto row = dataset.row_of(split, entry.id);
      if (!row) continue;
      matched = true;
      auto& target = (split == Split::kTrain ? annotations.train : annotations.test)[*row];
      if (mode == SidecarMode::kReplace) {
        target.features = entry.features;
        continue;
      }
      for (const auto& f : entry.features) {
        if (f.kind == FeatureKind::kSentiment || f.kind == FeatureKind::kTense) {
          std::erase_if(target.features, [&](const FeatureSpec& g) { return g.kind == f.kind; });
        }
        target.features.insert(f);
      }
    }
    if (!matched) unknown.push_back(entry.id);
  }
  if (!unknown.empty()) throw IdListError("sidecar ids not in dataset", std::move(unknown));
}

std::string serialize_annotations(const DatasetAnnotations& annotations) {
  auto split_json = [](const std::vector<AnnotationSet>& rows) {
    auto arr = json::array();
    for (const auto& set : rows) {
      auto feats = json::array();
      for (const auto& f : set.features) feats.push_back({{"kind", to_string(f.kind)}, {"value", f.value}});
      arr.push_back({{"id", set.id}, {"features", std::move(feats)}});
    }
    return arr;
  };
  json doc{{"train", split_json(annotations.train)}, {"test", split_json(annotations.test)}};
  return doc.dump() + "\n";
}

DatasetAnnotations parse_annotations(std::string_view text) {
  const auto doc = json::parse(text);
  auto split_rows = [](const json& arr) {
    std::vector<AnnotationSet> rows;
    rows.reserve(arr.size());
    for (const auto& rec : arr) {
      AnnotationSet set;
      set.id = rec.at("id").get<std::string>();
      for (const auto& f : rec.at("features")) {
        set.features.insert(FeatureSpec{parse_feature_kind(f.at("kind").get<std::string>()),
                                        f.at("value").get<std::string>()});
      }
      rows.push_back(std::move(set));
    }
    return rows;
  };
  return DatasetAnnotations{split_rows(doc.at("train")), split_rows(doc.at("test"))};
}

}  // namespace icq
