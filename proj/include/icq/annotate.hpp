#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "icq/corpus.hpp"
#include "icq/tokenize.hpp"

namespace icq {

/// Declaration order is also the tie-break order when cues rank equally.
enum class FeatureKind { kWord, kSentiment, kTense, kNegation, kOverlap, kNer, kTypo };

inline constexpr std::string_view kPresent = "present";

std::string_view to_string(FeatureKind kind);
FeatureKind parse_feature_kind(std::string_view text);

/// One feature value acting as a filter key, e.g. WORD:no or NEGATION.
struct FeatureSpec {
  FeatureKind kind = FeatureKind::kWord;
  std::string value;

  auto operator<=>(const FeatureSpec&) const = default;
  bool operator==(const FeatureSpec&) const = default;
};

/// Validates the value against its kind's domain.
FeatureSpec make_feature(FeatureKind kind, std::string value);

/// Parses "KIND:value" or a bare "KIND" for the present-marker kinds
/// (NEGATION, OVERLAP, TYPO).
FeatureSpec parse_feature(std::string_view literal);

/// "WORD:no", "NEGATION", "NER:PER".
std::string to_string(const FeatureSpec& feature);

inline const std::vector<std::string> kNerCategories{"CARDINAL", "LOC", "ORG", "PER", "TIME"};

struct ResourceBundle {
  std::unordered_map<std::string, int> sentiment_lexicon;
  std::unordered_set<std::string> stopwords;
  std::unordered_set<std::string> dictionary;
  std::unordered_set<std::string> negation_words;
  std::map<std::string, std::unordered_set<std::string>> gazetteers;
  std::unordered_set<std::string> irregular_past_verbs;
  std::unordered_set<std::string> present_verbs;
  std::unordered_set<std::string> future_auxiliaries;
  std::unordered_set<std::string> non_verbs;  // -ed/-ing words that are not verbs
  /// SHA-256 over every resource file name and content.
  std::string content_hash;

  /// Loads every resource file from `dir`; a missing file is an error.
  static ResourceBundle load(const std::filesystem::path& dir);

  /// $ICQ_RESOURCES if set, else the resources/ directory of the source tree.
  static std::filesystem::path default_dir();
};

enum class Scope { kBoth, kHypothesisOnly };

/// MCQ premises are shared by every choice, so only hypotheses are annotated.
inline Scope scope_for(TaskKind kind) { return kind == TaskKind::kMcq ? Scope::kHypothesisOnly : Scope::kBoth; }

/// Lowercase words of the in-scope tokens that may become WORD features.
using Vocabulary = std::unordered_set<std::string>;

std::set<FeatureSpec> annotate_word(const TokenizedInstance& tokens, Scope scope, const Vocabulary* vocab = nullptr);
FeatureSpec annotate_sentiment(const TokenizedInstance& tokens, const ResourceBundle& res, Scope scope);
std::optional<FeatureSpec> annotate_tense(const TokenizedInstance& tokens, const ResourceBundle& res, Scope scope);
std::optional<FeatureSpec> annotate_negation(const TokenizedInstance& tokens, const ResourceBundle& res, Scope scope);
/// Always reads both sides, whatever the task kind.
std::optional<FeatureSpec> annotate_overlap(const TokenizedInstance& tokens, const ResourceBundle& res);
std::set<FeatureSpec> annotate_ner(const TokenizedInstance& tokens, const ResourceBundle& res, Scope scope);
std::optional<FeatureSpec> annotate_typo(const TokenizedInstance& tokens, const ResourceBundle& res, Scope scope);

struct AnnotationSet {
  std::string id;
  std::set<FeatureSpec> features;

  bool contains(const FeatureSpec& f) const { return features.count(f) != 0; }
  bool operator==(const AnnotationSet&) const = default;
};

/// Annotations for both splits, aligned with the dataset's rows.
struct DatasetAnnotations {
  std::vector<AnnotationSet> train;
  std::vector<AnnotationSet> test;

  const std::vector<AnnotationSet>& split(Split s) const { return s == Split::kTrain ? train : test; }
  bool operator==(const DatasetAnnotations&) const = default;
};

struct AnnotateConfig {
  /// A word becomes a WORD candidate once it occurs in this many instances
  /// across train and test.
  std::size_t vocab_min_freq = 5;
  /// Worker threads; 0 = hardware concurrency.
  std::size_t jobs = 0;
  TokenizerConfig tokenizer;
};

/// Instance frequency of every in-scope lowercase alphabetic token over
/// both splits, filtered to `min_freq`.
Vocabulary build_vocabulary(const Dataset& dataset, std::size_t min_freq, const TokenizerConfig& tokenizer = {});

/// All annotators together under the dataset's scoping rule.
AnnotationSet annotate_instance(const TokenizedInstance& tokens, const ResourceBundle& res, Scope scope,
                                const Vocabulary* vocab);

DatasetAnnotations annotate_all(const Dataset& dataset, const ResourceBundle& res, const AnnotateConfig& config = {});

enum class SidecarMode { kMerge, kReplace };

/// Parses sidecar JSONL: {"id": str, "features": [{"kind": str, "value": str}, ...]}.
std::vector<AnnotationSet> parse_sidecar(std::string_view text, const std::string& source = "sidecar");

/// Applies sidecar entries to every split row with a matching id. Merge mode
/// adds features (a SENTIMENT or TENSE entry replaces the built-in one);
/// replace mode substitutes the whole set. Unknown ids are an error.
void apply_sidecar(DatasetAnnotations& annotations, const Dataset& dataset, const std::vector<AnnotationSet>& sidecar,
                   SidecarMode mode);

/// Serialized cache form used by the run store.
std::string serialize_annotations(const DatasetAnnotations& annotations);
DatasetAnnotations parse_annotations(std::string_view text);

}  // namespace icq
