#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "icq/annotate.hpp"
#include "icq/corpus.hpp"
#include "icq/filter.hpp"
#include "icq/probe.hpp"

namespace icq::fixtures {

/// A second word planted on an exact number of instances, all with one label.
struct ExtraPlant {
  std::string word;
  std::size_t train_hits = 0;
  std::size_t test_hits = 0;
  std::string label;
};

struct PlantSpec {
  std::string name = "planted";
  TaskKind task_kind = TaskKind::kCls;
  std::size_t n_train = 1000;  // instances for CLS, questions for MCQ
  std::size_t n_test = 200;
  std::vector<std::string> labels{"A", "B", "C"};  // ignored for MCQ
  std::size_t choices = 2;                          // MCQ only
  FeatureSpec feature{FeatureKind::kWord, "zork"};  // WORD or NEGATION
  double p_feat = 0.2;
  double q = 0.9;
  std::string target_label;  // defaults to labels[0] ("true" for MCQ)
  std::uint64_t seed = 7;
  std::vector<ExtraPlant> extra;
};

PlantSpec parse_plant_spec(const nlohmann::json& doc);

/// Counts and statistics recorded while planting.
struct PlantOracle {
  FeatureSpec feature;
  std::string target_label;
  std::vector<std::string> label_set;
  std::vector<std::size_t> train_label_counts;
  std::vector<std::size_t> test_label_counts;
  std::vector<std::uint32_t> train_carriers;  // rows
  std::vector<std::uint32_t> test_carriers;
  double mse = 0.0;
  double jsd = 0.0;
  double cueness = 0.0;

  struct Extra {
    std::string word;
    std::vector<std::size_t> train_label_counts;
    std::vector<std::size_t> test_label_counts;
  };
  std::vector<Extra> extra;

  nlohmann::json to_json() const;
};

struct Generated {
  Dataset dataset;
  PlantOracle oracle;
};

/// Pure function of the spec. Throws ValidationError on a degenerate spec.
Generated generate(const PlantSpec& spec);

/// Random k-way questions with k drawn from [k_min, k_max].
std::vector<McqRecord> random_mcq_records(std::size_t n, std::size_t k_min, std::size_t k_max, std::uint64_t seed);

/// Words the filler templates draw from.
const std::vector<std::string>& filler_words();

enum class PredictorKind { kAlwaysLabel, kGold, kUniformRandom, kCueFollower };

std::string_view to_string(PredictorKind kind);
PredictorKind parse_predictor_kind(std::string_view text);

/// cue-follower predicts the target label on the oracle's test carriers and
/// gold elsewhere; always-label predicts the target label everywhere.
PredictionSet synth_predictor(PredictorKind kind, const Dataset& dataset, const PlantOracle& oracle,
                              std::uint64_t seed = 0);

/// Writes the dataset directory, oracle.json and predictions/<kind>.jsonl.
void write_fixture(const Generated& generated, const std::filesystem::path& dir,
                   const std::vector<PredictorKind>& predictors, std::uint64_t predictor_seed = 0);

}  // namespace icq::fixtures
