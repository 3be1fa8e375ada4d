#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "icq/cuescore.hpp"
#include "icq/filter.hpp"

namespace icq {

/// Black-box model output resolved to one predicted label per test row.
/// Score-form files are converted at load time.
struct PredictionSet {
  std::string model_name;
  /// Predicted label index for each test row; empty where the file had no entry.
  std::vector<std::optional<std::uint32_t>> labels;

  std::size_t coverage() const;
  bool operator==(const PredictionSet&) const = default;
};

/// Parses a label-form ({"id","pred"}) or score-form ({"id","scores"} for CLS,
/// {"id","score"} for MCQ) prediction file. MCQ scores become true for the
/// highest-scoring choice of each question (lowest choice index on ties).
PredictionSet load_predictions(std::string_view text, const Dataset& dataset, std::string model_name,
                               const std::string& source = "predictions");

/// Test ids without a prediction, in row order.
std::vector<std::string> missing_ids(const PredictionSet& preds, const Dataset& dataset);

/// Throws IdListError listing every uncovered test id.
void require_full_coverage(const PredictionSet& preds, const Dataset& dataset);

/// Writes the label form, one line per covered test row.
std::string serialize_predictions(const PredictionSet& preds, const Dataset& dataset);

enum class CoverageMode { kStrict, kSkipMissing };

/// Instance-level accuracy over test rows.
double accuracy(const PredictionSet& preds, std::span<const std::uint32_t> test_rows, const Dataset& dataset,
                CoverageMode mode = CoverageMode::kStrict);

/// Accuracy over the whole test split. MCQ datasets are scored per question:
/// a question counts as correct when every one of its choices is.
double question_accuracy(const PredictionSet& preds, const Dataset& dataset,
                         CoverageMode mode = CoverageMode::kStrict);

struct AccuracyTest {
  double acc_f = 0.0;
  double acc_nf = 0.0;
  double delta = 0.0;
};

AccuracyTest accuracy_test(const PredictionSet& preds, const FilteredSplit& split, const Dataset& dataset,
                           CoverageMode mode = CoverageMode::kStrict);

/// S_f with minority-label rows replicated until every present label has
/// the majority count.
struct StressSet {
  FeatureSpec feature;
  std::vector<std::uint32_t> rows;  // S_f rows in order, then replicas in draw order
  std::uint64_t seed = 0;
  LabelCounts label_counts;

  bool operator==(const StressSet&) const = default;
};

inline constexpr std::uint64_t kDefaultSeed = 42;

StressSet build_stress_set(const FilteredSplit& split, const Dataset& dataset, std::uint64_t seed = kDefaultSeed);

/// JSONL export: one record per distinct row with its replica count.
std::string serialize_stress_set(const StressSet& stress, const Dataset& dataset);

struct DistributionTest {
  LabelDistribution train_dist;
  LabelDistribution stress_pred_dist;
  double dist_jsd = 0.0;
};

DistributionTest distribution_test(const PredictionSet& preds, const StressSet& stress, const FilteredSplit& split,
                                   const Dataset& dataset);

enum class Verdict { kExploits, kResists, kInconclusive };

std::string_view to_string(Verdict v);

inline constexpr double kDefaultDeltaThreshold = 0.02;

/// exploits: delta above threshold and the stress predictions are at least as
/// skewed as train toward the same label. resists: delta <= 0, or both
/// distributions have a unique argmax and they differ. Otherwise inconclusive
/// (e.g. high delta with flat predictions).
Verdict verdict(double delta, const LabelDistribution& train_dist, const LabelDistribution& stress_pred_dist,
                double threshold = kDefaultDeltaThreshold);

struct ProbeReport {
  std::string model_name;
  FeatureSpec feature;
  AccuracyTest accuracy;
  StressSet stress;
  DistributionTest distribution;
  Verdict verdict = Verdict::kInconclusive;
  double delta_threshold = kDefaultDeltaThreshold;
};

ProbeReport probe(const PredictionSet& preds, const FilteredSplit& split, const Dataset& dataset,
                  std::uint64_t seed = kDefaultSeed, double delta_threshold = kDefaultDeltaThreshold);

/// Max test-label proportion for CLS; 1/k for MCQ with k the modal group size.
double majority_baseline(const Dataset& dataset);

struct HypoComparison {
  double acc_full = 0.0;
  double acc_hypo = 0.0;
  double majority = 0.0;
  double hypo_minus_majority = 0.0;
  double full_minus_hypo = 0.0;
};

/// Derived bar values from accuracies that are already known.
HypoComparison compare_accuracies(double acc_full, double acc_hypo, double majority);

HypoComparison hypo_compare(const PredictionSet& full_preds, const PredictionSet& hypo_preds, const Dataset& dataset);

/// Sum of |delta|.
double model_weakness(std::span<const double> deltas);

}  // namespace icq
