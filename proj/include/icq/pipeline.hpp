#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "icq/annotate.hpp"
#include "icq/corpus.hpp"
#include "icq/cuescore.hpp"
#include "icq/filter.hpp"
#include "icq/probe.hpp"
#include "icq/report.hpp"

namespace icq {

struct PipelineConfig {
  std::size_t min_support = 5;
  std::size_t vocab_min_freq = 5;
  std::size_t top_k = 5;
  std::uint64_t seed = kDefaultSeed;
  SupportMode support_mode = SupportMode::kBoth;
  std::set<FeatureKind> kinds;  // empty = all
  std::size_t jobs = 0;
  double delta_threshold = kDefaultDeltaThreshold;
};

/// A dataset with its annotations and every feature's filtered split.
struct AnalyzedDataset {
  Dataset dataset;
  std::string dataset_hash;
  DatasetAnnotations annotations;
  std::vector<FilteredSplit> splits;
};

AnalyzedDataset analyze(Dataset dataset, std::string dataset_hash, const ResourceBundle& resources,
                        const PipelineConfig& config);

/// Rebuilds the filtered splits from cached annotations.
AnalyzedDataset from_annotations(Dataset dataset, std::string dataset_hash, DatasetAnnotations annotations);

RunManifest make_manifest(const AnalyzedDataset& analyzed, const std::string& resources_hash,
                          const PipelineConfig& config);

struct CueRun {
  std::vector<FilteredSplit> qualified;
  std::vector<CueScore> ranked;  // top_k
};

CueRun discover_cues(const AnalyzedDataset& analyzed, const PipelineConfig& config);

/// The qualified split for `feature`; throws ValidationError naming the
/// support settings when the feature does not qualify.
const FilteredSplit& qualified_split(const AnalyzedDataset& analyzed, const FeatureSpec& feature,
                                     const PipelineConfig& config);

ProbeReport probe_feature(const AnalyzedDataset& analyzed, const PredictionSet& preds, const FeatureSpec& feature,
                          const PipelineConfig& config);

/// Cue table with a delta column per model (accuracy test on each ranked cue).
ReportDocument cue_report(const AnalyzedDataset& analyzed, const CueRun& run,
                          const std::map<std::string, PredictionSet>& models, const RunManifest& manifest);

}  // namespace icq
