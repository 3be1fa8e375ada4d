#include "icq/pipeline.hpp"

#include <algorithm>

#include "icq/error.hpp"

namespace icq {

AnalyzedDataset analyze(Dataset dataset, std::string dataset_hash, const ResourceBundle& resources,
                        const PipelineConfig& config) {
  AnnotateConfig ac;
  ac.vocab_min_freq = config.vocab_min_freq;
  ac.jobs = config.jobs;
  auto annotations = annotate_all(dataset, resources, ac);
  return from_annotations(std::move(dataset), std::move(dataset_hash), std::move(annotations));
}

AnalyzedDataset from_annotations(Dataset dataset, std::string dataset_hash, DatasetAnnotations annotations) {
  auto splits = filter_all(dataset, annotations);
  return AnalyzedDataset{std::move(dataset), std::move(dataset_hash), std::move(annotations), std::move(splits)};
}

RunManifest make_manifest(const AnalyzedDataset& analyzed, const std::string& resources_hash,
                          const PipelineConfig& config) {
  RunManifest m;
  const auto& ds = analyzed.dataset;
  m.dataset_name = ds.name();
  m.dataset_hash = analyzed.dataset_hash;
  m.task_kind = std::string(to_string(ds.task_kind()));
  m.label_set = ds.label_set();
  m.train_size = ds.train().size();
  m.test_size = ds.test().size();
  m.resources_hash = resources_hash;
  m.min_support = config.min_support;
  m.vocab_min_freq = config.vocab_min_freq;
  m.top_k = config.top_k;
  m.seed = config.seed;
  m.support_mode = config.support_mode;
  for (auto k : config.kinds) m.kinds.emplace_back(to_string(k));
  m.delta_threshold = config.delta_threshold;
  m.generated_at = utc_timestamp();
  return m;
}

CueRun discover_cues(const AnalyzedDataset& analyzed, const PipelineConfig& config) {
  if (config.top_k < 1) throw ValidationError("top_k must be >= 1");
  if (config.min_support < 1) throw ValidationError("min_support must be >= 1");
  CueRun run;
  for (const auto& split : analyzed.splits) {
    if (!config.kinds.empty() && !config.kinds.count(split.feature.kind)) continue;
    if (is_qualified(split, config.min_support, config.support_mode)) run.qualified.push_back(split);
  }
  std::vector<CueScore> scores;
  scores.reserve(run.qualified.size());
  for (const auto& split : run.qualified) scores.push_back(score_cue(split, analyzed.dataset.label_set()));
  run.ranked = rank_cues(std::move(scores), config.top_k);
  return run;
}

const FilteredSplit& qualified_split(const AnalyzedDataset& analyzed, const FeatureSpec& feature,
                                     const PipelineConfig& config) {
  auto it = std::lower_bound(analyzed.splits.begin(), analyzed.splits.end(), feature,
                             [](const FilteredSplit& s, const FeatureSpec& f) { return s.feature < f; });
  if (it == analyzed.splits.end() || it->feature != feature ||
      !is_qualified(*it, config.min_support, config.support_mode)) {
    throw ValidationError("feature not qualified (support_mode=" + std::string(to_string(config.support_mode)) +
                          ", min_support=" + std::to_string(config.min_support) + "): " + to_string(feature));
  }
  return *it;
}

ProbeReport probe_feature(const AnalyzedDataset& analyzed, const PredictionSet& preds, const FeatureSpec& feature,
                          const PipelineConfig& config) {
  const auto& split = qualified_split(analyzed, feature, config);
  return probe(preds, split, analyzed.dataset, config.seed, config.delta_threshold);
}

ReportDocument cue_report(const AnalyzedDataset& analyzed, const CueRun& run,
                          const std::map<std::string, PredictionSet>& models, const RunManifest& manifest) {
  std::map<std::string, std::vector<std::optional<double>>> deltas;
  for (const auto& [name, preds] : models) {
    auto& column = deltas[name];
    for (const auto& cue : run.ranked) {
      const auto& split = *std::find_if(run.qualified.begin(), run.qualified.end(),
                                        [&](const FilteredSplit& s) { return s.feature == cue.feature; });
      if (split.test_complement_rows.empty()) {
        column.push_back(std::nullopt);
        continue;
      }
      column.push_back(accuracy_test(preds, split, analyzed.dataset).delta);
    }
  }
  return emit_cue_table(run.ranked, deltas, manifest);
}

}  // namespace icq
