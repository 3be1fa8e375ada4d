#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "icq/cuescore.hpp"
#include "icq/filter.hpp"
#include "icq/probe.hpp"

namespace icq {

extern const char* const kToolVersion;

/// Everything that determines a report's content. Two runs with equal
/// manifests produce identical reports apart from `generated_at`.
struct RunManifest {
  std::string dataset_name;
  std::string dataset_hash;
  std::string task_kind;
  std::vector<std::string> label_set;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::string resources_hash;
  std::size_t min_support = 5;
  std::size_t vocab_min_freq = 5;
  std::size_t top_k = 5;
  std::uint64_t seed = kDefaultSeed;
  SupportMode support_mode = SupportMode::kBoth;
  std::vector<std::string> kinds;  // empty = all kinds
  double delta_threshold = kDefaultDeltaThreshold;
  std::string generated_at;  // ISO-8601 UTC

  nlohmann::json to_json() const;
};

std::string utc_timestamp();

/// First 16 hex digits of the SHA-256 of the manifest without its timestamp.
std::string run_id(const RunManifest& manifest);

/// Rendered document: JSON plus, where the report has one, its CSV table.
struct ReportDocument {
  nlohmann::json json;
  std::string csv;
};

/// "%.2f" of a percentage.
std::string percent_display(double fraction);

/// "%.6g", the precision shared by CSV cells and their JSON counterparts.
std::string sig6(double value);

nlohmann::json to_json(const LabelDistribution& dist);
nlohmann::json to_json(const CueScore& score);

/// Table-3 shaped cue table. `deltas` maps model name to per-cue delta
/// (aligned with `ranked`; nullopt where that model was not probed).
ReportDocument emit_cue_table(const std::vector<CueScore>& ranked,
                              const std::map<std::string, std::vector<std::optional<double>>>& deltas,
                              const RunManifest& manifest);

/// Bar-chart series for the filtered-train and stress-prediction
/// distributions. A zero-support series is flagged degenerate and has no points.
nlohmann::json emit_distribution_chart(const LabelDistribution& train_dist, const LabelDistribution& stress_pred_dist);

nlohmann::json to_json(const ProbeReport& report, const Dataset& dataset);

ReportDocument emit_probe_report(const ProbeReport& report, const Dataset& dataset, const RunManifest& manifest);

struct HypoRow {
  std::string dataset;
  std::string model;
  HypoComparison values;  // fractions
};

/// Reads an accuracy table in percent:
/// {"datasets": [{"name", "majority", "models": {"FT": {"full", "hypo"}}}]}.
std::vector<HypoRow> parse_accuracy_table(std::string_view text);

ReportDocument emit_hypo_report(const std::vector<HypoRow>& rows);

/// Filename-safe form of a feature or model name.
std::string slug(std::string_view text);

/// Writes cues.json, cues.csv and manifest.json under `run_dir`.
void write_cue_report(const std::filesystem::path& run_dir, const ReportDocument& doc, const RunManifest& manifest);

/// Upserts the probe into probe-<model>.json (one entry per feature) and
/// writes charts/<feature>-<model>.json.
void write_probe_report(const std::filesystem::path& run_dir, const ReportDocument& doc, const RunManifest& manifest);

/// Drops every "generated_at" member, recursively. Used when comparing reports.
nlohmann::json without_timestamps(nlohmann::json doc);

/// Pretty-printed, newline-terminated JSON as written to disk.
std::string dump_report(const nlohmann::json& doc);

}  // namespace icq
