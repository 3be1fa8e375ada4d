#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "icq/annotate.hpp"
#include "icq/corpus.hpp"

namespace icq {

/// Per-label counts aligned with Dataset::label_set().
using LabelCounts = std::vector<std::size_t>;

/// Instances carrying a feature (R_f in train, S_f in test) and the test
/// complement S_nf. Rows index into the dataset's splits, ascending.
struct FilteredSplit {
  FeatureSpec feature;
  std::vector<std::uint32_t> train_rows;
  std::vector<std::uint32_t> test_rows;
  std::vector<std::uint32_t> test_complement_rows;
  LabelCounts train_label_counts;
  LabelCounts test_label_counts;

  bool operator==(const FilteredSplit&) const = default;
};

FilteredSplit apply_filter(const Dataset& dataset, const DatasetAnnotations& annotations, const FeatureSpec& feature);

/// apply_filter for every feature that occurs anywhere in the annotations,
/// built in one pass. Sorted by feature. An empty `kinds` keeps every kind.
std::vector<FilteredSplit> filter_all(const Dataset& dataset, const DatasetAnnotations& annotations,
                                      const std::set<FeatureKind>& kinds = {});

enum class SupportMode {
  kBoth,  // at least min_support hits in train AND in test
  kAny,   // at least min_support hits in train OR test, and nonzero in both
};

std::string_view to_string(SupportMode mode);
SupportMode parse_support_mode(std::string_view text);

bool is_qualified(const FilteredSplit& split, std::size_t min_support, SupportMode mode = SupportMode::kBoth);

std::vector<FilteredSplit> qualify_cues(std::vector<FilteredSplit> splits, std::size_t min_support,
                                        SupportMode mode = SupportMode::kBoth);

}  // namespace icq
