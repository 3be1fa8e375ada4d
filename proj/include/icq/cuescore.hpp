#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "icq/annotate.hpp"
#include "icq/corpus.hpp"
#include "icq/filter.hpp"

namespace icq {

struct LabelDistribution {
  std::vector<std::string> labels;
  std::vector<double> proportions;
  std::size_t support = 0;

  bool operator==(const LabelDistribution&) const = default;
};

/// Normalizes counts over `label_set`. All-zero counts give a zero vector
/// with support 0. A key outside the label set is an error.
LabelDistribution distribution(const std::map<std::string, std::size_t>& counts,
                               std::span<const std::string> label_set);
LabelDistribution distribution(std::span<const std::size_t> counts, std::span<const std::string> label_set);

namespace kernels {

/// Mean squared deviation of `p` from its mean 1/|p|.
double mse(std::span<const double> p);

/// Jensen-Shannon divergence in bits; 0·log 0 = 0.
double jsd(std::span<const double> p, std::span<const double> q);

}  // namespace kernels

/// Label-distribution skew. Throws on zero support.
double mse(const LabelDistribution& dist);

/// Base-2 JSD, in [0, 1]. Throws on zero support or mismatched labels.
double jsd(const LabelDistribution& p, const LabelDistribution& q);

/// mse(train) / exp(jsd(train, test)).
double cueness(const LabelDistribution& train, const LabelDistribution& test);

struct CueScore {
  FeatureSpec feature;
  double mse_train = 0.0;
  double jsd = 0.0;
  double cueness = 0.0;
  LabelDistribution train_dist;
  LabelDistribution test_dist;
  std::size_t train_support = 0;
  std::size_t test_support = 0;
};

/// Scores one filtered split; both sides must be nonempty.
CueScore score_cue(const FilteredSplit& split, std::span<const std::string> label_set);

/// Descending cueness, ties by (kind, value); truncated to `top_k`.
std::vector<CueScore> rank_cues(std::vector<CueScore> scores, std::size_t top_k = 5);

/// Sum of cueness over an already-ranked list.
double dataset_cueness(std::span<const CueScore> ranked);

}  // namespace icq
