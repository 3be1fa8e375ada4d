#include "icq/cuescore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "icq/error.hpp"

namespace icq {

LabelDistribution distribution(std::span<const std::size_t> counts, std::span<const std::string> label_set) {
  if (counts.size() != label_set.size()) throw ValidationError("label counts do not match the label set");
  LabelDistribution out;
  out.labels.assign(label_set.begin(), label_set.end());
  out.support = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  out.proportions.assign(counts.size(), 0.0);
  if (out.support == 0) return out;
  const auto total = static_cast<double>(out.support);
  for (std::size_t i = 0; i < counts.size(); ++i) out.proportions[i] = static_cast<double>(counts[i]) / total;
  return out;
}

LabelDistribution distribution(const std::map<std::string, std::size_t>& counts,
                               std::span<const std::string> label_set) {
  std::vector<std::size_t> aligned(label_set.size(), 0);
  for (const auto& [label, n] : counts) {
    auto it = std::find(label_set.begin(), label_set.end(), label);
    if (it == label_set.end()) throw ValidationError("unknown label '" + label + "'");
    aligned[static_cast<std::size_t>(it - label_set.begin())] = n;
  }
  return distribution(aligned, label_set);
}

namespace kernels {

double mse(std::span<const double> p) {
  if (p.empty()) return 0.0;
  const double n = static_cast<double>(p.size());
  const double mean = 1.0 / n;
  double acc = 0.0;
  for (double x : p) acc += (x - mean) * (x - mean);
  return acc / n;
}

double jsd(std::span<const double> p, std::span<const double> q) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) acc += 0.5 * p[i] * std::log2(p[i] / m);
    if (q[i] > 0.0) acc += 0.5 * q[i] * std::log2(q[i] / m);
  }
  // Rounding can push the sum a hair outside [0, 1].
  return std::clamp(acc, 0.0, 1.0);
}

}  // namespace kernels

double mse(const LabelDistribution& dist) {
  if (dist.support == 0) throw ValidationError("mse of a distribution with zero support");
  return kernels::mse(dist.proportions);
}

double jsd(const LabelDistribution& p, const LabelDistribution& q) {
  if (p.labels != q.labels || p.proportions.size() != q.proportions.size()) {
    throw ValidationError("jsd over mismatched label sets");
  }
  if (p.support == 0 || q.support == 0) throw ValidationError("jsd of a distribution with zero support");
  return kernels::jsd(p.proportions, q.proportions);
}

double cueness(const LabelDistribution& train, const LabelDistribution& test) {
  return mse(train) / std::exp(jsd(train, test));
}

CueScore score_cue(const FilteredSplit& split, std::span<const std::string> label_set) {
  CueScore out;
  out.feature = split.feature;
  out.train_dist = distribution(split.train_label_counts, label_set);
  out.test_dist = distribution(split.test_label_counts, label_set);
  out.train_support = out.train_dist.support;
  out.test_support = out.test_dist.support;
  out.mse_train = mse(out.train_dist);
  out.jsd = jsd(out.train_dist, out.test_dist);
  out.cueness = out.mse_train / std::exp(out.jsd);
  return out;
}

std::vector<CueScore> rank_cues(std::vector<CueScore> scores, std::size_t top_k) {
  std::sort(scores.begin(), scores.end(), [](const CueScore& a, const CueScore& b) {
    if (a.cueness != b.cueness) return a.cueness > b.cueness;
    return a.feature < b.feature;
  });
  if (scores.size() > top_k) scores.resize(top_k);
  return scores;
}

double dataset_cueness(std::span<const CueScore> ranked) {
  double total = 0.0;
  for (const auto& s : ranked) total += s.cueness;
  return total;
}

}  // namespace icq
