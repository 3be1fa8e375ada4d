#include "icq/filter.hpp"

#include <map>

#include "icq/error.hpp"

namespace icq {

FilteredSplit apply_filter(const Dataset& dataset, const DatasetAnnotations& annotations, const FeatureSpec& feature) {
  if (annotations.train.size() != dataset.train().size() || annotations.test.size() != dataset.test().size()) {
    throw ValidationError("annotations do not cover every instance");
  }
  const auto n_labels = dataset.label_set().size();
  FilteredSplit out{feature, {}, {}, {}, LabelCounts(n_labels, 0), LabelCounts(n_labels, 0)};
  for (std::uint32_t row = 0; row < annotations.train.size(); ++row) {
    if (annotations.train[row].contains(feature)) {
      out.train_rows.push_back(row);
      ++out.train_label_counts[dataset.gold(Split::kTrain, row)];
    }
  }
  for (std::uint32_t row = 0; row < annotations.test.size(); ++row) {
    if (annotations.test[row].contains(feature)) {
      out.test_rows.push_back(row);
      ++out.test_label_counts[dataset.gold(Split::kTest, row)];
    } else {
      out.test_complement_rows.push_back(row);
    }
  }
  return out;
}

std::vector<FilteredSplit> filter_all(const Dataset& dataset, const DatasetAnnotations& annotations,
                                      const std::set<FeatureKind>& kinds) {
  if (annotations.train.size() != dataset.train().size() || annotations.test.size() != dataset.test().size()) {
    throw ValidationError("annotations do not cover every instance");
  }
  const auto n_labels = dataset.label_set().size();
  std::map<FeatureSpec, FilteredSplit> by_feature;
  auto slot = [&](const FeatureSpec& f) -> FilteredSplit& {
    auto [it, inserted] = by_feature.try_emplace(f);
    if (inserted) {
      it->second.feature = f;
      it->second.train_label_counts.assign(n_labels, 0);
      it->second.test_label_counts.assign(n_labels, 0);
    }
    return it->second;
  };
  auto wanted = [&](const FeatureSpec& f) { return kinds.empty() || kinds.count(f.kind); };

  for (std::uint32_t row = 0; row < annotations.train.size(); ++row) {
    for (const auto& f : annotations.train[row].features) {
      if (!wanted(f)) continue;
      auto& s = slot(f);
      s.train_rows.push_back(row);
      ++s.train_label_counts[dataset.gold(Split::kTrain, row)];
    }
  }
  for (std::uint32_t row = 0; row < annotations.test.size(); ++row) {
    for (const auto& f : annotations.test[row].features) {
      if (!wanted(f)) continue;
      auto& s = slot(f);
      s.test_rows.push_back(row);
      ++s.test_label_counts[dataset.gold(Split::kTest, row)];
    }
  }

  const auto n_test = static_cast<std::uint32_t>(annotations.test.size());
  std::vector<FilteredSplit> out;
  out.reserve(by_feature.size());
  for (auto& [feature, split] : by_feature) {
    split.test_complement_rows.reserve(n_test - split.test_rows.size());
    std::size_t k = 0;
    for (std::uint32_t row = 0; row < n_test; ++row) {
      if (k < split.test_rows.size() && split.test_rows[k] == row) {
        ++k;
      } else {
        split.test_complement_rows.push_back(row);
      }
    }
    out.push_back(std::move(split));
  }
  return out;
}

std::string_view to_string(SupportMode mode) { return mode == SupportMode::kBoth ? "both" : "any"; }

SupportMode parse_support_mode(std::string_view text) {
  if (text == "both") return SupportMode::kBoth;
  if (text == "any") return SupportMode::kAny;
  throw ValidationError("support mode must be 'both' or 'any', got '" + std::string(text) + "'");
}

bool is_qualified(const FilteredSplit& split, std::size_t min_support, SupportMode mode) {
  const auto r = split.train_rows.size();
  const auto s = split.test_rows.size();
  if (mode == SupportMode::kBoth) return r >= min_support && s >= min_support;
  return r > 0 && s > 0 && (r >= min_support || s >= min_support);
}

std::vector<FilteredSplit> qualify_cues(std::vector<FilteredSplit> splits, std::size_t min_support, SupportMode mode) {
  if (min_support < 1) throw ValidationError("min_support must be >= 1");
  std::erase_if(splits, [&](const FilteredSplit& s) { return !is_qualified(s, min_support, mode); });
  return splits;
}

}  // namespace icq
