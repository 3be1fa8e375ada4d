#include "icq/probe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <json.hpp>

#include "icq/error.hpp"
#include "icq/util.hpp"

namespace icq {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::size_t PredictionSet::coverage() const {
  return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](const auto& l) { return l.has_value(); }));
}

namespace {

enum class Form { kLabel, kScores, kScore };

/// Test rows grouped by question, each group ordered by choice index.
std::map<std::string, std::vector<std::uint32_t>> question_groups(const Dataset& dataset) {
  std::map<std::string, std::vector<std::uint32_t>> groups;
  const auto& test = dataset.test();
  for (std::uint32_t row = 0; row < test.size(); ++row) {
    if (test[row].question_id) groups[*test[row].question_id].push_back(row);
  }
  for (auto& [qid, rows] : groups) {
    std::sort(rows.begin(), rows.end(),
              [&](std::uint32_t a, std::uint32_t b) { return *test[a].choice_index < *test[b].choice_index; });
  }
  return groups;
}

}  // namespace

PredictionSet load_predictions(std::string_view text, const Dataset& dataset, std::string model_name,
                               const std::string& source) {
  const auto& labels = dataset.label_set();
  PredictionSet out;
  out.model_name = std::move(model_name);
  out.labels.assign(dataset.test().size(), std::nullopt);

  std::vector<double> mcq_scores(dataset.test().size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<bool> seen(dataset.test().size(), false);
  std::vector<std::string> unknown;
  std::vector<std::string> duplicates;
  std::optional<Form> form;
  std::size_t line_no = 0;
  std::size_t records = 0;

  for (auto line : split_lines(text)) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source, line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_string()) {
      throw ParseError(source, line_no, "prediction record needs a string \"id\"");
    }
    const int forms = static_cast<int>(rec.contains("pred")) + static_cast<int>(rec.contains("scores")) +
                      static_cast<int>(rec.contains("score"));
    if (forms != 1) {
      throw ParseError(source, line_no, "not a prediction record: expected exactly one of \"pred\", \"scores\", \"score\"");
    }
    const Form this_form = rec.contains("pred") ? Form::kLabel : (rec.contains("scores") ? Form::kScores : Form::kScore);
    if (form && *form != this_form) throw ParseError(source, line_no, "mixed prediction forms in one file");
    form = this_form;
    if (this_form == Form::kScore && dataset.task_kind() != TaskKind::kMcq) {
      throw ParseError(source, line_no, "single \"score\" predictions are only valid for MCQ datasets");
    }
    ++records;

    const auto id = rec["id"].get<std::string>();
    const auto row = dataset.row_of(Split::kTest, id);
    if (!row) {
      unknown.push_back(id);
      continue;
    }
    if (seen[*row]) {
      duplicates.push_back(id);
      continue;
    }
    seen[*row] = true;

    switch (this_form) {
      case Form::kLabel: {
        if (!rec["pred"].is_string()) throw ParseError(source, line_no, "\"pred\" must be a string");
        const auto li = dataset.label_index(rec["pred"].get<std::string>());
        if (!li) throw ParseError(source, line_no, "predicted label '" + rec["pred"].get<std::string>() + "' is not in the label set");
        out.labels[*row] = static_cast<std::uint32_t>(*li);
        break;
      }
      case Form::kScores: {
        const auto& scores = rec["scores"];
        if (!scores.is_object() || scores.empty()) throw ParseError(source, line_no, "\"scores\" must be a non-empty object");
        std::optional<std::uint32_t> best;
        double best_score = -std::numeric_limits<double>::infinity();
        for (auto it = scores.begin(); it != scores.end(); ++it) {
          if (!dataset.label_index(it.key())) throw ParseError(source, line_no, "score label '" + it.key() + "' is not in the label set");
          if (!it.value().is_number()) throw ParseError(source, line_no, "scores must be numbers");
        }
        for (std::uint32_t li = 0; li < labels.size(); ++li) {
          auto it = scores.find(labels[li]);
          if (it == scores.end()) continue;
          const double v = it->get<double>();
          if (!best || v > best_score) {
            best = li;
            best_score = v;
          }
        }
        out.labels[*row] = best;
        break;
      }
      case Form::kScore:
        if (!rec["score"].is_number()) throw ParseError(source, line_no, "\"score\" must be a number");
        mcq_scores[*row] = rec["score"].get<double>();
        break;
    }
  }
  if (records == 0) throw ValidationError(source + ": no predictions");
  if (!unknown.empty()) throw IdListError(source + ": ids not in the test split", std::move(unknown));
  if (!duplicates.empty()) throw IdListError(source + ": duplicate ids", std::move(duplicates));

  if (form == Form::kScore) {
    const auto t = static_cast<std::uint32_t>(*dataset.label_index(kTrueLabel));
    const auto f = static_cast<std::uint32_t>(*dataset.label_index(kFalseLabel));
    std::vector<std::string> incomplete;
    for (const auto& [qid, rows] : question_groups(dataset)) {
      const auto scored = std::count_if(rows.begin(), rows.end(), [&](std::uint32_t r) { return seen[r]; });
      if (scored == 0) continue;
      if (static_cast<std::size_t>(scored) != rows.size()) {
        for (auto r : rows) {
          if (!seen[r]) incomplete.push_back(dataset.test()[r].id);
        }
        continue;
      }
      std::uint32_t winner = rows.front();
      for (auto r : rows) {
        if (mcq_scores[r] > mcq_scores[winner]) winner = r;
      }
      for (auto r : rows) out.labels[r] = r == winner ? t : f;
    }
    if (!incomplete.empty()) throw IdListError(source + ": incomplete question groups, missing", std::move(incomplete));
  }
  return out;
}

std::vector<std::string> missing_ids(const PredictionSet& preds, const Dataset& dataset) {
  std::vector<std::string> out;
  for (std::size_t row = 0; row < dataset.test().size(); ++row) {
    if (row >= preds.labels.size() || !preds.labels[row]) out.push_back(dataset.test()[row].id);
  }
  return out;
}

void require_full_coverage(const PredictionSet& preds, const Dataset& dataset) {
  auto missing = missing_ids(preds, dataset);
  if (!missing.empty()) throw IdListError("predictions missing for test ids", std::move(missing));
}

std::string serialize_predictions(const PredictionSet& preds, const Dataset& dataset) {
  std::string out;
  for (std::size_t row = 0; row < preds.labels.size(); ++row) {
    if (!preds.labels[row]) continue;
    ordered_json rec;
    rec["id"] = dataset.test()[row].id;
    rec["pred"] = dataset.label_set()[*preds.labels[row]];
    out += rec.dump() + "\n";
  }
  return out;
}

double accuracy(const PredictionSet& preds, std::span<const std::uint32_t> test_rows, const Dataset& dataset,
                CoverageMode mode) {
  if (test_rows.empty()) throw ValidationError("empty evaluation set");
  std::size_t correct = 0;
  std::size_t evaluated = 0;
  std::vector<std::string> missing;
  for (auto row : test_rows) {
    const auto& p = preds.labels.at(row);
    if (!p) {
      missing.push_back(dataset.test()[row].id);
      continue;
    }
    ++evaluated;
    if (*p == dataset.gold(Split::kTest, row)) ++correct;
  }
  if (mode == CoverageMode::kStrict && !missing.empty()) {
    throw IdListError("predictions missing for test ids", std::move(missing));
  }
  if (evaluated == 0) throw ValidationError("empty evaluation set");
  return static_cast<double>(correct) / static_cast<double>(evaluated);
}

double question_accuracy(const PredictionSet& preds, const Dataset& dataset, CoverageMode mode) {
  if (dataset.task_kind() == TaskKind::kCls) {
    std::vector<std::uint32_t> rows(dataset.test().size());
    for (std::uint32_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return accuracy(preds, rows, dataset, mode);
  }
  std::size_t correct = 0;
  std::size_t evaluated = 0;
  std::vector<std::string> missing;
  for (const auto& [qid, rows] : question_groups(dataset)) {
    bool complete = true;
    bool right = true;
    for (auto r : rows) {
      const auto& p = preds.labels.at(r);
      if (!p) {
        complete = false;
        missing.push_back(dataset.test()[r].id);
      } else if (*p != dataset.gold(Split::kTest, r)) {
        right = false;
      }
    }
    if (!complete) continue;
    ++evaluated;
    if (right) ++correct;
  }
  if (mode == CoverageMode::kStrict && !missing.empty()) {
    throw IdListError("predictions missing for test ids", std::move(missing));
  }
  if (evaluated == 0) throw ValidationError("empty evaluation set");
  return static_cast<double>(correct) / static_cast<double>(evaluated);
}

AccuracyTest accuracy_test(const PredictionSet& preds, const FilteredSplit& split, const Dataset& dataset,
                           CoverageMode mode) {
  AccuracyTest out;
  out.acc_f = accuracy(preds, split.test_rows, dataset, mode);
  out.acc_nf = accuracy(preds, split.test_complement_rows, dataset, mode);
  out.delta = out.acc_f - out.acc_nf;
  return out;
}

StressSet build_stress_set(const FilteredSplit& split, const Dataset& dataset, std::uint64_t seed) {
  if (split.test_rows.empty()) throw ValidationError("cannot build a stress set from an empty S_f");
  const auto n_labels = dataset.label_set().size();
  std::vector<std::vector<std::uint32_t>> by_label(n_labels);
  for (auto row : split.test_rows) by_label[dataset.gold(Split::kTest, row)].push_back(row);

  std::size_t present = 0;
  std::size_t target = 0;
  for (const auto& rows : by_label) {
    if (!rows.empty()) ++present;
    target = std::max(target, rows.size());
  }
  if (present < 2) {
    throw ValidationError("degenerate stress set for " + to_string(split.feature) +
                          ": only one label present in the filtered test set");
  }

  StressSet out;
  out.feature = split.feature;
  out.seed = seed;
  out.rows = split.test_rows;
  out.label_counts.assign(n_labels, 0);
  Rng rng(seed);
  for (std::size_t li = 0; li < n_labels; ++li) {
    const auto& pool = by_label[li];
    out.label_counts[li] = pool.empty() ? 0 : target;
    if (pool.empty()) continue;
    for (std::size_t k = pool.size(); k < target; ++k) out.rows.push_back(pool[rng.below(pool.size())]);
  }
  return out;
}

std::string serialize_stress_set(const StressSet& stress, const Dataset& dataset) {
  std::map<std::uint32_t, std::size_t> copies;
  std::vector<std::uint32_t> order;
  for (auto row : stress.rows) {
    if (copies[row]++ == 0) order.push_back(row);
  }
  std::string out;
  for (auto row : order) {
    const auto& inst = dataset.test()[row];
    ordered_json rec;
    rec["id"] = inst.id;
    rec["premise"] = inst.premise;
    rec["hypothesis"] = inst.hypothesis;
    rec["label"] = inst.label;
    if (inst.question_id) {
      rec["question_id"] = *inst.question_id;
      rec["choice_index"] = *inst.choice_index;
    }
    rec["replicas"] = copies[row];
    out += rec.dump() + "\n";
  }
  return out;
}

DistributionTest distribution_test(const PredictionSet& preds, const StressSet& stress, const FilteredSplit& split,
                                   const Dataset& dataset) {
  const auto& labels = dataset.label_set();
  LabelCounts predicted(labels.size(), 0);
  std::vector<std::string> missing;
  for (auto row : stress.rows) {
    const auto& p = preds.labels.at(row);
    if (!p) {
      missing.push_back(dataset.test()[row].id);
      continue;
    }
    ++predicted[*p];
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    throw IdListError("predictions missing for stress-set ids", std::move(missing));
  }
  DistributionTest out;
  out.train_dist = distribution(split.train_label_counts, labels);
  out.stress_pred_dist = distribution(predicted, labels);
  out.dist_jsd = jsd(out.train_dist, out.stress_pred_dist);
  return out;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kExploits:
      return "exploits";
    case Verdict::kResists:
      return "resists";
    case Verdict::kInconclusive:
      break;
  }
  return "inconclusive";
}

namespace {

std::optional<std::size_t> unique_argmax(const LabelDistribution& d) {
  if (d.support == 0 || d.proportions.empty()) return std::nullopt;
  const auto it = std::max_element(d.proportions.begin(), d.proportions.end());
  if (std::count(d.proportions.begin(), d.proportions.end(), *it) != 1) return std::nullopt;
  return static_cast<std::size_t>(it - d.proportions.begin());
}

}  // namespace

Verdict verdict(double delta, const LabelDistribution& train_dist, const LabelDistribution& stress_pred_dist,
                double threshold) {
  if (delta <= 0.0) return Verdict::kResists;
  const auto a_train = unique_argmax(train_dist);
  const auto a_stress = unique_argmax(stress_pred_dist);
  if (a_train && a_stress && *a_train != *a_stress) return Verdict::kResists;
  if (delta > threshold && a_train && a_stress &&
      kernels::mse(stress_pred_dist.proportions) >= kernels::mse(train_dist.proportions)) {
    return Verdict::kExploits;
  }
  return Verdict::kInconclusive;
}

ProbeReport probe(const PredictionSet& preds, const FilteredSplit& split, const Dataset& dataset, std::uint64_t seed,
                  double delta_threshold) {
  ProbeReport out;
  out.model_name = preds.model_name;
  out.feature = split.feature;
  out.delta_threshold = delta_threshold;
  out.accuracy = accuracy_test(preds, split, dataset);
  out.stress = build_stress_set(split, dataset, seed);
  out.distribution = distribution_test(preds, out.stress, split, dataset);
  out.verdict = verdict(out.accuracy.delta, out.distribution.train_dist, out.distribution.stress_pred_dist,
                        delta_threshold);
  return out;
}

double majority_baseline(const Dataset& dataset) {
  if (dataset.task_kind() == TaskKind::kMcq) {
    std::map<std::size_t, std::size_t> size_freq;
    for (const auto& [qid, rows] : question_groups(dataset)) ++size_freq[rows.size()];
    std::size_t modal_k = 0;
    std::size_t best = 0;
    for (const auto& [k, n] : size_freq) {
      if (n > best) {
        best = n;
        modal_k = k;
      }
    }
    return 1.0 / static_cast<double>(modal_k);
  }
  LabelCounts counts(dataset.label_set().size(), 0);
  for (std::size_t row = 0; row < dataset.test().size(); ++row) ++counts[dataset.gold(Split::kTest, row)];
  const auto top = *std::max_element(counts.begin(), counts.end());
  return static_cast<double>(top) / static_cast<double>(dataset.test().size());
}

HypoComparison compare_accuracies(double acc_full, double acc_hypo, double majority) {
  return HypoComparison{acc_full, acc_hypo, majority, acc_hypo - majority, acc_full - acc_hypo};
}

HypoComparison hypo_compare(const PredictionSet& full_preds, const PredictionSet& hypo_preds, const Dataset& dataset) {
  require_full_coverage(full_preds, dataset);
  require_full_coverage(hypo_preds, dataset);
  return compare_accuracies(question_accuracy(full_preds, dataset), question_accuracy(hypo_preds, dataset),
                            majority_baseline(dataset));
}

double model_weakness(std::span<const double> deltas) {
  double total = 0.0;
  for (double d : deltas) total += std::abs(d);
  return total;
}

}  // namespace icq
