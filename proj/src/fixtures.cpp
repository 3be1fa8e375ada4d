#include "icq/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "icq/error.hpp"
#include "icq/util.hpp"

namespace icq::fixtures {

using json = nlohmann::json;

namespace {

const std::vector<std::string> kNouns{"table", "window", "garden", "river", "bottle", "chair",  "paper",  "street",
                                      "kitchen", "basket", "ladder", "wall",  "door",   "box",    "cup",    "road",
                                      "field",  "bridge", "tower",  "corner", "pencil", "shelf",  "bucket", "fence"};
const std::vector<std::string> kAdjectives{"small", "large", "wooden", "round", "tall", "narrow", "heavy", "square"};
const std::vector<std::string> kVerbs{"moves", "holds", "opens", "carries", "moved", "held", "opened", "carried"};
const std::vector<std::string> kPreps{"near", "behind", "beside", "under", "across", "along"};

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[rng.below(v.size())];
}

std::vector<std::string> filler_sentence(Rng& rng) {
  return {"the", pick(rng, kAdjectives), pick(rng, kNouns), pick(rng, kVerbs), pick(rng, kPreps), "the",
          pick(rng, kNouns)};
}

std::string join_sentence(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out + " .";
}

std::string plant_word(const FeatureSpec& feature) {
  if (feature.kind == FeatureKind::kWord) return feature.value;
  if (feature.kind == FeatureKind::kNegation) return "never";
  throw ValidationError("fixtures can plant WORD or NEGATION features, not " + to_string(feature));
}

/// Inserts `word` after a random position of the sentence (never before "the").
std::string sentence_with(Rng& rng, const std::string& word) {
  auto words = filler_sentence(rng);
  const auto pos = 1 + rng.below(words.size());
  words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos), word);
  return join_sentence(words);
}

/// Chooses `k` distinct entries of `pool` (partial Fisher-Yates).
std::vector<std::uint32_t> sample_without_replacement(Rng& rng, std::vector<std::uint32_t> pool, std::size_t k) {
  if (k > pool.size()) throw ValidationError("cannot plant " + std::to_string(k) + " extra hits in " +
                                             std::to_string(pool.size()) + " free instances");
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

// Direct-formula statistics, computed here rather than through the cuescore
// kernels so that fixtures can serve as an oracle for them.
std::vector<double> proportions(const std::vector<std::size_t>& counts) {
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  std::vector<double> p;
  for (auto c : counts) p.push_back(total > 0 ? static_cast<double>(c) / total : 0.0);
  return p;
}

double direct_mse(const std::vector<double>& p) {
  const double n = static_cast<double>(p.size());
  double sum_sq = 0.0;
  for (double x : p) sum_sq += x * x;
  // Σ(p - 1/n)² = Σp² - 2/n·Σp + 1/n, with Σp = 1.
  return (sum_sq - 1.0 / n) / n;
}

double direct_jsd(const std::vector<double>& p, const std::vector<double>& q) {
  auto kl_to_mid = [&](const std::vector<double>& a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double m = (p[i] + q[i]) / 2.0;
      if (a[i] > 0.0) acc += a[i] * (std::log(a[i]) - std::log(m));
    }
    return acc / std::log(2.0);
  };
  return 0.5 * kl_to_mid(p) + 0.5 * kl_to_mid(q);
}

void finish_oracle(PlantOracle& oracle) {
  const auto nan = std::numeric_limits<double>::quiet_NaN();
  const auto train_total = std::accumulate(oracle.train_label_counts.begin(), oracle.train_label_counts.end(), std::size_t{0});
  const auto test_total = std::accumulate(oracle.test_label_counts.begin(), oracle.test_label_counts.end(), std::size_t{0});
  if (train_total == 0 || test_total == 0) {
    oracle.mse = oracle.jsd = oracle.cueness = nan;
    return;
  }
  const auto p = proportions(oracle.train_label_counts);
  const auto q = proportions(oracle.test_label_counts);
  oracle.mse = direct_mse(p);
  oracle.jsd = direct_jsd(p, q);
  oracle.cueness = oracle.mse * std::exp(-oracle.jsd);
}

Generated generate_cls(const PlantSpec& spec) {
  const auto& labels = spec.labels;
  std::vector<std::string> sorted = labels;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (sorted.size() < 2 || sorted.size() != labels.size()) {
    throw ValidationError("degenerate plant spec: need at least 2 distinct labels");
  }
  const std::string target = spec.target_label.empty() ? labels.front() : spec.target_label;
  const auto target_it = std::find(sorted.begin(), sorted.end(), target);
  if (target_it == sorted.end()) throw ValidationError("target label '" + target + "' is not in the label set");
  const auto target_index = static_cast<std::size_t>(target_it - sorted.begin());
  const auto word = plant_word(spec.feature);

  Rng rng(spec.seed);
  PlantOracle oracle;
  oracle.feature = spec.feature;
  oracle.target_label = target;
  oracle.label_set = sorted;
  oracle.train_label_counts.assign(sorted.size(), 0);
  oracle.test_label_counts.assign(sorted.size(), 0);
  for (const auto& e : spec.extra) {
    if (e.word == word) throw ValidationError("extra plant duplicates the planted word");
    if (std::find(sorted.begin(), sorted.end(), e.label) == sorted.end()) {
      throw ValidationError("extra plant label '" + e.label + "' is not in the label set");
    }
    oracle.extra.push_back({e.word, std::vector<std::size_t>(sorted.size(), 0), std::vector<std::size_t>(sorted.size(), 0)});
  }

  auto make_split = [&](std::size_t n, const char* prefix, std::vector<std::size_t>& counts,
                        std::vector<std::uint32_t>& carriers, bool is_train) {
    std::vector<Instance> rows(n);
    std::vector<std::size_t> label_of(n);
    std::vector<bool> carries(n);
    std::vector<std::uint32_t> free_rows;
    for (std::size_t i = 0; i < n; ++i) {
      carries[i] = rng.bernoulli(spec.p_feat);
      std::size_t li;
      if (carries[i]) {
        if (rng.bernoulli(spec.q)) {
          li = target_index;
        } else {
          li = rng.below(sorted.size() - 1);
          if (li >= target_index) ++li;
        }
      } else {
        li = rng.below(sorted.size());
        free_rows.push_back(static_cast<std::uint32_t>(i));
      }
      label_of[i] = li;
    }
    std::vector<std::string> extra_word(n);
    for (std::size_t e = 0; e < spec.extra.size(); ++e) {
      const auto hits = is_train ? spec.extra[e].train_hits : spec.extra[e].test_hits;
      auto chosen = sample_without_replacement(rng, free_rows, hits);
      const auto li = static_cast<std::size_t>(std::find(sorted.begin(), sorted.end(), spec.extra[e].label) - sorted.begin());
      for (auto r : chosen) {
        extra_word[r] = spec.extra[e].word;
        label_of[r] = li;
        ++(is_train ? oracle.extra[e].train_label_counts : oracle.extra[e].test_label_counts)[li];
      }
      std::erase_if(free_rows, [&](std::uint32_t r) { return std::binary_search(chosen.begin(), chosen.end(), r); });
    }
    for (std::size_t i = 0; i < n; ++i) {
      auto& inst = rows[i];
      inst.id = std::string(prefix) + std::to_string(i);
      inst.premise = join_sentence(filler_sentence(rng));
      if (carries[i]) {
        inst.hypothesis = sentence_with(rng, word);
        carriers.push_back(static_cast<std::uint32_t>(i));
        ++counts[label_of[i]];
      } else if (!extra_word[i].empty()) {
        inst.hypothesis = sentence_with(rng, extra_word[i]);
      } else {
        inst.hypothesis = join_sentence(filler_sentence(rng));
      }
      inst.label = sorted[label_of[i]];
    }
    return rows;
  };

  auto train = make_split(spec.n_train, "r", oracle.train_label_counts, oracle.train_carriers, true);
  auto test = make_split(spec.n_test, "s", oracle.test_label_counts, oracle.test_carriers, false);
  finish_oracle(oracle);
  return Generated{Dataset(spec.name, TaskKind::kCls, std::move(train), std::move(test)), std::move(oracle)};
}

Generated generate_mcq(const PlantSpec& spec) {
  if (spec.choices < 2) throw ValidationError("degenerate plant spec: MCQ needs at least 2 choices");
  if (!spec.extra.empty()) throw ValidationError("extra plants are only supported for CLS fixtures");
  const std::string target = spec.target_label.empty() ? std::string(kTrueLabel) : spec.target_label;
  if (target != kTrueLabel && target != kFalseLabel) throw ValidationError("MCQ target label must be true or false");
  const auto word = plant_word(spec.feature);

  Rng rng(spec.seed);
  PlantOracle oracle;
  oracle.feature = spec.feature;
  oracle.target_label = target;
  oracle.label_set = {std::string(kFalseLabel), std::string(kTrueLabel)};
  oracle.train_label_counts.assign(2, 0);
  oracle.test_label_counts.assign(2, 0);

  auto make_split = [&](std::size_t n, const char* prefix, std::vector<std::size_t>& counts,
                        std::vector<std::uint32_t>& carriers) {
    std::vector<Instance> rows;
    for (std::size_t qi = 0; qi < n; ++qi) {
      McqRecord rec;
      rec.id = std::string(prefix) + std::to_string(qi);
      rec.context = join_sentence(filler_sentence(rng)) + " " + join_sentence(filler_sentence(rng));
      rec.answer = static_cast<std::int64_t>(rng.below(spec.choices));
      std::optional<std::size_t> carrier;
      if (rng.bernoulli(spec.p_feat)) {
        const bool on_target = rng.bernoulli(spec.q);
        const bool on_true = (target == kTrueLabel) == on_target;
        if (on_true) {
          carrier = static_cast<std::size_t>(rec.answer);
        } else {
          auto c = rng.below(spec.choices - 1);
          if (c >= static_cast<std::size_t>(rec.answer)) ++c;
          carrier = c;
        }
      }
      for (std::size_t c = 0; c < spec.choices; ++c) {
        rec.choices.push_back(carrier == c ? sentence_with(rng, word) : join_sentence(filler_sentence(rng)));
      }
      for (auto& inst : split_mcq(rec)) {
        if (carrier == *inst.choice_index) {
          carriers.push_back(static_cast<std::uint32_t>(rows.size()));
          ++counts[inst.label == kTrueLabel ? 1 : 0];
        }
        rows.push_back(std::move(inst));
      }
    }
    return rows;
  };

  auto train = make_split(spec.n_train, "rq", oracle.train_label_counts, oracle.train_carriers);
  auto test = make_split(spec.n_test, "sq", oracle.test_label_counts, oracle.test_carriers);
  finish_oracle(oracle);
  return Generated{Dataset(spec.name, TaskKind::kMcq, std::move(train), std::move(test)), std::move(oracle)};
}

}  // namespace

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = [] {
    std::vector<std::string> all{"the"};
    for (const auto* list : {&kNouns, &kAdjectives, &kVerbs, &kPreps}) all.insert(all.end(), list->begin(), list->end());
    return all;
  }();
  return words;
}

PlantSpec parse_plant_spec(const json& doc) {
  PlantSpec spec;
  try {
    spec.name = doc.value("name", spec.name);
    if (doc.contains("task_kind")) spec.task_kind = parse_task_kind(doc["task_kind"].get<std::string>());
    spec.n_train = doc.value("n_train", spec.n_train);
    spec.n_test = doc.value("n_test", spec.n_test);
    spec.labels = doc.value("labels", spec.labels);
    spec.choices = doc.value("choices", spec.choices);
    if (doc.contains("feature")) spec.feature = parse_feature(doc["feature"].get<std::string>());
    spec.p_feat = doc.value("p_feat", spec.p_feat);
    spec.q = doc.value("q", spec.q);
    spec.target_label = doc.value("target_label", spec.target_label);
    spec.seed = doc.value("seed", spec.seed);
    if (doc.contains("extra")) {
      for (const auto& e : doc["extra"]) {
        spec.extra.push_back(ExtraPlant{e.at("word").get<std::string>(), e.at("train_hits").get<std::size_t>(),
                                        e.at("test_hits").get<std::size_t>(), e.at("label").get<std::string>()});
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("plant spec: ") + e.what());
  }
  if (spec.p_feat < 0.0 || spec.p_feat > 1.0 || spec.q < 0.0 || spec.q > 1.0) {
    throw ValidationError("plant spec: p_feat and q must lie in [0, 1]");
  }
  return spec;
}

json PlantOracle::to_json() const {
  json extras = json::array();
  for (const auto& e : extra) {
    extras.push_back({{"word", e.word}, {"train_label_counts", e.train_label_counts}, {"test_label_counts", e.test_label_counts}});
  }
  return json{{"feature", icq::to_string(feature)},
              {"target_label", target_label},
              {"label_set", label_set},
              {"train_label_counts", train_label_counts},
              {"test_label_counts", test_label_counts},
              {"train_support", train_carriers.size()},
              {"test_support", test_carriers.size()},
              {"mse", mse},
              {"jsd", jsd},
              {"cueness", cueness},
              {"extra", extras}};
}

Generated generate(const PlantSpec& spec) {
  if (spec.p_feat < 0.0 || spec.p_feat > 1.0 || spec.q < 0.0 || spec.q > 1.0) {
    throw ValidationError("plant spec: p_feat and q must lie in [0, 1]");
  }
  return spec.task_kind == TaskKind::kMcq ? generate_mcq(spec) : generate_cls(spec);
}

std::vector<McqRecord> random_mcq_records(std::size_t n, std::size_t k_min, std::size_t k_max, std::uint64_t seed) {
  if (k_min < 2 || k_max < k_min) throw ValidationError("random_mcq_records: need 2 <= k_min <= k_max");
  Rng rng(seed);
  std::vector<McqRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    McqRecord rec;
    rec.id = "q" + std::to_string(i);
    rec.context = join_sentence(filler_sentence(rng));
    const auto k = k_min + rng.below(k_max - k_min + 1);
    for (std::size_t c = 0; c < k; ++c) rec.choices.push_back(join_sentence(filler_sentence(rng)));
    rec.answer = static_cast<std::int64_t>(rng.below(k));
    out.push_back(std::move(rec));
  }
  return out;
}

std::string_view to_string(PredictorKind kind) {
  switch (kind) {
    case PredictorKind::kAlwaysLabel:
      return "always-label";
    case PredictorKind::kGold:
      return "gold";
    case PredictorKind::kUniformRandom:
      return "uniform-random";
    case PredictorKind::kCueFollower:
      break;
  }
  return "cue-follower";
}

PredictorKind parse_predictor_kind(std::string_view text) {
  for (auto k : {PredictorKind::kAlwaysLabel, PredictorKind::kGold, PredictorKind::kUniformRandom,
                 PredictorKind::kCueFollower}) {
    if (to_string(k) == text) return k;
  }
  throw ValidationError("unknown predictor kind '" + std::string(text) + "'");
}

PredictionSet synth_predictor(PredictorKind kind, const Dataset& dataset, const PlantOracle& oracle,
                              std::uint64_t seed) {
  const auto n = dataset.test().size();
  const auto target = dataset.label_index(oracle.target_label);
  if (!target) throw ValidationError("oracle target label is not in the dataset label set");
  PredictionSet out;
  out.model_name = std::string(to_string(kind));
  out.labels.resize(n);
  Rng rng(seed);
  for (std::size_t row = 0; row < n; ++row) {
    switch (kind) {
      case PredictorKind::kAlwaysLabel:
        out.labels[row] = static_cast<std::uint32_t>(*target);
        break;
      case PredictorKind::kUniformRandom:
        out.labels[row] = static_cast<std::uint32_t>(rng.below(dataset.label_set().size()));
        break;
      case PredictorKind::kGold:
      case PredictorKind::kCueFollower:
        out.labels[row] = dataset.gold(Split::kTest, row);
        break;
    }
  }
  if (kind == PredictorKind::kCueFollower) {
    for (auto row : oracle.test_carriers) out.labels[row] = static_cast<std::uint32_t>(*target);
  }
  return out;
}

void write_fixture(const Generated& generated, const std::filesystem::path& dir,
                   const std::vector<PredictorKind>& predictors, std::uint64_t predictor_seed) {
  write_dataset(generated.dataset, dir);
  write_file_atomic(dir / "oracle.json", generated.oracle.to_json().dump(2) + "\n");
  for (auto kind : predictors) {
    const auto preds = synth_predictor(kind, generated.dataset, generated.oracle, predictor_seed);
    write_file_atomic(dir / "predictions" / (std::string(to_string(kind)) + ".jsonl"),
                      serialize_predictions(preds, generated.dataset));
  }
}

}  // namespace icq::fixtures
