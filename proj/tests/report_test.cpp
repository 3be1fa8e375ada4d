#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "icq/error.hpp"
#include "icq/report.hpp"
#include "icq/util.hpp"
#include "test_support.hpp"

namespace icq {
namespace {

using nlohmann::json;
using testing::TempDir;

std::string data_file(const std::string& name) { return read_file(std::filesystem::path(ICQ_TEST_DATA_DIR) / name); }

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::vector<std::string> cells(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

RunManifest manifest() {
  RunManifest m;
  m.dataset_name = "planted";
  m.dataset_hash = std::string(64, 'a');
  m.task_kind = "CLS";
  m.label_set = {"A", "B", "C"};
  m.train_size = 1000;
  m.test_size = 200;
  m.resources_hash = std::string(64, 'b');
  m.generated_at = "2026-01-01T00:00:00Z";
  return m;
}

CueScore cue(std::string value, double cueness) {
  CueScore s;
  s.feature = FeatureSpec{FeatureKind::kWord, std::move(value)};
  s.cueness = cueness;
  s.mse_train = cueness;
  s.train_support = 40;
  s.test_support = 10;
  s.train_dist = LabelDistribution{{"A", "B", "C"}, {0.9, 0.05, 0.05}, 40};
  s.test_dist = LabelDistribution{{"A", "B", "C"}, {0.7, 0.2, 0.1}, 10};
  return s;
}

TEST(PercentDisplay, TwoDecimals) {
  EXPECT_EQ(percent_display(0.1395), "13.95");
  EXPECT_EQ(percent_display(0.0), "0.00");
  EXPECT_EQ(percent_display(-0.054), "-5.40");
  EXPECT_EQ(percent_display(-1e-9), "0.00");
  EXPECT_EQ(percent_display(1.0), "100.00");
}

TEST(Sig6, SixSignificantDigits) {
  EXPECT_EQ(sig6(13.95), "13.95");
  EXPECT_EQ(sig6(1.0 / 3), "0.333333");
  EXPECT_EQ(sig6(1.96e-10), "1.96e-10");
}

TEST(Slug, FilenameSafe) {
  EXPECT_EQ(slug("WORD:zork"), "WORD-zork");
  EXPECT_EQ(slug("my model/v2"), "my_model_v2");
  EXPECT_EQ(slug(""), "_");
}

TEST(CueTable, OneCueOneModel) {
  const auto doc = emit_cue_table({cue("zork", 0.1477)}, {{"bert", {0.0534}}}, manifest());
  const auto rows = lines_of(doc.csv);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], "feature_kind,feature_value,cueness,bert");
  EXPECT_EQ(rows[1], "WORD,zork,14.77,5.34");
  EXPECT_EQ(rows[2], "sum_abs_delta,,,5.34");
  ASSERT_EQ(doc.json["cues"].size(), 1u);
  const auto& c = doc.json["cues"][0];
  EXPECT_EQ(c["rank"], 1);
  EXPECT_EQ(c["feature"], "WORD:zork");
  EXPECT_EQ(c["cueness_pct_display"], "14.77");
  EXPECT_EQ(c["delta_pct_display"]["bert"], "5.34");
  EXPECT_EQ(doc.json["models"], json::array({"bert"}));
}

TEST(CueTable, EmptyList) {
  const auto doc = emit_cue_table({}, {}, manifest());
  EXPECT_TRUE(doc.json["cues"].empty());
  EXPECT_EQ(doc.json["dataset_cueness"], 0.0);
  EXPECT_EQ(lines_of(doc.csv).size(), 2u);
}

TEST(CueTable, MisalignedDeltasRejected) {
  EXPECT_THROW(emit_cue_table({cue("a", 0.1)}, {{"m", {}}}, manifest()), ValidationError);
}

TEST(CueTable, CsvAgreesWithJson) {
  const std::vector<CueScore> ranked{cue("sleeping", 0.1395), cue("tall", 0.1333), cue("nobody", 0.0924)};
  const auto doc = emit_cue_table(ranked, {{"FT", {0.303, std::nullopt, -0.0112}}, {"BT", {0.0534, 0.0, 0.02}}},
                                  manifest());
  const auto rows = lines_of(doc.csv);
  ASSERT_EQ(rows.size(), ranked.size() + 2);
  const auto header = cells(rows[0]);
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto row = cells(rows[i + 1]);
    const auto& j = doc.json["cues"][i];
    EXPECT_EQ(row[1], j["value"].get<std::string>());
    EXPECT_EQ(row[2], sig6(j["cueness_pct"].get<double>()));
    for (std::size_t col = 3; col < header.size(); ++col) {
      const auto& model = header[col];
      if (j["delta_pct"].contains(model)) {
        EXPECT_EQ(row[col], sig6(j["delta_pct"][model].get<double>()));
      } else {
        EXPECT_EQ(row[col], "");
      }
    }
  }
  EXPECT_NEAR(doc.json["model_weakness_pct"]["FT"].get<double>(), 31.42, 1e-9);
}

TEST(CueTable, PaperWeaknessSums) {
  const auto table = json::parse(data_file("table3.json"));
  std::map<std::string, std::vector<std::optional<double>>> deltas;
  std::vector<CueScore> ranked;
  for (const auto& ds : table["datasets"]) {
    for (const auto& c : ds["cues"]) {
      ranked.push_back(cue(c["cue"].get<std::string>(), c["cueness"].get<double>() / 100));
      for (const auto& [model, d] : c["delta"].items()) deltas[model].push_back(d.get<double>() / 100);
    }
  }
  const auto doc = emit_cue_table(ranked, deltas, manifest());
  for (const auto& [model, expected] : table["model_weakness"].items()) {
    EXPECT_NEAR(doc.json["model_weakness_pct"][model].get<double>(), expected.get<double>(), 0.05) << model;
  }
}

TEST(Chart, TriplesPerLabelAndSeries) {
  const LabelDistribution train{{"A", "B", "C"}, {0.9, 0.05, 0.05}, 40};
  const LabelDistribution stress{{"A", "B", "C"}, {1, 0, 0}, 30};
  const auto chart = emit_distribution_chart(train, stress);
  ASSERT_EQ(chart["points"].size(), 6u);
  EXPECT_EQ(chart["points"][0], (json{{"series", "filtered_train"}, {"label", "A"}, {"value", 0.9}}));
  EXPECT_EQ(chart["points"][3]["series"], "stress_predictions");
  EXPECT_EQ(chart["series"][1]["support"], 30);
  EXPECT_FALSE(chart["series"][0]["degenerate"].get<bool>());
}

TEST(Chart, DegenerateSeriesHasNoPoints) {
  const LabelDistribution train{{"A", "B"}, {0.5, 0.5}, 2};
  const LabelDistribution empty{{"A", "B"}, {0, 0}, 0};
  const auto chart = emit_distribution_chart(train, empty);
  EXPECT_TRUE(chart["series"][1]["degenerate"].get<bool>());
  EXPECT_EQ(chart["points"].size(), 2u);
  EXPECT_THROW(emit_distribution_chart(train, LabelDistribution{{"x", "y"}, {1, 0}, 1}), ValidationError);
}

TEST(HypoReport, FromAccuracyTable) {
  const auto rows = parse_accuracy_table(data_file("table2.json"));
  EXPECT_EQ(rows.size(), 40u);
  const auto doc = emit_hypo_report(rows);
  auto find = [&](const std::string& ds, const std::string& model) {
    for (const auto& r : doc.json["rows"]) {
      if (r["dataset"] == ds && r["model"] == model) return r;
    }
    return json();
  };
  EXPECT_EQ(find("SNLI", "BT")["display"]["full_minus_hypo"], "44.86");
  EXPECT_EQ(find("SNLI", "FT")["display"]["hypo_minus_majority"], "26.53");
  EXPECT_EQ(find("SNLI", "FT")["display"]["full_minus_hypo"], "-5.40");
  for (const auto& model : {"FT", "ES", "BT", "RB"}) {
    const auto row = find("ARCT_adv", model);
    EXPECT_LE(std::abs(100 * row["hypo_minus_majority"].get<double>()), 0.5) << model;
    EXPECT_LE(std::abs(100 * row["full_minus_hypo"].get<double>()), 0.5) << model;
  }
  const auto csv = lines_of(doc.csv);
  EXPECT_EQ(csv.size(), 41u);
  EXPECT_EQ(csv[0], "dataset,model,majority,acc_full,acc_hypo,hypo_minus_majority,full_minus_hypo");
}

TEST(HypoReport, MalformedTable) {
  EXPECT_THROW(parse_accuracy_table("{"), ValidationError);
  EXPECT_THROW(parse_accuracy_table(R"({"datasets":[{"name":"x"}]})"), ValidationError);
}

TEST(Manifest, RunIdIgnoresTimestamp) {
  auto a = manifest();
  auto b = manifest();
  b.generated_at = "2030-05-05T12:00:00Z";
  EXPECT_EQ(run_id(a), run_id(b));
  EXPECT_EQ(run_id(a).size(), 16u);
  b.min_support = 6;
  EXPECT_NE(run_id(a), run_id(b));
  const auto j = a.to_json();
  EXPECT_EQ(j["dataset"]["hash"], a.dataset_hash);
  EXPECT_EQ(j["config"]["jsd_log_base"], 2);
}

TEST(Manifest, WithoutTimestampsIsRecursive) {
  const json doc = {{"generated_at", "x"}, {"a", {{"generated_at", "y"}, {"b", 1}}}, {"c", json::array({{{"generated_at", 1}}})}};
  EXPECT_EQ(without_timestamps(doc), (json{{"a", {{"b", 1}}}, {"c", json::array({json::object()})}}));
}

TEST(WriteReports, CueAndProbeFiles) {
  TempDir tmp;
  const auto m = manifest();
  write_cue_report(tmp.path(), emit_cue_table({cue("zork", 0.1)}, {}, m), m);
  EXPECT_TRUE(std::filesystem::exists(tmp / "cues.json"));
  EXPECT_TRUE(std::filesystem::exists(tmp / "cues.csv"));
  EXPECT_EQ(json::parse(read_file(tmp / "manifest.json")), m.to_json());

  const LabelDistribution d{{"A", "B", "C"}, {0.9, 0.05, 0.05}, 40};
  auto entry = [&](const std::string& feature, double delta) {
    ReportDocument doc;
    doc.json = {{"model", "always A"}, {"feature", feature}, {"delta", delta}, {"chart", emit_distribution_chart(d, d)}};
    return doc;
  };
  write_probe_report(tmp.path(), entry("WORD:zork", 0.1), m);
  write_probe_report(tmp.path(), entry("NEGATION:present", 0.2), m);
  write_probe_report(tmp.path(), entry("WORD:zork", 0.3), m);
  const auto file = json::parse(read_file(tmp / "probe-always_A.json"));
  ASSERT_EQ(file["probes"].size(), 2u);
  EXPECT_EQ(file["probes"][0]["feature"], "NEGATION:present");
  EXPECT_EQ(file["probes"][1]["delta"], 0.3);
  const auto chart = json::parse(read_file(tmp.path() / "charts" / "WORD-zork-always_A.json"));
  EXPECT_EQ(chart["feature"], "WORD:zork");
}

}  // namespace
}  // namespace icq
