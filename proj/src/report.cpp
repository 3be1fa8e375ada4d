#include "icq/report.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>

#include "icq/error.hpp"
#include "icq/util.hpp"

#ifndef ICQ_VERSION
#define ICQ_VERSION "0.0.0"
#endif

namespace icq {

using json = nlohmann::json;

const char* const kToolVersion = ICQ_VERSION;

json RunManifest::to_json() const {
  json doc;
  doc["tool"] = "icq";
  doc["tool_version"] = kToolVersion;
  doc["dataset"] = {{"name", dataset_name},     {"hash", dataset_hash},     {"task_kind", task_kind},
                    {"label_set", label_set},   {"train_size", train_size}, {"test_size", test_size}};
  doc["resources_hash"] = resources_hash;
  doc["config"] = {{"min_support", min_support},
                   {"vocab_min_freq", vocab_min_freq},
                   {"top_k", top_k},
                   {"seed", seed},
                   {"support_mode", to_string(support_mode)},
                   {"kinds", kinds},
                   {"delta_threshold", delta_threshold},
                   {"jsd_log_base", 2},
                   {"cueness_exp_base", "e"},
                   {"mse_over", "proportions"}};
  doc["generated_at"] = generated_at;
  return doc;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json without_timestamps(json doc) {
  if (doc.is_object()) {
    doc.erase("generated_at");
    for (auto& [key, value] : doc.items()) value = without_timestamps(std::move(value));
  } else if (doc.is_array()) {
    for (auto& value : doc) value = without_timestamps(std::move(value));
  }
  return doc;
}

std::string run_id(const RunManifest& manifest) {
  return sha256_hex(without_timestamps(manifest.to_json()).dump()).substr(0, 16);
}

std::string dump_report(const json& doc) { return doc.dump(2) + "\n"; }

std::string percent_display(double fraction) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
  std::string out = buf;
  if (out == "-0.00") out = "0.00";
  return out;
}

std::string sig6(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

namespace {

std::string csv_cell(std::string_view text) {
  if (text.find_first_of(",\"\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

json to_json(const LabelDistribution& dist) {
  return json{{"labels", dist.labels}, {"proportions", dist.proportions}, {"support", dist.support}};
}

json to_json(const CueScore& score) {
  return json{{"feature", to_string(score.feature)},
              {"kind", to_string(score.feature.kind)},
              {"value", score.feature.value},
              {"cueness", score.cueness},
              {"cueness_pct", 100.0 * score.cueness},
              {"cueness_pct_display", percent_display(score.cueness)},
              {"mse_train", score.mse_train},
              {"jsd", score.jsd},
              {"train_support", score.train_support},
              {"test_support", score.test_support},
              {"train_dist", to_json(score.train_dist)},
              {"test_dist", to_json(score.test_dist)}};
}

ReportDocument emit_cue_table(const std::vector<CueScore>& ranked,
                              const std::map<std::string, std::vector<std::optional<double>>>& deltas,
                              const RunManifest& manifest) {
  std::vector<std::string> models;
  for (const auto& [name, values] : deltas) {
    if (values.size() != ranked.size()) throw ValidationError("delta list for model " + name + " does not match the cue list");
    models.push_back(name);
  }

  ReportDocument out;
  auto& doc = out.json;
  doc["manifest"] = manifest.to_json();
  doc["models"] = models;
  doc["cues"] = json::array();
  doc["dataset_cueness"] = dataset_cueness(ranked);
  doc["dataset_cueness_pct"] = 100.0 * dataset_cueness(ranked);

  out.csv = "feature_kind,feature_value,cueness";
  for (const auto& m : models) out.csv += "," + csv_cell(m);
  out.csv += "\n";

  for (std::size_t i = 0; i < ranked.size(); ++i) {
    auto row = to_json(ranked[i]);
    row["rank"] = i + 1;
    row["delta"] = json::object();
    row["delta_pct"] = json::object();
    row["delta_pct_display"] = json::object();
    out.csv += std::string(to_string(ranked[i].feature.kind)) + "," + csv_cell(ranked[i].feature.value) + "," +
               sig6(100.0 * ranked[i].cueness);
    for (const auto& m : models) {
      const auto& d = deltas.at(m)[i];
      out.csv += ",";
      if (!d) continue;
      row["delta"][m] = *d;
      row["delta_pct"][m] = 100.0 * *d;
      row["delta_pct_display"][m] = percent_display(*d);
      out.csv += sig6(100.0 * *d);
    }
    out.csv += "\n";
    doc["cues"].push_back(std::move(row));
  }

  doc["model_weakness"] = json::object();
  doc["model_weakness_pct"] = json::object();
  out.csv += "sum_abs_delta,,";
  for (const auto& m : models) {
    std::vector<double> present;
    for (const auto& d : deltas.at(m)) {
      if (d) present.push_back(*d);
    }
    const double w = model_weakness(present);
    doc["model_weakness"][m] = w;
    doc["model_weakness_pct"][m] = 100.0 * w;
    out.csv += "," + sig6(100.0 * w);
  }
  out.csv += "\n";
  return out;
}

json emit_distribution_chart(const LabelDistribution& train_dist, const LabelDistribution& stress_pred_dist) {
  if (train_dist.labels != stress_pred_dist.labels) throw ValidationError("chart series use different label orders");
  json doc;
  doc["labels"] = train_dist.labels;
  doc["series"] = json::array();
  doc["points"] = json::array();
  const std::pair<const char*, const LabelDistribution*> series[] = {{"filtered_train", &train_dist},
                                                                      {"stress_predictions", &stress_pred_dist}};
  for (const auto& [name, dist] : series) {
    const bool degenerate = dist->support == 0;
    doc["series"].push_back({{"name", name}, {"support", dist->support}, {"degenerate", degenerate}});
    if (degenerate) continue;
    for (std::size_t i = 0; i < dist->labels.size(); ++i) {
      doc["points"].push_back({{"series", name}, {"label", dist->labels[i]}, {"value", dist->proportions[i]}});
    }
  }
  return doc;
}

json to_json(const ProbeReport& report, const Dataset& dataset) {
  json stress_counts = json::object();
  for (std::size_t i = 0; i < dataset.label_set().size(); ++i) {
    stress_counts[dataset.label_set()[i]] = report.stress.label_counts[i];
  }
  const auto& d = report.distribution;
  return json{{"model", report.model_name},
              {"feature", to_string(report.feature)},
              {"kind", to_string(report.feature.kind)},
              {"value", report.feature.value},
              {"acc_f", report.accuracy.acc_f},
              {"acc_nf", report.accuracy.acc_nf},
              {"delta", report.accuracy.delta},
              {"delta_pct", 100.0 * report.accuracy.delta},
              {"delta_pct_display", percent_display(report.accuracy.delta)},
              {"delta_threshold", report.delta_threshold},
              {"verdict", to_string(report.verdict)},
              {"stress", {{"seed", report.stress.seed}, {"size", report.stress.rows.size()}, {"label_counts", stress_counts}}},
              {"train_dist", to_json(d.train_dist)},
              {"stress_pred_dist", to_json(d.stress_pred_dist)},
              {"dist_jsd", d.dist_jsd},
              {"chart", emit_distribution_chart(d.train_dist, d.stress_pred_dist)}};
}

ReportDocument emit_probe_report(const ProbeReport& report, const Dataset& dataset, const RunManifest& manifest) {
  ReportDocument out;
  out.json = to_json(report, dataset);
  out.json["manifest"] = manifest.to_json();
  return out;
}

std::vector<HypoRow> parse_accuracy_table(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("accuracy table: malformed JSON: ") + e.what());
  }
  std::vector<HypoRow> rows;
  try {
    for (const auto& ds : doc.at("datasets")) {
      const auto name = ds.at("name").get<std::string>();
      const double majority = ds.at("majority").get<double>() / 100.0;
      for (const auto& [model, acc] : ds.at("models").items()) {
        rows.push_back(HypoRow{name, model,
                               compare_accuracies(acc.at("full").get<double>() / 100.0,
                                                  acc.at("hypo").get<double>() / 100.0, majority)});
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("accuracy table: ") + e.what());
  }
  return rows;
}

ReportDocument emit_hypo_report(const std::vector<HypoRow>& rows) {
  ReportDocument out;
  out.json["rows"] = json::array();
  out.csv = "dataset,model,majority,acc_full,acc_hypo,hypo_minus_majority,full_minus_hypo\n";
  for (const auto& r : rows) {
    const auto& v = r.values;
    out.json["rows"].push_back({{"dataset", r.dataset},
                                {"model", r.model},
                                {"majority", v.majority},
                                {"acc_full", v.acc_full},
                                {"acc_hypo", v.acc_hypo},
                                {"hypo_minus_majority", v.hypo_minus_majority},
                                {"full_minus_hypo", v.full_minus_hypo},
                                {"display",
                                 {{"majority", percent_display(v.majority)},
                                  {"acc_full", percent_display(v.acc_full)},
                                  {"acc_hypo", percent_display(v.acc_hypo)},
                                  {"hypo_minus_majority", percent_display(v.hypo_minus_majority)},
                                  {"full_minus_hypo", percent_display(v.full_minus_hypo)}}}});
    out.csv += csv_cell(r.dataset) + "," + csv_cell(r.model) + "," + percent_display(v.majority) + "," +
               percent_display(v.acc_full) + "," + percent_display(v.acc_hypo) + "," +
               percent_display(v.hypo_minus_majority) + "," + percent_display(v.full_minus_hypo) + "\n";
  }
  return out;
}

std::string slug(std::string_view text) {
  std::string out;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || c == '_' || c == '-' || c == '.') {
      out += c;
    } else if (c == ':') {
      out += '-';
    } else {
      out += '_';
    }
  }
  return out.empty() ? "_" : out;
}

void write_cue_report(const std::filesystem::path& run_dir, const ReportDocument& doc, const RunManifest& manifest) {
  write_file_atomic(run_dir / "manifest.json", dump_report(manifest.to_json()));
  write_file_atomic(run_dir / "cues.json", dump_report(doc.json));
  write_file_atomic(run_dir / "cues.csv", doc.csv);
}

void write_probe_report(const std::filesystem::path& run_dir, const ReportDocument& doc, const RunManifest& manifest) {
  const auto model = doc.json.at("model").get<std::string>();
  const auto feature = doc.json.at("feature").get<std::string>();
  const auto path = run_dir / ("probe-" + slug(model) + ".json");

  json file;
  if (std::filesystem::exists(path)) file = json::parse(read_file(path));
  if (!file.is_object() || !file.contains("probes")) file = json{{"probes", json::array()}};
  file["manifest"] = manifest.to_json();
  file["model"] = model;

  auto entry = doc.json;
  entry.erase("manifest");
  auto& probes = file["probes"];
  auto it = std::find_if(probes.begin(), probes.end(), [&](const json& p) { return p.at("feature") == feature; });
  if (it != probes.end()) {
    *it = entry;
  } else {
    probes.push_back(entry);
  }
  std::sort(probes.begin(), probes.end(),
            [](const json& a, const json& b) { return a.at("feature").get<std::string>() < b.at("feature").get<std::string>(); });

  write_file_atomic(run_dir / "manifest.json", dump_report(manifest.to_json()));
  write_file_atomic(path, dump_report(file));
  auto chart = doc.json.at("chart");
  chart["feature"] = feature;
  chart["model"] = model;
  write_file_atomic(run_dir / "charts" / (slug(feature) + "-" + slug(model) + ".json"), dump_report(chart));
}

}  // namespace icq
