#include "icq/cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "icq/error.hpp"
#include "icq/fixtures.hpp"
#include "icq/pipeline.hpp"
#include "icq/report.hpp"
#include "icq/service.hpp"
#include "icq/util.hpp"

namespace icq {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

/// Flags shared by every subcommand that annotates a dataset.
struct AnalysisOptions {
  std::string dataset_dir;
  std::string resources;
  std::size_t min_support = 5;
  std::size_t vocab_min_freq = 5;
  std::string support_mode = "both";
  std::uint64_t seed = kDefaultSeed;
  std::size_t jobs = 0;
  std::string sidecar;
  std::string sidecar_mode = "merge";
  std::string out = "icq-out";
};

void add_analysis_options(CLI::App& cmd, AnalysisOptions& o) {
  cmd.add_option("dataset", o.dataset_dir, "Dataset directory (train.jsonl, test.jsonl, meta.json)")->required();
  cmd.add_option("--min-support", o.min_support, "Minimum filtered instances per split for a cue")->capture_default_str();
  cmd.add_option("--vocab-min-freq", o.vocab_min_freq, "Minimum instance frequency for WORD features")
      ->capture_default_str();
  cmd.add_option("--support-mode", o.support_mode, "both: min-support in train and test; any: in either")
      ->check(CLI::IsMember({"both", "any"}))
      ->capture_default_str();
  cmd.add_option("--seed", o.seed, "Stress-set sampling seed")->capture_default_str();
  cmd.add_option("--jobs", o.jobs, "Annotation threads (0 = all cores)")->capture_default_str();
  cmd.add_option("--sidecar", o.sidecar, "Extra annotations (JSONL)");
  cmd.add_option("--sidecar-mode", o.sidecar_mode, "How sidecar features combine with built-in ones")
      ->check(CLI::IsMember({"merge", "replace"}))
      ->capture_default_str();
  cmd.add_option("--resources", o.resources, "Resource directory (default: $ICQ_RESOURCES or the bundled one)");
  cmd.add_option("-o,--out", o.out, "Report directory")->capture_default_str();
}

ResourceBundle load_resources(const std::string& dir) {
  return ResourceBundle::load(dir.empty() ? ResourceBundle::default_dir() : fs::path(dir));
}

struct Loaded {
  AnalyzedDataset analyzed;
  std::string resources_hash;
  PipelineConfig config;
};

Loaded load_analyzed(const AnalysisOptions& o, std::set<FeatureKind> kinds = {}, std::size_t top_k = 5,
                     double delta_threshold = kDefaultDeltaThreshold) {
  const auto resources = load_resources(o.resources);
  PipelineConfig pc;
  pc.min_support = o.min_support;
  pc.vocab_min_freq = o.vocab_min_freq;
  pc.support_mode = parse_support_mode(o.support_mode);
  pc.seed = o.seed;
  pc.jobs = o.jobs;
  pc.kinds = std::move(kinds);
  pc.top_k = top_k;
  pc.delta_threshold = delta_threshold;

  const fs::path dir = o.dataset_dir;
  auto dataset = load_dataset(dir);
  const auto hash =
      dataset_content_hash(dataset.task_kind(), read_file(dir / "train.jsonl"), read_file(dir / "test.jsonl"));
  auto resources_hash = resources.content_hash;
  if (o.sidecar.empty()) {
    return Loaded{analyze(std::move(dataset), hash, resources, pc), resources_hash, pc};
  }
  const auto sidecar_text = read_file(o.sidecar);
  const auto sidecar = parse_sidecar(sidecar_text, o.sidecar);
  AnnotateConfig ac;
  ac.vocab_min_freq = pc.vocab_min_freq;
  ac.jobs = pc.jobs;
  auto annotations = annotate_all(dataset, resources, ac);
  apply_sidecar(annotations, dataset, sidecar,
                o.sidecar_mode == "replace" ? SidecarMode::kReplace : SidecarMode::kMerge);
  // Sidecar content changes the annotations, so it is folded into the resource hash.
  resources_hash = sha256_hex(resources_hash + "\n" + o.sidecar_mode + "\n" + sidecar_text);
  return Loaded{from_annotations(std::move(dataset), hash, std::move(annotations)), resources_hash, pc};
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

PredictionSet load_prediction_file(const std::string& path, const Dataset& dataset, const std::string& model) {
  auto preds = load_predictions(read_file(path), dataset, model, path);
  require_full_coverage(preds, dataset);
  return preds;
}

std::string pct(double fraction) { return percent_display(fraction); }

// -- cues ----------------------------------------------------------------

struct CuesOptions {
  AnalysisOptions a;
  std::vector<std::string> kinds;
  std::size_t top = 5;
  std::vector<std::string> models;
};

int cmd_cues(const CuesOptions& o) {
  std::set<FeatureKind> kinds;
  for (const auto& k : o.kinds) kinds.insert(parse_feature_kind(k));
  auto loaded = load_analyzed(o.a, kinds, o.top);
  const auto& analyzed = loaded.analyzed;

  std::map<std::string, PredictionSet> models;
  for (const auto& spec : o.models) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      throw ValidationError("--model expects NAME=FILE, got '" + spec + "'");
    }
    const auto name = spec.substr(0, eq);
    if (models.count(name)) throw ValidationError("duplicate model name '" + name + "'");
    models.emplace(name, load_prediction_file(spec.substr(eq + 1), analyzed.dataset, name));
  }

  const auto run = discover_cues(analyzed, loaded.config);
  const auto manifest = make_manifest(analyzed, loaded.resources_hash, loaded.config);
  const auto doc = cue_report(analyzed, run, models, manifest);
  write_cue_report(o.a.out, doc, manifest);

  std::printf("%s (%s): %zu qualified cues, top %zu\n", analyzed.dataset.name().c_str(),
              std::string(to_string(analyzed.dataset.task_kind())).c_str(), run.qualified.size(), run.ranked.size());
  std::size_t rank = 1;
  for (const auto& cue : run.ranked) {
    std::printf("%2zu  %-24s cueness %6s%%  train %zu  test %zu\n", rank++, to_string(cue.feature).c_str(),
                pct(cue.cueness).c_str(), cue.train_support, cue.test_support);
  }
  std::printf("wrote %s\n", (fs::path(o.a.out) / "cues.json").string().c_str());
  return 0;
}

// -- probe ---------------------------------------------------------------

struct ProbeOptions {
  AnalysisOptions a;
  std::string preds;
  std::string feature;
  std::string model_name;
  double delta_threshold = kDefaultDeltaThreshold;
  std::string stress_out;
};

int cmd_probe(const ProbeOptions& o) {
  auto loaded = load_analyzed(o.a, {}, 5, o.delta_threshold);
  const auto& analyzed = loaded.analyzed;
  const auto model = o.model_name.empty() ? stem_of(o.preds) : o.model_name;
  const auto preds = load_prediction_file(o.preds, analyzed.dataset, model);
  const auto feature = parse_feature(o.feature);
  const auto report = probe_feature(analyzed, preds, feature, loaded.config);
  const auto manifest = make_manifest(analyzed, loaded.resources_hash, loaded.config);
  const auto doc = emit_probe_report(report, analyzed.dataset, manifest);
  write_probe_report(o.a.out, doc, manifest);
  if (!o.stress_out.empty()) write_file_atomic(o.stress_out, serialize_stress_set(report.stress, analyzed.dataset));

  std::printf("%s on %s: acc(S_f) %s%%  acc(S_nf) %s%%  delta %s%%  verdict %s\n", model.c_str(),
              to_string(feature).c_str(), pct(report.accuracy.acc_f).c_str(), pct(report.accuracy.acc_nf).c_str(),
              pct(report.accuracy.delta).c_str(), std::string(to_string(report.verdict)).c_str());
  std::printf("wrote %s\n", (fs::path(o.a.out) / ("probe-" + slug(model) + ".json")).string().c_str());
  return 0;
}

// -- hypothesis-only ------------------------------------------------------

struct HypoExportOptions {
  std::string dataset_dir;
  std::string out;
  std::string scope = "test";
};

int cmd_hypo_export(const HypoExportOptions& o) {
  const auto dataset = load_dataset(o.dataset_dir);
  if (o.scope == "both") {
    write_dataset(strip_premises(dataset, StripScope::kTrainAndTest), o.out);
    std::printf("wrote hypothesis-only dataset to %s\n", o.out.c_str());
  } else {
    const auto stripped = strip_premises(dataset, StripScope::kTestOnly);
    write_file_atomic(o.out, serialize_split(stripped.test(), stripped.task_kind()));
    std::printf("wrote %zu test instances to %s\n", stripped.test().size(), o.out.c_str());
  }
  return 0;
}

struct HypoReportOptions {
  std::string dataset_dir;
  std::string full;
  std::string hypo;
  std::string table;
  std::string model_name = "model";
  std::string out = "icq-out";
};

int cmd_hypo_report(const HypoReportOptions& o) {
  std::vector<HypoRow> rows;
  if (!o.table.empty()) {
    if (!o.dataset_dir.empty() || !o.full.empty() || !o.hypo.empty()) {
      throw ValidationError("--table cannot be combined with a dataset or prediction files");
    }
    rows = parse_accuracy_table(read_file(o.table));
  } else {
    if (o.dataset_dir.empty() || o.full.empty() || o.hypo.empty()) {
      throw ValidationError("hypo-report needs <dataset> --full FILE --hypo FILE, or --table FILE");
    }
    const auto dataset = load_dataset(o.dataset_dir);
    const auto full = load_predictions(read_file(o.full), dataset, o.model_name, o.full);
    const auto hypo = load_predictions(read_file(o.hypo), dataset, o.model_name, o.hypo);
    rows.push_back(HypoRow{dataset.name(), o.model_name, hypo_compare(full, hypo, dataset)});
  }
  const auto doc = emit_hypo_report(rows);
  write_file_atomic(fs::path(o.out) / "hypo.json", dump_report(doc.json));
  write_file_atomic(fs::path(o.out) / "hypo.csv", doc.csv);
  std::printf("%-16s %-8s %8s %8s %8s %8s %8s\n", "dataset", "model", "majority", "full", "hypo", "hypo-maj",
              "full-hypo");
  for (const auto& r : rows) {
    const auto& v = r.values;
    std::printf("%-16s %-8s %8s %8s %8s %8s %8s\n", r.dataset.c_str(), r.model.c_str(), pct(v.majority).c_str(),
                pct(v.acc_full).c_str(), pct(v.acc_hypo).c_str(), pct(v.hypo_minus_majority).c_str(),
                pct(v.full_minus_hypo).c_str());
  }
  return 0;
}

// -- serve -----------------------------------------------------------------

struct ServeOptions {
  std::string store = "icq-store";
  std::string bind = "127.0.0.1:8080";
  std::string max_upload = "64M";
  std::uint64_t seed = kDefaultSeed;
  std::size_t workers = 2;
  std::size_t jobs = 0;
  std::string webui;
  std::string resources;
};

int cmd_serve(const ServeOptions& o, const CLI::App& cmd) {
  ServiceConfig config;
  config.store_dir = o.store;
  parse_bind_addr(o.bind, config.host, config.port);
  config.max_upload = parse_size(o.max_upload);
  config.seed = o.seed;
  config.apply_env();
  // Explicit flags win over the environment.
  if (cmd.count("--store")) config.store_dir = o.store;
  if (cmd.count("--bind")) parse_bind_addr(o.bind, config.host, config.port);
  if (cmd.count("--max-upload")) config.max_upload = parse_size(o.max_upload);
  if (cmd.count("--seed")) config.seed = o.seed;
  config.workers = o.workers;
  config.jobs = o.jobs;
  config.webui_dir = o.webui;

  // Signals go to a dedicated thread; every other thread inherits the mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGTERM);
  sigaddset(&signals, SIGINT);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Service service(config, load_resources(o.resources));
  const int port = service.bind();
  std::printf("listening on http://%s:%d (store %s)\n", config.host.c_str(), port, config.store_dir.c_str());
  std::fflush(stdout);

  std::atomic<bool> finished{false};
  std::thread watcher([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    // Repeat until run() returns, in case the signal lands before listening starts.
    while (!finished.load()) {
      service.stop();
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  });
  service.run();
  finished = true;
  pthread_kill(watcher.native_handle(), SIGTERM);
  watcher.join();
  std::printf("shut down\n");
  return 0;
}

// -- fixture -----------------------------------------------------------------

struct FixtureOptions {
  std::string spec;
  std::string out;
  std::vector<std::string> predictors{"always-label", "gold", "uniform-random", "cue-follower"};
  std::uint64_t predictor_seed = 0;
};

int cmd_fixture(const FixtureOptions& o) {
  json doc;
  try {
    doc = json::parse(read_file(o.spec));
  } catch (const json::parse_error& e) {
    throw ValidationError(o.spec + ": malformed JSON: " + e.what());
  }
  const auto spec = fixtures::parse_plant_spec(doc);
  std::vector<fixtures::PredictorKind> kinds;
  for (const auto& p : o.predictors) kinds.push_back(fixtures::parse_predictor_kind(p));
  const auto generated = fixtures::generate(spec);
  fixtures::write_fixture(generated, o.out, kinds, o.predictor_seed);
  std::printf("wrote %s: %zu train, %zu test, %s carried by %zu/%zu instances\n", o.out.c_str(),
              generated.dataset.train().size(), generated.dataset.test().size(),
              to_string(generated.oracle.feature).c_str(), generated.oracle.train_carriers.size(),
              generated.oracle.test_carriers.size());
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Find and probe label-skewing cues in NLP datasets", "icq"};
  app.set_version_flag("--version", std::string("icq ") + kToolVersion);
  app.require_subcommand(1);

  CuesOptions cues;
  auto* cues_cmd = app.add_subcommand("cues", "Rank the dataset's features by cueness");
  add_analysis_options(*cues_cmd, cues.a);
  cues_cmd->add_option("--kinds", cues.kinds, "Feature kinds to keep, e.g. WORD,NER (default: all)")->delimiter(',');
  cues_cmd->add_option("--top", cues.top, "Number of cues to report")->capture_default_str();
  cues_cmd->add_option("--model", cues.models, "Add a delta column: NAME=predictions.jsonl (repeatable)");

  ProbeOptions probe_opts;
  auto* probe_cmd = app.add_subcommand("probe", "Accuracy and distribution tests of one model on one cue");
  add_analysis_options(*probe_cmd, probe_opts.a);
  probe_cmd->add_option("--preds", probe_opts.preds, "Prediction file (JSONL)")->required();
  probe_cmd->add_option("--feature", probe_opts.feature, "Feature literal, e.g. WORD:no, NER:PER, NEGATION")
      ->required();
  probe_cmd->add_option("--model-name", probe_opts.model_name, "Model name (default: prediction file stem)");
  probe_cmd->add_option("--delta-threshold", probe_opts.delta_threshold, "Delta above which a cue can be exploited")
      ->capture_default_str();
  probe_cmd->add_option("--stress-out", probe_opts.stress_out, "Also write the stress set (JSONL)");

  HypoExportOptions hx;
  auto* hx_cmd = app.add_subcommand("hypo-export", "Write the dataset with premises removed");
  hx_cmd->add_option("dataset", hx.dataset_dir, "Dataset directory")->required();
  hx_cmd->add_option("-o,--out", hx.out, "Output JSONL file (a dataset directory with --scope both)")->required();
  hx_cmd->add_option("--scope", hx.scope, "test: test split only; both: train and test")
      ->check(CLI::IsMember({"test", "both"}))
      ->capture_default_str();

  HypoReportOptions hr;
  auto* hr_cmd = app.add_subcommand("hypo-report", "Compare full-input and hypothesis-only accuracy");
  hr_cmd->add_option("dataset", hr.dataset_dir, "Dataset directory");
  hr_cmd->add_option("--full", hr.full, "Predictions on the full test split");
  hr_cmd->add_option("--hypo", hr.hypo, "Predictions on the hypothesis-only test split");
  hr_cmd->add_option("--model-name", hr.model_name, "Model name in the report")->capture_default_str();
  hr_cmd->add_option("--table", hr.table, "Accuracy table in percent instead of prediction files (JSON)");
  hr_cmd->add_option("-o,--out", hr.out, "Report directory")->capture_default_str();

  ServeOptions sv;
  auto* sv_cmd = app.add_subcommand("serve", "Run the HTTP service");
  sv_cmd->add_option("--store", sv.store, "Run store directory [env ICQ_STORE_DIR]")->capture_default_str();
  sv_cmd->add_option("--bind", sv.bind, "Listen address host:port, port 0 picks one [env ICQ_BIND_ADDR]")
      ->capture_default_str();
  sv_cmd->add_option("--max-upload", sv.max_upload, "Per-file upload limit, K/M/G suffixes [env ICQ_MAX_UPLOAD]")
      ->capture_default_str();
  sv_cmd->add_option("--seed", sv.seed, "Default stress-set seed [env ICQ_SEED]")->capture_default_str();
  sv_cmd->add_option("--workers", sv.workers, "Concurrent annotation jobs")->capture_default_str();
  sv_cmd->add_option("--jobs", sv.jobs, "Threads per annotation job (0 = all cores)")->capture_default_str();
  sv_cmd->add_option("--webui", sv.webui, "Directory of web UI assets served at /");
  sv_cmd->add_option("--resources", sv.resources, "Resource directory (default: $ICQ_RESOURCES or the bundled one)");

  FixtureOptions fx;
  auto* fx_cmd = app.add_subcommand("fixture", "Generate a planted-cue dataset with oracle and predictions");
  fx_cmd->add_option("--spec", fx.spec, "Plant spec (JSON)")->required();
  fx_cmd->add_option("-o,--out", fx.out, "Output dataset directory")->required();
  fx_cmd->add_option("--predictors", fx.predictors, "Synthetic predictors to write")
      ->delimiter(',')
      ->check(CLI::IsMember({"always-label", "gold", "uniform-random", "cue-follower"}))
      ->capture_default_str();
  fx_cmd->add_option("--predictor-seed", fx.predictor_seed, "Seed for uniform-random")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*cues_cmd) return cmd_cues(cues);
    if (*probe_cmd) return cmd_probe(probe_opts);
    if (*hx_cmd) return cmd_hypo_export(hx);
    if (*hr_cmd) return cmd_hypo_report(hr);
    if (*sv_cmd) return cmd_serve(sv, *sv_cmd);
    if (*fx_cmd) return cmd_fixture(fx);
  } catch (const ValidationError& e) {
    std::cerr << "icq: error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "icq: internal error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace icq
