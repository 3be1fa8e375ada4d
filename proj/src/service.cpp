#include "icq/service.hpp"

#include <sys/socket.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <thread>

#include <httplib.h>

#include "icq/pipeline.hpp"
#include "icq/report.hpp"
#include "icq/util.hpp"

namespace icq {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

std::uint64_t parse_u64(std::string_view text, const char* what) {
  std::uint64_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ValidationError(std::string("invalid ") + what + ": '" + std::string(text) + "'");
  }
  return value;
}

json prediction_meta(const PredictionSet& preds, const std::string& file_hash) {
  return json{{"model_name", preds.model_name}, {"coverage", preds.coverage()}, {"sha256", file_hash}};
}

}  // namespace

void parse_bind_addr(std::string_view text, std::string& host, int& port) {
  const auto colon = text.rfind(':');
  std::string_view port_text = text;
  if (colon != std::string_view::npos) {
    if (colon > 0) host = std::string(text.substr(0, colon));
    port_text = text.substr(colon + 1);
  }
  const auto p = parse_u64(port_text, "bind address port");
  if (p > 65535) throw ValidationError("invalid bind address port: " + std::string(port_text));
  port = static_cast<int>(p);
}

std::size_t parse_size(std::string_view text) {
  std::size_t shift = 0;
  if (!text.empty()) {
    switch (text.back()) {
      case 'K':
      case 'k':
        shift = 10;
        break;
      case 'M':
      case 'm':
        shift = 20;
        break;
      case 'G':
      case 'g':
        shift = 30;
        break;
      default:
        break;
    }
  }
  if (shift != 0) text.remove_suffix(1);
  return static_cast<std::size_t>(parse_u64(text, "size")) << shift;
}

void ServiceConfig::apply_env() {
  if (auto v = env("ICQ_STORE_DIR")) store_dir = *v;
  if (auto v = env("ICQ_BIND_ADDR")) parse_bind_addr(*v, host, port);
  if (auto v = env("ICQ_MAX_UPLOAD")) max_upload = parse_size(*v);
  if (auto v = env("ICQ_SEED")) seed = parse_u64(*v, "ICQ_SEED");
}

std::string_view to_string(JobStatus status) {
  switch (status) {
    case JobStatus::kQueued:
      return "queued";
    case JobStatus::kRunning:
      return "running";
    case JobStatus::kReady:
      return "ready";
    case JobStatus::kFailed:
      break;
  }
  return "failed";
}

json DatasetEntry::descriptor() const {
  json doc{{"id", id},
           {"hash", hash},
           {"name", name},
           {"task_kind", std::string(to_string(task_kind))},
           {"label_set", label_set},
           {"sizes", {{"train", train_size}, {"test", test_size}}},
           {"status", std::string(to_string(status))},
           {"models", models},
           {"runs", runs}};
  if (!error.empty()) doc["error"] = error;
  return doc;
}

// ---------------------------------------------------------------------------
// RunStore

RunStore::RunStore(fs::path root) : root_(std::move(root)) {
  for (const char* sub : {"datasets", "annotations", "predictions", "reports"}) fs::create_directories(root_ / sub);
  recover();
}

void RunStore::recover() {
  std::unique_lock lock(mutex_);
  entries_.clear();
  for (const auto& dir : fs::directory_iterator(root_ / "datasets")) {
    if (!dir.is_directory() || !fs::exists(dir.path() / "meta.json")) continue;
    DatasetEntry e;
    e.id = dir.path().filename().string();
    try {
      const auto meta = json::parse(read_file(dir.path() / "meta.json"));
      e.name = meta.at("name").get<std::string>();
      e.task_kind = parse_task_kind(meta.at("task_kind").get<std::string>());
      e.hash = meta.value("hash", std::string());
      const auto ds = icq::load_dataset(dir.path(), e.task_kind);
      e.label_set = ds.label_set();
      e.train_size = ds.train().size();
      e.test_size = ds.test().size();
    } catch (const std::exception&) {
      continue;  // a half-written upload; its files are rewritten on re-upload
    }
    const auto ann = root_ / "annotations" / e.id;
    if (fs::exists(ann / "annotations.json")) {
      e.status = JobStatus::kReady;
    } else if (fs::exists(ann / "error.txt")) {
      e.status = JobStatus::kFailed;
      e.error = read_file(ann / "error.txt");
    }
    const auto pred_dir = root_ / "predictions" / e.id;
    if (fs::exists(pred_dir)) {
      for (const auto& f : fs::directory_iterator(pred_dir)) {
        const auto name = f.path().filename().string();
        if (!name.ends_with(".meta.json")) continue;
        e.models.push_back(json::parse(read_file(f.path())).at("model_name").get<std::string>());
      }
      std::sort(e.models.begin(), e.models.end());
    }
    entries_.emplace(e.id, std::move(e));
  }
  for (const auto& dir : fs::directory_iterator(root_ / "reports")) {
    const auto manifest_path = dir.path() / "manifest.json";
    if (!fs::exists(manifest_path)) continue;
    try {
      const auto hash = json::parse(read_file(manifest_path)).at("dataset").at("hash").get<std::string>();
      auto it = entries_.find(hash.substr(0, 16));
      if (it != entries_.end()) it->second.runs.push_back(dir.path().filename().string());
    } catch (const std::exception&) {
      continue;
    }
  }
  for (auto& [id, e] : entries_) std::sort(e.runs.begin(), e.runs.end());
  write_index_locked();
}

void RunStore::write_index_locked() const {
  json index{{"datasets", json::object()}};
  for (const auto& [id, e] : entries_) index["datasets"][id] = e.descriptor();
  write_file_atomic(root_ / "index.json", dump_report(index));
}

std::pair<DatasetEntry, bool> RunStore::add_dataset(const std::string& name, TaskKind kind, std::string_view train_text,
                                                    std::string_view test_text) {
  const auto hash = dataset_content_hash(kind, train_text, test_text);
  const auto id = hash.substr(0, 16);
  {
    std::shared_lock lock(mutex_);
    if (auto it = entries_.find(id); it != entries_.end()) return {it->second, false};
  }
  // Parsing happens before anything touches the store.
  const auto ds = parse_dataset(name, kind, train_text, test_text);

  std::unique_lock lock(mutex_);
  if (auto it = entries_.find(id); it != entries_.end()) return {it->second, false};
  const auto dir = root_ / "datasets" / id;
  write_file_atomic(dir / "train.jsonl", train_text);
  write_file_atomic(dir / "test.jsonl", test_text);
  write_file_atomic(dir / "meta.json",
                    dump_report(json{{"name", name}, {"task_kind", std::string(to_string(kind))}, {"hash", hash}}));
  DatasetEntry e;
  e.id = id;
  e.hash = hash;
  e.name = name;
  e.task_kind = kind;
  e.label_set = ds.label_set();
  e.train_size = ds.train().size();
  e.test_size = ds.test().size();
  entries_.emplace(id, e);
  write_index_locked();
  return {e, true};
}

std::optional<DatasetEntry> RunStore::get(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(id);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::vector<DatasetEntry> RunStore::list() const {
  std::shared_lock lock(mutex_);
  std::vector<DatasetEntry> out;
  for (const auto& [id, e] : entries_) out.push_back(e);
  return out;
}

std::vector<std::string> RunStore::unfinished() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, e] : entries_) {
    if (e.status == JobStatus::kQueued || e.status == JobStatus::kRunning) out.push_back(id);
  }
  return out;
}

Dataset RunStore::load_dataset(const std::string& id) const {
  const auto e = get(id);
  if (!e) throw ValidationError("unknown dataset " + id);
  auto ds = icq::load_dataset(root_ / "datasets" / id, e->task_kind);
  return Dataset(e->name, ds.task_kind(), ds.train(), ds.test());
}

void RunStore::set_status(const std::string& id, JobStatus status, const std::string& error) {
  std::unique_lock lock(mutex_);
  auto it = entries_.find(id);
  if (it == entries_.end()) return;
  if (status == JobStatus::kFailed) write_file_atomic(root_ / "annotations" / id / "error.txt", error);
  it->second.status = status;
  it->second.error = error;
  write_index_locked();
}

void RunStore::save_annotations(const std::string& id, const DatasetAnnotations& annotations) {
  write_file_atomic(root_ / "annotations" / id / "annotations.json", serialize_annotations(annotations));
}

std::optional<DatasetAnnotations> RunStore::load_annotations(const std::string& id) const {
  const auto path = root_ / "annotations" / id / "annotations.json";
  if (!fs::exists(path)) return std::nullopt;
  return parse_annotations(read_file(path));
}

void RunStore::save_predictions(const std::string& id, const PredictionSet& preds, const Dataset& dataset) {
  const auto dir = root_ / "predictions" / id;
  const auto base = slug(preds.model_name);
  const auto text = serialize_predictions(preds, dataset);
  write_file_atomic(dir / (base + ".jsonl"), text);
  write_file_atomic(dir / (base + ".meta.json"), dump_report(prediction_meta(preds, sha256_hex(text))));
  std::unique_lock lock(mutex_);
  auto it = entries_.find(id);
  if (it == entries_.end()) return;
  auto& models = it->second.models;
  if (std::find(models.begin(), models.end(), preds.model_name) == models.end()) {
    models.push_back(preds.model_name);
    std::sort(models.begin(), models.end());
  }
  write_index_locked();
}

std::optional<PredictionSet> RunStore::load_predictions(const std::string& id, const std::string& model,
                                                        const Dataset& dataset) const {
  const auto e = get(id);
  if (!e || std::find(e->models.begin(), e->models.end(), model) == e->models.end()) return std::nullopt;
  const auto path = root_ / "predictions" / id / (slug(model) + ".jsonl");
  return icq::load_predictions(read_file(path), dataset, model, path.string());
}

void RunStore::record_run(const std::string& id, const std::string& run_id) {
  std::unique_lock lock(mutex_);
  auto it = entries_.find(id);
  if (it == entries_.end()) return;
  auto& runs = it->second.runs;
  if (std::find(runs.begin(), runs.end(), run_id) != runs.end()) return;
  runs.push_back(run_id);
  std::sort(runs.begin(), runs.end());
  write_index_locked();
}

std::mutex& RunStore::writer_lock(const std::string& id) {
  std::lock_guard lock(locks_mutex_);
  auto& slot = locks_[id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

// ---------------------------------------------------------------------------
// Service

struct Service::Impl {
  ServiceConfig config;
  ResourceBundle resources;
  RunStore store;
  httplib::Server server;
  bool bound = false;

  std::mutex cache_mutex;
  std::map<std::string, std::shared_ptr<const AnalyzedDataset>> cache;

  std::mutex queue_mutex;
  std::condition_variable queue_cv;
  std::condition_variable idle_cv;
  std::deque<std::string> queue;
  std::size_t active = 0;
  bool stopping = false;
  std::vector<std::jthread> workers;

  Impl(ServiceConfig c, ResourceBundle r)
      : config(std::move(c)), resources(std::move(r)), store(config.store_dir) {
    routes();
    const auto n = std::max<std::size_t>(1, config.workers);
    for (std::size_t i = 0; i < n; ++i) workers.emplace_back([this] { worker_loop(); });
    for (const auto& id : store.unfinished()) enqueue(id);
  }

  ~Impl() { shutdown(); }

  void shutdown() {
    {
      std::lock_guard lock(queue_mutex);
      stopping = true;
    }
    queue_cv.notify_all();
    workers.clear();
  }

  void enqueue(const std::string& id) {
    store.set_status(id, JobStatus::kQueued);
    {
      std::lock_guard lock(queue_mutex);
      queue.push_back(id);
    }
    queue_cv.notify_one();
  }

  void worker_loop() {
    for (;;) {
      std::string id;
      {
        std::unique_lock lock(queue_mutex);
        queue_cv.wait(lock, [&] { return stopping || !queue.empty(); });
        if (stopping) return;
        id = queue.front();
        queue.pop_front();
        ++active;
      }
      annotate_job(id);
      {
        std::lock_guard lock(queue_mutex);
        --active;
      }
      idle_cv.notify_all();
    }
  }

  PipelineConfig pipeline_config() const {
    PipelineConfig pc;
    pc.seed = config.seed;
    pc.jobs = config.jobs;
    return pc;
  }

  void annotate_job(const std::string& id) {
    std::lock_guard writer(store.writer_lock(id));
    store.set_status(id, JobStatus::kRunning);
    try {
      const auto entry = *store.get(id);
      auto analyzed = std::make_shared<AnalyzedDataset>(
          analyze(store.load_dataset(id), entry.hash, resources, pipeline_config()));
      store.save_annotations(id, analyzed->annotations);
      const auto pc = pipeline_config();
      const auto manifest = make_manifest(*analyzed, resources.content_hash, pc);
      const auto run = discover_cues(*analyzed, pc);
      const auto doc = cue_report(*analyzed, run, {}, manifest);
      const auto rid = run_id(manifest);
      write_cue_report(store.report_dir(rid), doc, manifest);
      store.record_run(id, rid);
      {
        std::lock_guard lock(cache_mutex);
        cache[id] = std::move(analyzed);
      }
      store.set_status(id, JobStatus::kReady);
    } catch (const std::exception& e) {
      store.set_status(id, JobStatus::kFailed, e.what());
    }
  }

  void wait_idle() {
    std::unique_lock lock(queue_mutex);
    idle_cv.wait(lock, [&] { return stopping || (queue.empty() && active == 0); });
  }

  /// Analyzed dataset for a ready entry, rebuilt from the annotation cache
  /// after a restart.
  std::shared_ptr<const AnalyzedDataset> analyzed(const DatasetEntry& entry) {
    {
      std::lock_guard lock(cache_mutex);
      if (auto it = cache.find(entry.id); it != cache.end()) return it->second;
    }
    auto annotations = store.load_annotations(entry.id);
    if (!annotations) throw std::runtime_error("annotation cache missing for " + entry.id);
    auto built = std::make_shared<const AnalyzedDataset>(
        from_annotations(store.load_dataset(entry.id), entry.hash, std::move(*annotations)));
    std::lock_guard lock(cache_mutex);
    return cache.try_emplace(entry.id, std::move(built)).first->second;
  }

  // -- HTTP helpers ---------------------------------------------------------

  static void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), kJson);
  }

  static void send_error(httplib::Response& res, int status, const std::string& message, json extra = json::object()) {
    extra["error"] = message;
    send(res, status, extra);
  }

  /// Looks up the entry named in the path; answers 404 when it is unknown.
  std::optional<DatasetEntry> entry_or_404(const httplib::Request& req, httplib::Response& res) {
    const auto id = req.path_params.at("id");
    auto e = store.get(id);
    if (!e) send_error(res, 404, "unknown dataset " + id);
    return e;
  }

  /// True when annotation has finished; otherwise answers 409 (or 500 for a failed job).
  static bool ready_or_409(const DatasetEntry& e, httplib::Response& res) {
    if (e.status == JobStatus::kReady) return true;
    if (e.status == JobStatus::kFailed) {
      send_error(res, 500, "annotation failed: " + e.error, json{{"status", "failed"}});
    } else {
      send_error(res, 409, "annotation running", json{{"status", std::string(to_string(e.status))}});
    }
    return false;
  }

  std::optional<std::string> upload_part(const httplib::Request& req, httplib::Response& res, const std::string& key,
                                         bool required) {
    if (!req.has_file(key)) {
      if (required) send_error(res, 400, "missing multipart field '" + key + "'");
      return std::nullopt;
    }
    auto content = req.get_file_value(key).content;
    if (content.size() > config.max_upload) {
      send_error(res, 413,
                 "'" + key + "' exceeds the upload limit of " + std::to_string(config.max_upload) + " bytes");
      return std::nullopt;
    }
    return content;
  }

  // -- handlers -------------------------------------------------------------

  void post_dataset(const httplib::Request& req, httplib::Response& res) {
    auto train = upload_part(req, res, "train", true);
    if (!train) return;
    auto test = upload_part(req, res, "test", true);
    if (!test) return;
    auto meta_text = upload_part(req, res, "meta", true);
    if (!meta_text) return;
    json meta;
    try {
      meta = json::parse(*meta_text);
      const auto kind = parse_task_kind(meta.at("task_kind").get<std::string>());
      auto name = meta.value("name", std::string());
      const auto hash = dataset_content_hash(kind, *train, *test);
      if (name.empty()) name = "dataset-" + hash.substr(0, 16);
      auto [entry, created] = store.add_dataset(name, kind, *train, *test);
      if (created) enqueue(entry.id);
      send(res, created ? 201 : 200, store.get(entry.id)->descriptor());
    } catch (const ParseError& e) {
      send_error(res, 400, e.what(), json{{"source", e.source()}, {"line", e.line()}});
    } catch (const json::exception& e) {
      send_error(res, 400, std::string("meta: ") + e.what());
    }
  }

  void get_cues(const httplib::Request& req, httplib::Response& res) {
    auto e = entry_or_404(req, res);
    if (!e || !ready_or_409(*e, res)) return;
    auto pc = pipeline_config();
    if (req.has_param("top")) pc.top_k = parse_u64(req.get_param_value("top"), "top");
    if (req.has_param("min_support")) pc.min_support = parse_u64(req.get_param_value("min_support"), "min_support");
    if (req.has_param("support_mode")) pc.support_mode = parse_support_mode(req.get_param_value("support_mode"));
    if (req.has_param("kinds")) {
      const auto text = req.get_param_value("kinds");
      std::size_t start = 0;
      while (start <= text.size()) {
        auto end = text.find(',', start);
        if (end == std::string::npos) end = text.size();
        if (end > start) pc.kinds.insert(parse_feature_kind(text.substr(start, end - start)));
        start = end + 1;
      }
    }
    const auto a = analyzed(*e);
    const auto run = discover_cues(*a, pc);
    const auto doc = cue_report(*a, run, {}, make_manifest(*a, resources.content_hash, pc));
    send(res, 200, doc.json.at("cues"));
  }

  void post_predictions(const httplib::Request& req, httplib::Response& res) {
    auto e = entry_or_404(req, res);
    if (!e) return;
    auto model = upload_part(req, res, "model_name", true);
    if (!model) return;
    auto file = upload_part(req, res, "file", true);
    if (!file) return;
    if (model->empty()) return send_error(res, 400, "model_name is empty");
    const auto dataset = store.load_dataset(e->id);
    try {
      auto preds = icq::load_predictions(*file, dataset, *model, "file");
      require_full_coverage(preds, dataset);
      std::lock_guard writer(store.writer_lock(e->id));
      store.save_predictions(e->id, preds, dataset);
      send(res, 201, json{{"dataset", e->id}, {"model", *model}, {"coverage", preds.coverage()},
                          {"sha256", sha256_hex(*file)}});
    } catch (const IdListError& err) {
      send_error(res, 422, err.what(), json{{"ids", err.ids()}});
    } catch (const ParseError& err) {
      send_error(res, 422, err.what(), json{{"source", err.source()}, {"line", err.line()}});
    } catch (const ValidationError& err) {
      send_error(res, 422, err.what());
    }
  }

  void post_probe(const httplib::Request& req, httplib::Response& res) {
    auto e = entry_or_404(req, res);
    if (!e || !ready_or_409(*e, res)) return;
    json body;
    try {
      body = json::parse(req.body);
      body.at("model").get<std::string>();
      body.at("feature").get<std::string>();
    } catch (const json::exception& err) {
      return send_error(res, 400, std::string("probe request: ") + err.what());
    }
    auto pc = pipeline_config();
    if (body.contains("seed")) {
      if (!body["seed"].is_number_unsigned()) return send_error(res, 400, "probe request: seed must be an unsigned integer");
      pc.seed = body["seed"].get<std::uint64_t>();
    }
    const auto a = analyzed(*e);
    const auto model = body["model"].get<std::string>();
    auto preds = store.load_predictions(e->id, model, a->dataset);
    if (!preds) return send_error(res, 404, "unknown model " + model);
    FeatureSpec feature;
    try {
      feature = parse_feature(body["feature"].get<std::string>());
      qualified_split(*a, feature, pc);
    } catch (const ValidationError& err) {
      return send_error(res, 404, err.what());
    }
    const auto report = probe_feature(*a, *preds, feature, pc);
    const auto manifest = make_manifest(*a, resources.content_hash, pc);
    const auto doc = emit_probe_report(report, a->dataset, manifest);
    {
      std::lock_guard writer(store.writer_lock(e->id));
      const auto rid = run_id(manifest);
      write_probe_report(store.report_dir(rid), doc, manifest);
      store.record_run(e->id, rid);
    }
    send(res, 200, doc.json);
  }

  void export_hypothesis_only(const httplib::Request& req, httplib::Response& res) {
    auto e = entry_or_404(req, res);
    if (!e) return;
    const auto stripped = strip_premises(store.load_dataset(e->id));
    res.status = 200;
    res.set_content(serialize_split(stripped.test(), stripped.task_kind()), "application/x-ndjson");
  }

  void routes() {
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    // Three files plus multipart framing.
    server.set_payload_max_length(config.max_upload * 3 + (std::size_t{1} << 20));
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const IdListError& e) {
        send_error(res, 422, e.what(), json{{"ids", e.ids()}});
      } catch (const ValidationError& e) {
        send_error(res, 400, e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, e.what());
      } catch (...) {
        send_error(res, 500, "internal error");
      }
    });

    server.Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
      send(res, 200, json{{"status", "ok"}, {"version", kToolVersion}});
    });
    server.Get("/api/datasets", [this](const httplib::Request&, httplib::Response& res) {
      json out = json::array();
      for (const auto& e : store.list()) out.push_back(e.descriptor());
      send(res, 200, out);
    });
    server.Post("/api/datasets", [this](const httplib::Request& req, httplib::Response& res) { post_dataset(req, res); });
    server.Get("/api/datasets/:id", [this](const httplib::Request& req, httplib::Response& res) {
      if (auto e = entry_or_404(req, res)) send(res, 200, e->descriptor());
    });
    server.Get("/api/datasets/:id/status", [this](const httplib::Request& req, httplib::Response& res) {
      if (auto e = entry_or_404(req, res)) {
        json body{{"id", e->id}, {"status", std::string(to_string(e->status))}};
        if (!e->error.empty()) body["error"] = e->error;
        send(res, 200, body);
      }
    });
    server.Get("/api/datasets/:id/cues", [this](const httplib::Request& req, httplib::Response& res) { get_cues(req, res); });
    server.Post("/api/datasets/:id/predictions",
                [this](const httplib::Request& req, httplib::Response& res) { post_predictions(req, res); });
    server.Post("/api/datasets/:id/probe", [this](const httplib::Request& req, httplib::Response& res) { post_probe(req, res); });
    server.Get("/api/datasets/:id/export/hypothesis-only",
               [this](const httplib::Request& req, httplib::Response& res) { export_hypothesis_only(req, res); });

    if (!config.webui_dir.empty() && fs::is_directory(config.webui_dir)) {
      server.set_mount_point("/", config.webui_dir.string());
    }
  }
};

Service::Service(ServiceConfig config, ResourceBundle resources)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(resources))) {}

Service::~Service() {
  stop();
  impl_->shutdown();
}

int Service::bind() {
  auto& cfg = impl_->config;
  int port = cfg.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(cfg.host);
    if (port < 0) throw BindError("cannot bind " + cfg.host + ":0");
  } else if (!impl_->server.bind_to_port(cfg.host, port)) {
    throw BindError("cannot bind " + cfg.host + ":" + std::to_string(port) + " (address in use or not available)");
  }
  impl_->bound = true;
  return port;
}

void Service::run() {
  if (!impl_->bound) bind();
  impl_->server.listen_after_bind();
}

void Service::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

void Service::wait_idle() { impl_->wait_idle(); }

RunStore& Service::store() { return impl_->store; }

}  // namespace icq
