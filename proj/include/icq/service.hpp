#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "icq/annotate.hpp"
#include "icq/corpus.hpp"
#include "icq/error.hpp"
#include "icq/probe.hpp"

namespace icq {

/// Raised when the listening socket cannot be bound.
class BindError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct ServiceConfig {
  std::filesystem::path store_dir = "icq-store";
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::size_t max_upload = std::size_t{64} << 20;  // per uploaded file
  std::uint64_t seed = kDefaultSeed;
  std::size_t workers = 2;  // concurrent annotation jobs
  std::size_t jobs = 0;     // threads per annotation job, 0 = all cores
  std::filesystem::path webui_dir;  // served at / when it exists

  /// Overrides fields from ICQ_STORE_DIR, ICQ_BIND_ADDR, ICQ_MAX_UPLOAD and ICQ_SEED.
  void apply_env();
};

/// "host:port", ":port" or "port".
void parse_bind_addr(std::string_view text, std::string& host, int& port);

/// Byte count with an optional K/M/G suffix (powers of 1024).
std::size_t parse_size(std::string_view text);

enum class JobStatus { kQueued, kRunning, kReady, kFailed };

std::string_view to_string(JobStatus status);

struct DatasetEntry {
  std::string id;  // 16-hex prefix of the content hash
  std::string hash;
  std::string name;
  TaskKind task_kind = TaskKind::kCls;
  std::vector<std::string> label_set;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  JobStatus status = JobStatus::kQueued;
  std::string error;
  std::vector<std::string> models;
  std::vector<std::string> runs;

  nlohmann::json descriptor() const;
};

/// On-disk store:
///   datasets/<id>/{train.jsonl,test.jsonl,meta.json}
///   annotations/<id>/annotations.json (or error.txt after a failed job)
///   predictions/<id>/<model-slug>.jsonl + <model-slug>.meta.json
///   reports/<run-id>/
///   index.json
/// The index is derived state: the constructor rebuilds it from the tree.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }

  /// Stores the raw split files unless identical content is already present.
  /// Returns the entry and whether it was newly created.
  std::pair<DatasetEntry, bool> add_dataset(const std::string& name, TaskKind kind, std::string_view train_text,
                                            std::string_view test_text);

  std::optional<DatasetEntry> get(const std::string& id) const;
  std::vector<DatasetEntry> list() const;
  /// Ids whose annotation has not finished, in id order.
  std::vector<std::string> unfinished() const;

  Dataset load_dataset(const std::string& id) const;

  void set_status(const std::string& id, JobStatus status, const std::string& error = {});
  void save_annotations(const std::string& id, const DatasetAnnotations& annotations);
  std::optional<DatasetAnnotations> load_annotations(const std::string& id) const;

  void save_predictions(const std::string& id, const PredictionSet& preds, const Dataset& dataset);
  std::optional<PredictionSet> load_predictions(const std::string& id, const std::string& model,
                                                const Dataset& dataset) const;

  std::filesystem::path report_dir(const std::string& run_id) const { return root_ / "reports" / run_id; }
  void record_run(const std::string& id, const std::string& run_id);

  /// Per-dataset writer lock.
  std::mutex& writer_lock(const std::string& id);

 private:
  void recover();
  void write_index_locked() const;

  std::filesystem::path root_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, DatasetEntry> entries_;
  std::mutex locks_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

/// HTTP front end over a RunStore with a background annotation pool.
class Service {
 public:
  Service(ServiceConfig config, ResourceBundle resources);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds the listening socket and returns the port. Throws BindError.
  int bind();
  /// Serves until stop(). Requires bind().
  void run();
  void stop();

  /// Blocks until no annotation job is queued or running.
  void wait_idle();

  RunStore& store();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace icq
