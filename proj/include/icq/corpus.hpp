#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace icq {

enum class TaskKind { kCls, kMcq };

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view text);

/// One (premise, hypothesis, label) reasoning unit. MCQ instances also carry
/// the question they were split from and their choice position.
struct Instance {
  std::string id;
  std::string premise;
  std::string hypothesis;
  std::string label;
  std::optional<std::string> question_id;
  std::optional<std::uint32_t> choice_index;

  bool operator==(const Instance&) const = default;
};

/// A raw multiple-choice question as it appears in mcq-jsonl.
struct McqRecord {
  std::string id;
  std::string context;
  std::vector<std::string> choices;
  std::int64_t answer = 0;
};

inline constexpr std::string_view kTrueLabel = "true";
inline constexpr std::string_view kFalseLabel = "false";

/// Splits a k-way question into k true/false instances with ids "<qid>#<i>".
std::vector<Instance> split_mcq(const McqRecord& question);

enum class Split { kTrain, kTest };

/// Validated, immutable train/test pair. The label set is inferred from the
/// train split and sorted.
class Dataset {
 public:
  Dataset(std::string name, TaskKind kind, std::vector<Instance> train, std::vector<Instance> test);

  const std::string& name() const noexcept { return name_; }
  TaskKind task_kind() const noexcept { return kind_; }
  const std::vector<std::string>& label_set() const noexcept { return labels_; }
  const std::vector<Instance>& train() const noexcept { return train_; }
  const std::vector<Instance>& test() const noexcept { return test_; }
  const std::vector<Instance>& split(Split s) const noexcept { return s == Split::kTrain ? train_ : test_; }

  std::optional<std::size_t> label_index(std::string_view label) const;
  /// Gold label index of a row.
  std::uint32_t gold(Split s, std::size_t row) const { return s == Split::kTrain ? train_gold_[row] : test_gold_[row]; }
  std::optional<std::size_t> row_of(Split s, std::string_view id) const;

 private:
  std::string name_;
  TaskKind kind_;
  std::vector<std::string> labels_;
  std::vector<Instance> train_;
  std::vector<Instance> test_;
  std::vector<std::uint32_t> train_gold_;
  std::vector<std::uint32_t> test_gold_;
  std::unordered_map<std::string, std::size_t> train_rows_;
  std::unordered_map<std::string, std::size_t> test_rows_;
};

/// Parses one split from cls-jsonl or mcq-jsonl text. `source` names the
/// input in error messages.
std::vector<Instance> parse_split(std::string_view text, TaskKind kind, const std::string& source);

/// Loads <dir>/train.jsonl, <dir>/test.jsonl and <dir>/meta.json. The dataset
/// name is meta.json's "name" when present, else the directory name.
Dataset load_dataset(const std::filesystem::path& dir);

/// Loads a dataset directory with an explicit format, ignoring meta.json.
Dataset load_dataset(const std::filesystem::path& dir, TaskKind kind);

/// Builds a dataset from in-memory file contents (the service upload path).
Dataset parse_dataset(std::string name, TaskKind kind, std::string_view train_text, std::string_view test_text);

/// Content hash over the task kind and both split files.
std::string dataset_content_hash(TaskKind kind, std::string_view train_text, std::string_view test_text);

/// Serializes a split back to its jsonl form. MCQ instances are regrouped
/// into one record per question, in first-appearance order.
std::string serialize_split(std::span<const Instance> instances, TaskKind kind);

/// Writes train.jsonl, test.jsonl and meta.json into `dir`.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);

enum class StripScope { kTestOnly, kTrainAndTest };

/// Copy of `dataset` with premises blanked. Ids, labels and grouping are kept.
Dataset strip_premises(const Dataset& dataset, StripScope scope = StripScope::kTestOnly);

}  // namespace icq
