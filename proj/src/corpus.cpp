#include "icq/corpus.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <json.hpp>

#include "icq/error.hpp"
#include "icq/util.hpp"

namespace icq {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(TaskKind kind) { return kind == TaskKind::kCls ? "CLS" : "MCQ"; }

TaskKind parse_task_kind(std::string_view text) {
  if (text == "CLS" || text == "cls" || text == "cls-jsonl") return TaskKind::kCls;
  if (text == "MCQ" || text == "mcq" || text == "mcq-jsonl") return TaskKind::kMcq;
  throw ValidationError("unknown task kind '" + std::string(text) + "' (expected CLS or MCQ)");
}

std::vector<Instance> split_mcq(const McqRecord& question) {
  const auto k = question.choices.size();
  if (k < 2) throw ValidationError("question " + question.id + ": needs at least 2 choices, got " + std::to_string(k));
  if (question.answer < 0 || static_cast<std::size_t>(question.answer) >= k) {
    throw ValidationError("question " + question.id + ": answer index out of range (" +
                          std::to_string(question.answer) + " for " + std::to_string(k) + " choices)");
  }
  std::vector<Instance> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    Instance inst;
    inst.id = question.id + "#" + std::to_string(i);
    inst.premise = question.context;
    inst.hypothesis = question.choices[i];
    inst.label = std::string(static_cast<std::int64_t>(i) == question.answer ? kTrueLabel : kFalseLabel);
    inst.question_id = question.id;
    inst.choice_index = static_cast<std::uint32_t>(i);
    out.push_back(std::move(inst));
  }
  return out;
}

namespace {

std::string require_string(const json& obj, const char* key, const std::string& source, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(source, line, std::string("missing field \"") + key + "\"");
  if (!it->is_string()) throw ParseError(source, line, std::string("field \"") + key + "\" must be a string");
  return it->get<std::string>();
}

void validate_split(const std::vector<Instance>& instances, TaskKind kind, const std::string& split_name) {
  for (const auto& inst : instances) {
    if (inst.question_id.has_value() != inst.choice_index.has_value()) {
      throw ValidationError(split_name + ": instance " + inst.id + " has only one of question_id/choice_index");
    }
    if (kind == TaskKind::kCls && inst.question_id) {
      throw ValidationError(split_name + ": CLS instance " + inst.id + " carries a question_id");
    }
    if (kind == TaskKind::kMcq && !inst.question_id) {
      throw ValidationError(split_name + ": MCQ instance " + inst.id + " has no question_id");
    }
  }
  if (kind != TaskKind::kMcq) return;
  std::map<std::string, std::pair<std::size_t, std::size_t>> groups;  // size, trues
  for (const auto& inst : instances) {
    auto& g = groups[*inst.question_id];
    ++g.first;
    if (inst.label == kTrueLabel) ++g.second;
  }
  for (const auto& [qid, g] : groups) {
    if (g.first < 2) throw ValidationError(split_name + ": question " + qid + " has fewer than 2 instances");
    if (g.second != 1) {
      throw ValidationError(split_name + ": question " + qid + " has " + std::to_string(g.second) +
                            " true instances (expected exactly 1)");
    }
  }
}

}  // namespace

std::vector<Instance> parse_split(std::string_view text, TaskKind kind, const std::string& source) {
  std::vector<Instance> out;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  for (auto line : split_lines(text)) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source, line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(source, line_no, "record is not a JSON object");

    if (kind == TaskKind::kCls) {
      Instance inst;
      inst.id = require_string(obj, "id", source, line_no);
      inst.premise = require_string(obj, "premise", source, line_no);
      inst.hypothesis = require_string(obj, "hypothesis", source, line_no);
      inst.label = require_string(obj, "label", source, line_no);
      if (inst.label.empty()) throw ParseError(source, line_no, "empty label");
      if (!seen.insert(inst.id).second) throw ParseError(source, line_no, "duplicate id " + inst.id);
      out.push_back(std::move(inst));
      continue;
    }

    McqRecord rec;
    rec.id = require_string(obj, "id", source, line_no);
    rec.context = require_string(obj, "context", source, line_no);
    auto choices = obj.find("choices");
    if (choices == obj.end() || !choices->is_array()) {
      throw ParseError(source, line_no, "field \"choices\" must be an array of strings");
    }
    for (const auto& c : *choices) {
      if (!c.is_string()) throw ParseError(source, line_no, "field \"choices\" must be an array of strings");
      rec.choices.push_back(c.get<std::string>());
    }
    auto answer = obj.find("answer");
    if (answer == obj.end() || !answer->is_number_integer()) {
      throw ParseError(source, line_no, "field \"answer\" must be an integer");
    }
    rec.answer = answer->get<std::int64_t>();
    if (rec.choices.size() < 2) throw ParseError(source, line_no, "question needs at least 2 choices");
    if (rec.answer < 0 || static_cast<std::size_t>(rec.answer) >= rec.choices.size()) {
      throw ParseError(source, line_no, "answer index out of range");
    }
    if (!seen.insert(rec.id).second) throw ParseError(source, line_no, "duplicate id " + rec.id);
    for (auto& inst : split_mcq(rec)) out.push_back(std::move(inst));
  }
  if (out.empty()) throw ValidationError(source + ": no instances");
  return out;
}

Dataset::Dataset(std::string name, TaskKind kind, std::vector<Instance> train, std::vector<Instance> test)
    : name_(std::move(name)), kind_(kind), train_(std::move(train)), test_(std::move(test)) {
  if (train_.empty()) throw ValidationError("train split: no instances");
  if (test_.empty()) throw ValidationError("test split: no instances");
  validate_split(train_, kind_, "train");
  validate_split(test_, kind_, "test");

  std::set<std::string> labels;
  for (const auto& inst : train_) labels.insert(inst.label);
  labels_.assign(labels.begin(), labels.end());
  if (kind_ == TaskKind::kMcq) {
    const std::vector<std::string> expected{std::string(kFalseLabel), std::string(kTrueLabel)};
    if (labels_ != expected) throw ValidationError("MCQ label set must be exactly {true, false}");
  }

  auto index_split = [&](const std::vector<Instance>& rows, std::vector<std::uint32_t>& gold,
                         std::unordered_map<std::string, std::size_t>& by_id, const char* split_name) {
    gold.reserve(rows.size());
    by_id.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto li = label_index(rows[i].label);
      if (!li) {
        throw ValidationError(std::string(split_name) + ": label '" + rows[i].label + "' of instance " + rows[i].id +
                              " is not in the train label set");
      }
      gold.push_back(static_cast<std::uint32_t>(*li));
      if (!by_id.emplace(rows[i].id, i).second) {
        throw ValidationError(std::string(split_name) + ": duplicate id " + rows[i].id);
      }
    }
  };
  index_split(train_, train_gold_, train_rows_, "train");
  index_split(test_, test_gold_, test_rows_, "test");
}

std::optional<std::size_t> Dataset::label_index(std::string_view label) const {
  auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
  if (it == labels_.end() || *it != label) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

std::optional<std::size_t> Dataset::row_of(Split s, std::string_view id) const {
  const auto& rows = s == Split::kTrain ? train_rows_ : test_rows_;
  auto it = rows.find(std::string(id));
  if (it == rows.end()) return std::nullopt;
  return it->second;
}

Dataset parse_dataset(std::string name, TaskKind kind, std::string_view train_text, std::string_view test_text) {
  auto train = parse_split(train_text, kind, "train.jsonl");
  auto test = parse_split(test_text, kind, "test.jsonl");
  return Dataset(std::move(name), kind, std::move(train), std::move(test));
}

namespace {

std::string read_split_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ValidationError("missing file " + path.string());
  return read_file(path);
}

struct Meta {
  std::optional<TaskKind> kind;
  std::optional<std::string> name;
};

Meta read_meta(const std::filesystem::path& dir) {
  const auto path = dir / "meta.json";
  if (!std::filesystem::exists(path)) throw ValidationError("missing file " + path.string());
  json meta;
  try {
    meta = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": malformed JSON: " + e.what());
  }
  Meta out;
  if (meta.contains("task_kind") && meta["task_kind"].is_string()) {
    out.kind = parse_task_kind(meta["task_kind"].get<std::string>());
  } else {
    throw ValidationError(path.string() + ": missing \"task_kind\"");
  }
  if (meta.contains("name") && meta["name"].is_string()) out.name = meta["name"].get<std::string>();
  return out;
}

std::string dir_name(const std::filesystem::path& dir) {
  auto p = dir;
  if (!p.has_filename()) p = p.parent_path();
  return std::filesystem::absolute(p).filename().string();
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto meta = read_meta(dir);
  auto train_text = read_split_file(dir / "train.jsonl");
  auto test_text = read_split_file(dir / "test.jsonl");
  return parse_dataset(meta.name.value_or(dir_name(dir)), *meta.kind, train_text, test_text);
}

Dataset load_dataset(const std::filesystem::path& dir, TaskKind kind) {
  auto train_text = read_split_file(dir / "train.jsonl");
  auto test_text = read_split_file(dir / "test.jsonl");
  return parse_dataset(dir_name(dir), kind, train_text, test_text);
}

std::string dataset_content_hash(TaskKind kind, std::string_view train_text, std::string_view test_text) {
  std::string material = "icq-dataset-v1\n";
  material += to_string(kind);
  material += "\n" + sha256_hex(train_text) + "\n" + sha256_hex(test_text) + "\n";
  return sha256_hex(material);
}

std::string serialize_split(std::span<const Instance> instances, TaskKind kind) {
  std::string out;
  if (kind == TaskKind::kCls) {
    for (const auto& inst : instances) {
      ordered_json rec;
      rec["id"] = inst.id;
      rec["premise"] = inst.premise;
      rec["hypothesis"] = inst.hypothesis;
      rec["label"] = inst.label;
      out += rec.dump() + "\n";
    }
    return out;
  }

  std::vector<std::string> order;
  std::map<std::string, std::vector<const Instance*>> groups;
  for (const auto& inst : instances) {
    if (!inst.question_id || !inst.choice_index) {
      throw ValidationError("cannot serialize MCQ instance " + inst.id + " without question grouping");
    }
    auto [it, inserted] = groups.try_emplace(*inst.question_id);
    if (inserted) order.push_back(*inst.question_id);
    it->second.push_back(&inst);
  }
  for (const auto& qid : order) {
    auto& members = groups[qid];
    std::sort(members.begin(), members.end(),
              [](const Instance* a, const Instance* b) { return *a->choice_index < *b->choice_index; });
    ordered_json rec;
    rec["id"] = qid;
    rec["context"] = members.front()->premise;
    auto choices = ordered_json::array();
    std::int64_t answer = -1;
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (*members[i]->choice_index != i) {
        throw ValidationError("question " + qid + ": choice indices are not contiguous");
      }
      choices.push_back(members[i]->hypothesis);
      if (members[i]->label == kTrueLabel) answer = static_cast<std::int64_t>(i);
    }
    rec["choices"] = std::move(choices);
    rec["answer"] = answer;
    out += rec.dump() + "\n";
  }
  return out;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "train.jsonl", serialize_split(dataset.train(), dataset.task_kind()));
  write_file_atomic(dir / "test.jsonl", serialize_split(dataset.test(), dataset.task_kind()));
  ordered_json meta;
  meta["name"] = dataset.name();
  meta["task_kind"] = to_string(dataset.task_kind());
  write_file_atomic(dir / "meta.json", meta.dump(2) + "\n");
}

Dataset strip_premises(const Dataset& dataset, StripScope scope) {
  auto blank = [](std::vector<Instance> rows) {
    for (auto& inst : rows) inst.premise.clear();
    return rows;
  };
  auto train = scope == StripScope::kTrainAndTest ? blank(dataset.train()) : dataset.train();
  return Dataset(dataset.name(), dataset.task_kind(), std::move(train), blank(dataset.test()));
}

}  // namespace icq
