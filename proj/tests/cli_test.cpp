#include <gtest/gtest.h>

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <regex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "icq/util.hpp"
#include "test_support.hpp"

namespace icq {
namespace {

using nlohmann::json;
using testing::run_command;
using testing::TempDir;

const std::string kCli = ICQ_CLI_PATH;

std::string shq(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

testing::CommandResult icq(const std::string& args) { return run_command(shq(kCli) + " " + args); }

/// A planted fixture written once per test through the CLI itself.
class CliFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    write_file_atomic(tmp / "spec.json", R"({"n_train":400,"n_test":120,"seed":7})");
    const auto r = icq("fixture --spec " + shq(tmp / "spec.json") + " -o " + shq(dir()));
    ASSERT_EQ(r.status, 0) << r.output;
  }

  std::filesystem::path dir() const { return tmp / "planted"; }
  std::string preds(const std::string& kind) const { return shq(dir() / "predictions" / (kind + ".jsonl")); }

  TempDir tmp;
};

TEST(Cli, VersionAndUsageErrors) {
  auto r = icq("--version");
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.output, "icq 0.3.0\n");
  EXPECT_EQ(icq("").status, 2);
  EXPECT_EQ(icq("frobnicate").status, 2);
  EXPECT_EQ(icq("cues --top notanumber x").status, 2);
}

TEST(Cli, HelpMatchesGolden) {
  for (const std::string cmd : {"", "cues", "probe", "hypo-export", "hypo-report", "serve", "fixture"}) {
    const auto r = icq(cmd + " --help");
    EXPECT_EQ(r.status, 0) << cmd;
    const auto golden = std::filesystem::path(ICQ_GOLDEN_DIR) / ((cmd.empty() ? "icq" : cmd) + ".help.txt");
    ASSERT_TRUE(std::filesystem::exists(golden)) << golden;
    EXPECT_EQ(r.output, read_file(golden)) << cmd;
  }
}

TEST(Cli, MissingTestSplitIsNamed) {
  TempDir tmp;
  write_file_atomic(tmp / "d" / "meta.json", R"({"task_kind":"CLS"})");
  write_file_atomic(tmp / "d" / "train.jsonl", R"({"id":"a","premise":"p","hypothesis":"h","label":"A"})");
  const auto r = icq("cues " + shq(tmp / "d") + " -o " + shq(tmp / "out"));
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("test.jsonl"), std::string::npos) << r.output;
}

TEST_F(CliFixture, CuesRankThePlantedWord) {
  const auto r = icq("cues " + shq(dir()) + " -o " + shq(tmp / "out"));
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find(" 1  WORD:zork"), std::string::npos) << r.output;
  const auto doc = json::parse(read_file(tmp / "out" / "cues.json"));
  const auto oracle = json::parse(read_file(dir() / "oracle.json"));
  EXPECT_NEAR(doc["cues"][0]["cueness"].get<double>(), oracle["cueness"].get<double>(), 1e-9);
  EXPECT_TRUE(std::filesystem::exists(tmp / "out" / "cues.csv"));
  EXPECT_TRUE(std::filesystem::exists(tmp / "out" / "manifest.json"));
}

TEST_F(CliFixture, TopOneGivesOneRow) {
  const auto r = icq("cues " + shq(dir()) + " --top 1 -o " + shq(tmp / "out"));
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_EQ(json::parse(read_file(tmp / "out" / "cues.json"))["cues"].size(), 1u);
  EXPECT_EQ(std::count(r.output.begin(), r.output.end(), '\n'), 3);
}

TEST_F(CliFixture, CueTableWithModelColumn) {
  const auto r = icq("cues " + shq(dir()) + " --model gold=" + preds("gold") + " -o " + shq(tmp / "out"));
  ASSERT_EQ(r.status, 0) << r.output;
  const auto csv = read_file(tmp / "out" / "cues.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "feature_kind,feature_value,cueness,gold");
  EXPECT_EQ(icq("cues " + shq(dir()) + " --model gold -o " + shq(tmp / "out")).status, 2);
}

TEST_F(CliFixture, ProbeVerdicts) {
  auto r = icq("probe " + shq(dir()) + " --preds " + preds("always-label") + " --feature WORD:zork -o " +
               shq(tmp / "out") + " --stress-out " + shq(tmp / "stress.jsonl"));
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("verdict exploits"), std::string::npos) << r.output;
  EXPECT_TRUE(std::filesystem::exists(tmp / "stress.jsonl"));
  EXPECT_TRUE(std::filesystem::exists(tmp / "out" / "charts" / "WORD-zork-always-label.json"));

  r = icq("probe " + shq(dir()) + " --preds " + preds("gold") + " --feature WORD:zork -o " + shq(tmp / "out"));
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("delta 0.00%  verdict resists"), std::string::npos) << r.output;
}

TEST_F(CliFixture, ProbeRejectsBadFeatures) {
  auto r = icq("probe " + shq(dir()) + " --preds " + preds("gold") + " --feature BOGUS:x -o " + shq(tmp / "out"));
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("BOGUS"), std::string::npos) << r.output;
  r = icq("probe " + shq(dir()) + " --preds " + preds("gold") + " --feature WORD:absentword -o " +
          shq(tmp / "out"));
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("not qualified"), std::string::npos) << r.output;
}

TEST_F(CliFixture, ProbeNeedsFullCoverage) {
  auto text = read_file(dir() / "predictions" / "gold.jsonl");
  text = text.substr(text.find('\n') + 1);
  write_file_atomic(tmp / "partial.jsonl", text);
  const auto r =
      icq("probe " + shq(dir()) + " --preds " + shq(tmp / "partial.jsonl") + " --feature WORD:zork -o " +
          shq(tmp / "out"));
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("s0"), std::string::npos) << r.output;
}

TEST_F(CliFixture, HypothesisOnlyRoundTrip) {
  auto r = icq("hypo-export " + shq(dir()) + " -o " + shq(tmp / "hypo.jsonl"));
  ASSERT_EQ(r.status, 0) << r.output;
  for (const auto& line : {read_file(tmp / "hypo.jsonl")}) EXPECT_NE(line.find(R"("premise":"")"), std::string::npos);

  r = icq("hypo-report " + shq(dir()) + " --full " + preds("gold") + " --hypo " + preds("gold") + " -o " +
          shq(tmp / "rep"));
  ASSERT_EQ(r.status, 0) << r.output;
  const auto doc = json::parse(read_file(tmp / "rep" / "hypo.json"));
  EXPECT_EQ(doc["rows"][0]["full_minus_hypo"], 0.0);

  auto text = read_file(dir() / "predictions" / "gold.jsonl");
  write_file_atomic(tmp / "short.jsonl", text.substr(0, text.find('\n') + 1));
  r = icq("hypo-report " + shq(dir()) + " --full " + preds("gold") + " --hypo " + shq(tmp / "short.jsonl") +
          " -o " + shq(tmp / "rep"));
  EXPECT_EQ(r.status, 2) << r.output;
}

TEST(Cli, HypoReportFromTable) {
  TempDir tmp;
  const auto table = std::filesystem::path(ICQ_TEST_DATA_DIR) / "table2.json";
  const auto r = icq("hypo-report --table " + shq(table) + " -o " + shq(tmp.path()));
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("44.86"), std::string::npos);
  EXPECT_EQ(icq("hypo-report --table " + shq(table) + " somedir").status, 2);
}

TEST(Cli, FixtureRejectsDegenerateSpec) {
  TempDir tmp;
  write_file_atomic(tmp / "spec.json", R"({"labels":["A"]})");
  EXPECT_EQ(icq("fixture --spec " + shq(tmp / "spec.json") + " -o " + shq(tmp / "x")).status, 2);
  write_file_atomic(tmp / "bad.json", "{");
  EXPECT_EQ(icq("fixture --spec " + shq(tmp / "bad.json") + " -o " + shq(tmp / "x")).status, 2);
}

/// `icq serve` as a child process with output captured to a file.
class ServeProcess {
 public:
  ServeProcess(const std::filesystem::path& log, const std::vector<std::string>& args) : log_(log) {
    pid_ = fork();
    if (pid_ == 0) {
      const int fd = open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
      dup2(fd, 1);
      dup2(fd, 2);
      std::vector<char*> argv{const_cast<char*>(kCli.c_str()), const_cast<char*>("serve")};
      for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
      argv.push_back(nullptr);
      execv(kCli.c_str(), argv.data());
      _exit(127);
    }
  }

  ~ServeProcess() {
    if (pid_ > 0 && !reaped_) {
      kill(pid_, SIGKILL);
      waitpid(pid_, nullptr, 0);
    }
  }

  /// Port from the "listening on" line, or -1 if the process exited first.
  int wait_for_port() {
    const std::regex re(R"(listening on http://[^:]+:(\d+))");
    for (int i = 0; i < 500; ++i) {
      std::smatch m;
      const auto text = std::filesystem::exists(log_) ? read_file(log_) : std::string();
      if (std::regex_search(text, m, re)) return std::stoi(m[1]);
      if (exited()) return -1;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    return -1;
  }

  int terminate_and_wait() {
    kill(pid_, SIGTERM);
    return wait();
  }

  int wait() {
    if (!reaped_) {
      waitpid(pid_, &status_, 0);
      reaped_ = true;
    }
    return WIFEXITED(status_) ? WEXITSTATUS(status_) : -1;
  }

  std::string output() const { return read_file(log_); }

 private:
  bool exited() {
    if (reaped_) return true;
    if (waitpid(pid_, &status_, WNOHANG) == pid_) reaped_ = true;
    return reaped_;
  }

  std::filesystem::path log_;
  pid_t pid_ = -1;
  int status_ = 0;
  bool reaped_ = false;
};

TEST(CliServe, HealthPortConflictAndGracefulShutdown) {
  TempDir tmp;
  ServeProcess server(tmp / "serve.log", {"--store", (tmp / "store").string(), "--bind", "127.0.0.1:0"});
  const int port = server.wait_for_port();
  ASSERT_GT(port, 0) << server.output();

  httplib::Client client("127.0.0.1", port);
  auto r = client.Get("/api/health");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);

  ServeProcess second(tmp / "second.log",
                      {"--store", (tmp / "store2").string(), "--bind", "127.0.0.1:" + std::to_string(port)});
  EXPECT_EQ(second.wait(), 2) << second.output();

  EXPECT_EQ(server.terminate_and_wait(), 0) << server.output();
  EXPECT_NE(server.output().find("shut down"), std::string::npos);
  EXPECT_NO_THROW(json::parse(read_file(tmp / "store" / "index.json")));
}

TEST(CliServe, EnvironmentSuppliesDefaults) {
  TempDir tmp;
  setenv("ICQ_STORE_DIR", (tmp / "envstore").c_str(), 1);
  setenv("ICQ_BIND_ADDR", "127.0.0.1:0", 1);
  ServeProcess server(tmp / "serve.log", {});
  unsetenv("ICQ_STORE_DIR");
  unsetenv("ICQ_BIND_ADDR");
  ASSERT_GT(server.wait_for_port(), 0) << server.output();
  EXPECT_NE(server.output().find("envstore"), std::string::npos);
  EXPECT_EQ(server.terminate_and_wait(), 0);
}

}  // namespace
}  // namespace icq
