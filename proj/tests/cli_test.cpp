/*
 * Copyright 2026 The keen2act Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "cli.hpp"

#include <gtest/gtest.h>
#include <keen2act/recommend.hpp>
#include <keen2act/snapshot.hpp>

#include <chrono>
#include <cstdlib>
#include <limits>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace keen2act::cli {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("keen2act_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    unsetenv("KEEN2ACT_CONFIG");
    unsetenv("KEEN2ACT_SEED");
  }
  void TearDown() override {
    unsetenv("KEEN2ACT_CONFIG");
    unsetenv("KEEN2ACT_SEED");
    fs::remove_all(dir_);
  }

  // Small corpus plus a short config; returns the corpus directory.
  fs::path corpus() {
    const auto c = dir_ / "corpus";
    const auto r = run({"synth", "--out", c.string(), "--users", "30", "--items", "40",
                        "--seed", "3"});
    EXPECT_EQ(r.code, 0) << r.err;
    spit(dir_ / "fast.cfg", "epochs = 3\nthreshold_epochs = 2\nk = 4\n");
    return c;
  }

  Outcome train_into(const fs::path& out, const std::string& cfg = "") {
    const auto c = dir_ / "corpus";
    return run({"train", "--data", (c / "interactions.tsv").string(), "--tags",
                (c / "tags.tsv").string(), "--config",
                cfg.empty() ? (dir_ / "fast.cfg").string() : cfg, "--out",
                out.string()});
  }

  fs::path dir_;
};

TEST_F(CliTest, HelpAndVersion) {
  EXPECT_EQ(run({"--help"}).code, kExitOk);
  const auto v = run({"--version"});
  EXPECT_EQ(v.code, kExitOk);
  EXPECT_NE(v.out.find("keen2act"), std::string::npos);
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
}

TEST_F(CliTest, EmptyInputIsUsageError) {
  spit(dir_ / "empty.tsv", "");
  const auto r = run({"ingest", "--input", (dir_ / "empty.tsv").string(),
                      "--activities", "fork,watch"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("empty dataset"), std::string::npos);
}

TEST_F(CliTest, IngestReportsDuplicates) {
  spit(dir_ / "log.tsv",
       "u1\tr1\tfork\t5\nu1\tr1\tfork\t3\nu2\tr1\twatch\t1\nu2\tr2\tfork\t2\nu1\tr1\tfork\t9\n");
  const auto out = dir_ / "clean";
  const auto r = run({"ingest", "--input", (dir_ / "log.tsv").string(), "--activities",
                      "fork,watch", "--out", out.string(), "--split-seed", "1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("note: removed 2 duplicate rows"), std::string::npos);
  EXPECT_NE(r.out.find("act_triples\t3"), std::string::npos);
  EXPECT_EQ(count_lines(slurp(out / "interactions.tsv")), 3u);
  EXPECT_EQ(slurp(out / "activities.txt"), "fork\nwatch\n");
  EXPECT_TRUE(fs::exists(out / "split" / "train.tsv"));
  EXPECT_TRUE(fs::exists(out / "split" / "test.tsv"));
}

TEST_F(CliTest, UndeclaredActivityIsUsageError) {
  spit(dir_ / "log.tsv", "u1\tr1\tstar\n");
  const auto r = run({"ingest", "--input", (dir_ / "log.tsv").string(), "--activities",
                      "fork"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("line 1"), std::string::npos);
}

TEST_F(CliTest, ConfigHandling) {
  corpus();
  spit(dir_ / "bad.cfg", "epochs = 2\nlearning_rate = 1\n");
  const auto bad = train_into(dir_ / "m", (dir_ / "bad.cfg").string());
  EXPECT_EQ(bad.code, kExitUsage);
  EXPECT_NE(bad.err.find("learning_rate"), std::string::npos);

  const auto ok = train_into(dir_ / "m");
  ASSERT_EQ(ok.code, kExitOk) << ok.err;
  EXPECT_NE(ok.err.find("config key 'lambda_keen' not set, using default"),
            std::string::npos);
}

TEST_F(CliTest, TrainingIsReproducible) {
  corpus();
  ASSERT_EQ(train_into(dir_ / "a").code, kExitOk);
  ASSERT_EQ(train_into(dir_ / "b").code, kExitOk);
  EXPECT_EQ(slurp(dir_ / "a" / "model.txt"), slurp(dir_ / "b" / "model.txt"));
  EXPECT_EQ(slurp(dir_ / "a" / "report.tsv"), slurp(dir_ / "b" / "report.tsv"));
  EXPECT_FALSE(slurp(dir_ / "a" / "report.tsv").empty());
}

TEST_F(CliTest, EnvironmentOverrides) {
  corpus();
  setenv("KEEN2ACT_CONFIG", (dir_ / "fast.cfg").string().c_str(), 1);
  setenv("KEEN2ACT_SEED", "77", 1);
  const auto c = dir_ / "corpus";
  const auto r = run({"train", "--data", (c / "interactions.tsv").string(), "--out",
                      (dir_ / "env").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto manifest = nlohmann::json::parse(slurp(dir_ / "env" / "manifest.json"));
  EXPECT_EQ(manifest["seed"], 77);
  EXPECT_EQ(manifest["config"]["epochs"], "3");
  setenv("KEEN2ACT_SEED", "seventy", 1);
  EXPECT_EQ(run({"train", "--data", (c / "interactions.tsv").string(), "--out",
                 (dir_ / "env2").string()}).code,
            kExitUsage);
}

TEST_F(CliTest, ManifestDigestsAndStaleness) {
  corpus();
  const auto m = dir_ / "m";
  ASSERT_EQ(train_into(m).code, kExitOk);
  const auto manifest = nlohmann::json::parse(slurp(m / "manifest.json"));
  const auto data = (dir_ / "corpus" / "interactions.tsv").string();
  EXPECT_EQ(manifest["inputs"][0]["path"], data);
  EXPECT_EQ(manifest["inputs"][0]["sha256"], file_sha256(data));
  EXPECT_EQ(file_sha256(data).size(), 64u);

  auto fresh = run({"recommend", "--model", m.string(), "--all", "--k", "3"});
  ASSERT_EQ(fresh.code, kExitOk) << fresh.err;
  EXPECT_EQ(fresh.err.find("stale"), std::string::npos);

  const auto text = slurp(data);
  std::ofstream(data, std::ios::app) << text.substr(0, text.find('\n') + 1);
  const auto stale = run({"recommend", "--model", m.string(), "--all", "--k", "3"});
  EXPECT_EQ(stale.code, kExitOk);
  EXPECT_NE(stale.err.find("stale"), std::string::npos);
}

TEST_F(CliTest, FileDigestKnownValue) {
  spit(dir_ / "abc.txt", "abc");
  EXPECT_EQ(file_sha256((dir_ / "abc.txt").string()),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_F(CliTest, RecommendCutoffAndUsers) {
  corpus();
  const auto m = dir_ / "m";
  ASSERT_EQ(train_into(m).code, kExitOk);
  const auto first_user = slurp(dir_ / "corpus" / "interactions.tsv").substr(
    0, slurp(dir_ / "corpus" / "interactions.tsv").find('\t'));

  const auto r = run({"recommend", "--model", (m / "model.txt").string(), "--users",
                      first_user, "--k", "5"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_LE(count_lines(r.out), 5u);
  std::istringstream lines(r.out);
  std::string line;
  std::size_t rank = 0;
  while (std::getline(lines, line)) {
    EXPECT_EQ(line.rfind(first_user + "\t", 0), 0u);
    EXPECT_EQ(line.substr(line.rfind('\t') + 1), std::to_string(++rank));
  }

  const auto mixed = run({"recommend", "--model", m.string(), "--users",
                          first_user + ",ghost", "--k", "2"});
  EXPECT_EQ(mixed.code, kExitOk);
  EXPECT_NE(mixed.err.find("unknown user 'ghost'"), std::string::npos);

  const auto none = run({"recommend", "--model", m.string(), "--users", "ghost"});
  EXPECT_EQ(none.code, kExitUsage);

  EXPECT_EQ(run({"recommend", "--model", m.string(), "--users", first_user, "--all"}).code,
            kExitUsage);
  const auto to_file = run({"recommend", "--model", m.string(), "--all", "--out",
                            (dir_ / "recs.tsv").string()});
  EXPECT_EQ(to_file.code, kExitOk);
  EXPECT_TRUE(to_file.out.empty());
}

TEST_F(CliTest, NumericalFailureExitCode) {
  corpus();
  spit(dir_ / "blowup.cfg", "epochs = 2\nk = 4\ninit_scale = 1e200\n");
  const auto r = train_into(dir_ / "m", (dir_ / "blowup.cfg").string());
  EXPECT_EQ(r.code, kExitNumerical);
  EXPECT_NE(r.err.find("epoch 1"), std::string::npos);
}

TEST_F(CliTest, EvaluateWritesRecords) {
  corpus();
  const auto c = dir_ / "corpus";
  const auto out = dir_ / "eval";
  const auto r = run({"evaluate", "--data", (c / "interactions.tsv").string(), "--tags",
                      (c / "tags.tsv").string(), "--config", (dir_ / "fast.cfg").string(),
                      "--splits", "2", "--variants", "fm_warp,keen2act", "--name", "tiny",
                      "--out", out.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("MAP@10"), std::string::npos);
  const auto records = slurp(out / "eval_records.tsv");
  // 2 variants x 5 metrics x (2 splits + mean)
  EXPECT_EQ(count_lines(records), 30u);
  EXPECT_NE(records.find("tiny\tkeen2act\tMAP@10\tmean\t"), std::string::npos);
  EXPECT_EQ(records.find("fm_bpr"), std::string::npos);

  EXPECT_EQ(run({"evaluate", "--synthetic", "--variants", "svd"}).code, kExitUsage);
  EXPECT_EQ(run({"evaluate"}).code, kExitUsage);
}

const fs::path kSample = KEEN2ACT_SAMPLE_DIR;

TEST_F(CliTest, SampleDatasetTrainsQuickly) {
  const auto m = dir_ / "m";
  const auto start = std::chrono::steady_clock::now();
  const auto r = run({"train", "--data", (kSample / "interactions.tsv").string(),
                      "--tags", (kSample / "tags.tsv").string(), "--out", m.string()});
  const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_LT(secs.count(), 60.0);
  EXPECT_TRUE(fs::exists(m / "model.txt"));
}

// Every CLI line must be the library's entry at the same rank.
TEST_F(CliTest, SampleRecommendMatchesLibrary) {
  const auto m = dir_ / "m";
  ASSERT_EQ(run({"train", "--data", (kSample / "interactions.tsv").string(), "--tags",
                 (kSample / "tags.tsv").string(), "--out", m.string()})
              .code,
            kExitOk);
  const auto snap = load_model(m / "model.txt");
  const auto r = run({"recommend", "--model", m.string(), "--all", "--k", "10"});
  ASSERT_EQ(r.code, kExitOk) << r.err;

  std::vector<std::vector<std::string>> rows;
  std::istringstream lines(r.out);
  std::string line;
  while (std::getline(lines, line)) {
    std::vector<std::string> cols;
    std::istringstream fields(line);
    for (std::string f; std::getline(fields, f, '\t');) cols.push_back(f);
    ASSERT_EQ(cols.size(), 6u) << line;
    rows.push_back(cols);
  }

  std::size_t at = 0, nonempty = 0;
  for (UserId u = 0; u < snap.catalog.num_users(); ++u) {
    const auto list = recommend(snap.model, u, 10);
    nonempty += list.entries.empty() ? 0 : 1;
    for (std::size_t i = 0; i < list.entries.size(); ++i, ++at) {
      ASSERT_LT(at, rows.size());
      const auto& e = list.entries[i];
      EXPECT_EQ(rows[at][0], snap.catalog.users.raw(u));
      EXPECT_EQ(rows[at][1], snap.catalog.items.raw(e.item));
      EXPECT_EQ(rows[at][2], snap.catalog.activities.raw(e.activity));
      EXPECT_EQ(std::stod(rows[at][3]), e.keen_score);
      EXPECT_EQ(std::stod(rows[at][4]), e.act_score);
      EXPECT_EQ(rows[at][5], std::to_string(i + 1));
    }
  }
  EXPECT_EQ(at, rows.size());
  EXPECT_GT(nonempty, 0u);
}

TEST_F(CliTest, UserBelowEveryThreshold) {
  const auto m = dir_ / "m";
  ASSERT_EQ(run({"train", "--data", (kSample / "interactions.tsv").string(), "--out",
                 m.string()})
              .code,
            kExitOk);
  auto snap = load_model(m / "model.txt");
  auto& t = snap.model.thresholds;
  std::fill(t.item_thresholds.begin(), t.item_thresholds.end(),
            std::numeric_limits<double>::max());
  t.global_item_fallback = std::numeric_limits<double>::max();
  save_model(dir_ / "closed.txt", snap.catalog, snap.model);

  const auto user = snap.catalog.users.raw(0);
  const auto r = run({"recommend", "--model", (dir_ / "closed.txt").string(), "--users",
                      user});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_TRUE(r.out.empty());
  EXPECT_NE(r.err.find("no item passed the thresholds for user '" + user + "'"),
            std::string::npos);
}

}  // namespace
}  // namespace keen2act::cli
