// Copyright 2026 The mtr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mtr/cli.hpp"

namespace mtr::cli {
namespace {

namespace fs = std::filesystem;

const fs::path kSmoke = fs::path(MTR_SOURCE_DIR) / "configs" / "smoke.json";

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mtr");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mtr_cli_" + name);
  fs::remove_all(p);
  return p;
}

fs::path write_config(const std::string& name, const std::string& content) {
  const fs::path p = fs::temp_directory_path() / ("mtr_cli_cfg_" + name + ".json");
  std::ofstream(p) << content;
  return p;
}

std::string smoke_with(const std::string& key, const std::string& value) {
  auto j = nlohmann::json::parse(slurp(kSmoke));
  j["train"][key] = nlohmann::json::parse(value);
  return j.dump();
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
  EXPECT_EQ(cli({"train", "--bogus"}).code, kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(cli({"train", "--config", kSmoke.string(), "--sampling", "greedy"}).code, kExitUsage);
  EXPECT_EQ(cli({"train", "--config", kSmoke.string(), "--selection", "top"}).code, kExitUsage);
  EXPECT_EQ(cli({"train", "--config", kSmoke.string(), "--ablation", "half"}).code, kExitUsage);
  EXPECT_EQ(cli({"train", "--config", kSmoke.string(), "--precision", "f16"}).code, kExitUsage);
  EXPECT_EQ(cli({"train", "--config", "/nonexistent/run.json"}).code, kExitUsage);
}

TEST(Cli, ConfigErrorsAreEnumerated) {
  const Result r = cli({"train", "--config",
                        write_config("bad", R"({"train": {"tau": -1, "epochs": 0}})").string(),
                        "--out", fresh_dir("bad").string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("tau"), std::string::npos);
  EXPECT_NE(r.err.find("epochs"), std::string::npos);
  EXPECT_EQ(cli({"train", "--config", write_config("typo", R"({"trian": {}})").string()}).code,
            kExitUsage);
  EXPECT_EQ(cli({"train", "--config",
                 write_config("eps", smoke_with("sampler", R"({"epsilon": 0.6})")).string(),
                 "--out", fresh_dir("eps").string()})
                .code,
            kExitUsage);
}

TEST(Cli, GenerateIsDeterministic) {
  const fs::path a = fresh_dir("gen_a"), b = fresh_dir("gen_b");
  ASSERT_EQ(cli({"generate", "--config", kSmoke.string(), "--out", a.string()}).code, kExitOk);
  ASSERT_EQ(cli({"generate", "--config", kSmoke.string(), "--out", b.string()}).code, kExitOk);
  EXPECT_FALSE(slurp(a / "benchmark.jsonl").empty());
  EXPECT_EQ(slurp(a / "benchmark.jsonl"), slurp(b / "benchmark.jsonl"));
  EXPECT_EQ(slurp(a / "spec.json"), slurp(b / "spec.json"));
  EXPECT_EQ(cli({"generate", "--spec", "/nonexistent/spec.json", "--out", a.string()}).code,
            kExitUsage);
}

TEST(Cli, TrainWritesOutputsAndRerunIsBitIdentical) {
  const fs::path a = fresh_dir("train_a"), b = fresh_dir("train_b");
  for (const auto& d : {a, b})
    ASSERT_EQ(cli({"train", "--config", kSmoke.string(), "--seed", "3", "--out", d.string()}).code,
              kExitOk);
  for (const char* f : {"metrics.json", "metrics.txt", "trace.csv", "runlog.jsonl",
                        "checkpoint.json"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  auto ra = nlohmann::json::parse(slurp(a / "config.resolved.json"));
  auto rb = nlohmann::json::parse(slurp(b / "config.resolved.json"));
  ra.erase("output_dir");
  rb.erase("output_dir");
  EXPECT_EQ(ra, rb);
  const auto m = nlohmann::json::parse(slurp(a / "metrics.json"));
  EXPECT_EQ(m.at("seed"), 3);
  EXPECT_EQ(m.at("split"), "test");
}

TEST(Cli, SamplingStrategiesShareTraceSchema) {
  const fs::path r = fresh_dir("rand"), g = fresh_dir("ggas");
  ASSERT_EQ(cli({"train", "--config", kSmoke.string(), "--sampling", "random", "--out",
                 r.string()}).code, kExitOk);
  ASSERT_EQ(cli({"train", "--config", kSmoke.string(), "--sampling", "ggas", "--out",
                 g.string()}).code, kExitOk);
  const std::string tr = slurp(r / "trace.csv"), tg = slurp(g / "trace.csv");
  EXPECT_NE(tr, tg);
  auto header = [](const std::string& s) {
    std::istringstream in(s);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    return line;
  };
  EXPECT_EQ(header(tr), header(tg));
  EXPECT_EQ(header(tr), "step,epoch,task,d,G0,G1,P0,P1");
}

TEST(Cli, EvalIsRepeatable) {
  const fs::path t = fresh_dir("eval_train");
  ASSERT_EQ(cli({"train", "--config", kSmoke.string(), "--out", t.string()}).code, kExitOk);
  const fs::path e1 = fresh_dir("eval_1"), e2 = fresh_dir("eval_2");
  const std::string ck = (t / "checkpoint.json").string();
  ASSERT_EQ(cli({"eval", "--checkpoint", ck, "--split", "val", "--out", e1.string()}).code,
            kExitOk);
  ASSERT_EQ(cli({"eval", "--checkpoint", ck, "--split", "val", "--out", e2.string()}).code,
            kExitOk);
  EXPECT_EQ(slurp(e1 / "metrics.val.json"), slurp(e2 / "metrics.val.json"));
  // Test-split eval of the final checkpoint reproduces the training metrics.
  ASSERT_EQ(cli({"eval", "--checkpoint", ck, "--out", e1.string()}).code, kExitOk);
  EXPECT_EQ(nlohmann::json::parse(slurp(e1 / "metrics.test.json")).at("datasets"),
            nlohmann::json::parse(slurp(t / "metrics.json")).at("datasets"));
  EXPECT_EQ(cli({"eval", "--checkpoint", "/nonexistent/checkpoint.json", "--out", e1.string()})
                .code,
            kExitRuntime);
}

TEST(Cli, ResumeMatchesUnbrokenRun) {
  const fs::path full = fresh_dir("full"), part = fresh_dir("part");
  ASSERT_EQ(cli({"train", "--config", kSmoke.string(), "--out", full.string()}).code, kExitOk);
  ASSERT_EQ(cli({"train", "--config", kSmoke.string(), "--out", part.string(), "--stop-after",
                 "17"}).code, kExitOk);
  ASSERT_EQ(cli({"train", "--config", kSmoke.string(), "--out", part.string(), "--resume",
                 (part / "checkpoint.json").string()}).code, kExitOk);
  for (const char* f : {"metrics.json", "trace.csv", "runlog.jsonl"})
    EXPECT_EQ(slurp(full / f), slurp(part / f)) << f;
}

TEST(Cli, GradcheckPassesAndDetectsCorruptedAdjoint) {
  const Result ok = cli({"gradcheck", "--out", fresh_dir("gc").string()});
  EXPECT_EQ(ok.code, kExitOk) << ok.err;
  const Result bad =
      cli({"gradcheck", "--out", fresh_dir("gc_bad").string(), "--corrupt-adjoint", "tanh"});
  EXPECT_EQ(bad.code, kExitRuntime);
  EXPECT_NE(bad.err.find("tanh"), std::string::npos);
}

TEST(Cli, AblateProducesOneRowPerVariantAndSeed) {
  const fs::path a = fresh_dir("abl_a"), b = fresh_dir("abl_b");
  ASSERT_EQ(cli({"ablate", "--config", kSmoke.string(), "--out", a.string()}).code, kExitOk);
  ASSERT_EQ(cli({"ablate", "--config", kSmoke.string(), "--out", b.string(), "--jobs", "2"}).code,
            kExitOk);
  const std::string csv = slurp(a / "ablation.csv");
  EXPECT_EQ(csv, slurp(b / "ablation.csv"));
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("# config_hash=", 0), 0u);
  std::getline(in, line);
  EXPECT_EQ(line, "variant,seed,mR_identity,mR_rotation,mean_mR,lambda_identity,lambda_rotation");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, ablation_variants().size() * 2);
  EXPECT_TRUE(fs::exists(a / "ablation.txt"));

  const Result rep = cli({"report", (a / "ablation.csv").string()});
  EXPECT_EQ(rep.code, kExitOk);
  EXPECT_NE(rep.out.find("ours"), std::string::npos);
}

TEST(Cli, ReportRejectsMissingInput) {
  EXPECT_NE(cli({"report", "/nonexistent/metrics.json"}).code, kExitOk);
}

TEST(Cli, EnvironmentSetsDefaultOutputRoot) {
  const fs::path root = fresh_dir("env");
  ::setenv(kOutRootEnv, root.c_str(), 1);
  const Result r = cli({"generate", "--config", kSmoke.string()});
  ::unsetenv(kOutRootEnv);
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_TRUE(fs::exists(root / "smoke" / "generate" / "benchmark.jsonl"));
}

}  // namespace
}  // namespace mtr::cli
