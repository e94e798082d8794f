// SPDX-FileCopyrightText: © 2026 netagg authors
//
// SPDX-License-Identifier: Apache-2.0

// End-to-end checks of the netagg binary.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string output;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::random_device rd;
    dir_ = fs::temp_directory_path() / ("netagg_cli_" + std::to_string(rd()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Outcome run(const std::string& args) {
    const fs::path log = dir_ / "stdout.txt";
    const std::string cmd = std::string(NETAGG_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    Outcome o;
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    o.output = slurp(log);
    return o;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path write_config(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  static std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
  }

  std::string out(const std::string& sub) const { return (dir_ / sub).string(); }

  fs::path dir_;
};

const char* kSmallTrain =
    "synth_samples = 128\nsynth_features = 256\nbatch = 32\nmicro = 8\nepochs = 2\nworkers = 2\ngamma_raw = 256\n";

TEST_F(CliTest, HelpAndUsageErrors) {
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("nosuch").code, 2);
  EXPECT_EQ(run("train --nosuch-flag 1").code, 2);
}

TEST_F(CliTest, TrainWritesArtifactsDeterministically) {
  const auto cfg = write_config("t.cfg", kSmallTrain);
  ASSERT_EQ(run("train --config " + cfg.string() + " --out " + out("a")).code, 0);
  ASSERT_EQ(run("train --config " + cfg.string() + " --out " + out("b")).code, 0);
  const auto model = slurp(dir_ / "a" / "model.bin");
  EXPECT_EQ(model.size(), 256u * 4);
  EXPECT_EQ(model, slurp(dir_ / "b" / "model.bin"));
  EXPECT_EQ(slurp(dir_ / "a" / "metrics.csv"), slurp(dir_ / "b" / "metrics.csv"));

  const auto rows = lines(slurp(dir_ / "a" / "metrics.csv"));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], "epoch,loss,virtual_time_ns,pkts,bytes,retx,allreduce_p50_ns,allreduce_p99_ns");

  const auto doc = nlohmann::json::parse(slurp(dir_ / "a" / "run.json"));
  EXPECT_EQ(doc["subcommand"], "train");
  EXPECT_EQ(doc["config"]["workers"], "2");
  EXPECT_EQ(doc["config"]["mode"], "mp");
  EXPECT_TRUE(doc.contains("version"));
  EXPECT_TRUE(doc.contains("compiler"));
}

TEST_F(CliTest, DataAndModelParallelAgreeOnModel) {
  const auto cfg = write_config("t.cfg", kSmallTrain);
  ASSERT_EQ(run("train --mode mp --config " + cfg.string() + " --out " + out("mp")).code, 0);
  ASSERT_EQ(run("train --mode dp --config " + cfg.string() + " --out " + out("dp")).code, 0);
  EXPECT_EQ(slurp(dir_ / "mp" / "model.bin"), slurp(dir_ / "dp" / "model.bin"));
  const auto mp = nlohmann::json::parse(slurp(dir_ / "mp" / "run.json"));
  const auto dp = nlohmann::json::parse(slurp(dir_ / "dp" / "run.json"));
  EXPECT_GT(dp["results"]["bytes_sent"].get<uint64_t>(), mp["results"]["bytes_sent"].get<uint64_t>());
}

TEST_F(CliTest, RunJsonReproducesTheRun) {
  const auto cfg = write_config("t.cfg", std::string(kSmallTrain) + "drop_prob = 0.05\nseed = 5\n");
  ASSERT_EQ(run("train --config " + cfg.string() + " --out " + out("a")).code, 0);
  ASSERT_EQ(run("train --config " + (dir_ / "a" / "run.json").string() + " --out " + out("b")).code, 0);
  EXPECT_EQ(slurp(dir_ / "a" / "model.bin"), slurp(dir_ / "b" / "model.bin"));
  EXPECT_EQ(slurp(dir_ / "a" / "metrics.csv"), slurp(dir_ / "b" / "metrics.csv"));
}

TEST_F(CliTest, TrainOnLibsvmFile) {
  const fs::path data = dir_ / "tiny.svm";
  {
    std::ofstream os(data);
    for (int i = 0; i < 64; ++i) os << (i % 2) << " 1:" << (i % 2 ? 0.9 : 0.1) << " 3:" << (i % 7) * 0.1 << '\n';
  }
  const auto r = run("train --dataset " + data.string() + " --out " + out("svm") +
                     " --epochs 3 --config " + write_config("b.cfg", "batch = 16\n").string());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(slurp(dir_ / "svm" / "model.bin").size(), 3u * 4);
}

TEST_F(CliTest, MissingDatasetAndBadConfigExitTwo) {
  auto r = run("train --dataset /nonexistent/data.svm --out " + out("x"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("dataset not found"), std::string::npos) << r.output;

  const auto cfg = write_config("bad.cfg", "workres = 2\n");
  r = run("train --config " + cfg.string() + " --out " + out("y"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("workres"), std::string::npos);

  const auto odd = write_config("odd.cfg", "batch = 48\n");
  EXPECT_EQ(run("train --config " + odd.string() + " --out " + out("z")).code, 2);
}

TEST_F(CliTest, FuzzPassesAndWritesCsv) {
  const auto r = run("fuzz --seeds 3 --rounds 300 --out " + out("f"));
  ASSERT_EQ(r.code, 0) << r.output;
  const auto rows = lines(slurp(dir_ / "f" / "fuzz.csv"));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0],
            "seed,pass,rounds_completed,retransmissions,drops,dups,fa_mismatches,duplicate_deliveries,"
            "mixed_round_events,live,end_time_ns");
  EXPECT_EQ(rows[1].rfind("1,1,300,", 0), 0u);
}

TEST_F(CliTest, LosslessFuzzHasNoRetransmissions) {
  const auto r = run("fuzz --seeds 2 --rounds 200 --drop 0 --dup 0 --out " + out("f"));
  ASSERT_EQ(r.code, 0) << r.output;
  const auto rows = lines(slurp(dir_ / "f" / "fuzz.csv"));
  ASSERT_EQ(rows.size(), 3u);
  for (size_t i = 1; i < rows.size(); ++i) {
    std::istringstream in(rows[i]);
    std::vector<std::string> cells;
    for (std::string c; std::getline(in, c, ',');) cells.push_back(c);
    EXPECT_EQ(cells[3], "0");
  }
}

TEST_F(CliTest, MutatedSwitchFailsWithTrace) {
  const auto r = run("fuzz --mutate --seeds 2 --out " + out("m"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("FAIL"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "m" / "fuzz_trace_seed1.csv"));
}

TEST_F(CliTest, LatencyReportsInSwitchAndEndhost) {
  const auto r = run("latency --rounds 50 --out " + out("l"));
  ASSERT_EQ(r.code, 0) << r.output;
  const auto rows = lines(slurp(dir_ / "l" / "latency.csv"));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], "topology,rounds,min_ns,p50_ns,p99_ns,max_ns,p50_ratio_to_in_switch");
  EXPECT_EQ(rows[1].rfind("in_switch,50,1100,1100,1100,1100,", 0), 0u);
  EXPECT_EQ(rows[2].rfind("endhost_server,50,4200,4200,4200,4200,", 0), 0u);
}

TEST_F(CliTest, PredictSweep) {
  const auto r = run("predict --F 1..4 --G 1,8 --out " + out("p"));
  ASSERT_EQ(r.code, 0) << r.output;
  const auto rows = lines(slurp(dir_ / "p" / "predict.csv"));
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_EQ(rows[0],
            "F,G,M_feat,B,s,L_RTT,work_cycles,utilization,th_comp_gbps,th_mem_gbps,th_engine_gbps,th_all_gbps");
  for (size_t i = 1; i < rows.size(); ++i) {
    std::istringstream in(rows[i]);
    std::vector<double> v;
    for (std::string c; std::getline(in, c, ',');) v.push_back(std::stod(c));
    ASSERT_EQ(v.size(), 12u);
    EXPECT_LE(v[10], 19.2);
    EXPECT_LE(v[10], v[9]);
    EXPECT_NEAR(v[11], v[10] * v[0] * v[1], 1e-8 * v[11]);
  }
  EXPECT_EQ(run("predict --F 0 --out " + out("q")).code, 2);
  EXPECT_EQ(run("predict --F x --out " + out("q")).code, 2);
}

TEST_F(CliTest, CompareWritesThreeModes) {
  const auto cfg = write_config("c.cfg",
                                "workers = 2\nbatch = 32\nmicro = 8\nfwd_ns_per_sample = 20\nbwd_ns_per_sample = 40\n"
                                "uplink_elems_per_ns = 1\nslots = 64\nS = 128\nD = 256\n");
  const auto r = run("compare --config " + cfg.string() + " --out " + out("c"));
  ASSERT_EQ(r.code, 0) << r.output;
  const auto rows = lines(slurp(dir_ / "c" / "compare.csv"));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], "mode,batch,micro,workers,measured_ns,predicted_ns,rel_error,bytes_per_iteration");
  EXPECT_EQ(rows[1].rfind("dp,", 0), 0u);
  EXPECT_EQ(rows[2].rfind("vanilla_mp,", 0), 0u);
  EXPECT_EQ(rows[3].rfind("pipelined_mp,", 0), 0u);
}

}  // namespace
