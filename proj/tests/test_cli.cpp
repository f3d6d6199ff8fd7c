// Runs the command-line tool end to end and checks its CSV artifacts.

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Result {
  int status;
  std::string out;
};

Result run(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / ("swarm_cli_" + std::to_string(::getpid()) + ".log");
  const std::string cmd = std::string(SWARM_GP_ET_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream buf;
  buf << in.rdbuf();
  fs::remove(log);
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, buf.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("swarm_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

const std::string kShort = " --set horizon=0.3 --runs 2";

}  // namespace

TEST(Cli, SummaryIsByteIdenticalAcrossInvocations) {
  const fs::path a = fresh_dir("a"), b = fresh_dir("b");
  const auto ra = run("run --modes none,distributed --out " + a.string() + kShort);
  const auto rb = run("run --modes none,distributed --out " + b.string() + kShort + " --jobs 2");
  ASSERT_EQ(ra.status, 0) << ra.out;
  ASSERT_EQ(rb.status, 0) << rb.out;
  EXPECT_EQ(slurp(a / "summary.csv"), slurp(b / "summary.csv"));
  EXPECT_EQ(slurp(a / "timeseries_distributed_1.csv"), slurp(b / "timeseries_distributed_1.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Cli, CsvSchemas) {
  const fs::path d = fresh_dir("schema");
  const auto r = run("run --modes none,centralized,distributed --out " + d.string() + kShort);
  ASSERT_EQ(r.status, 0) << r.out;

  const auto summary = lines(slurp(d / "summary.csv"));
  ASSERT_EQ(summary.size(), 7u);
  EXPECT_EQ(summary[0],
            "mode,run,seed,max_err,triggers_agent_1,triggers_agent_2,triggers_agent_3,"
            "triggers_agent_4,dataset_sizes,aborted_flag");
  EXPECT_EQ(summary[1].rfind("none,0,1,", 0), 0u);
  EXPECT_EQ(summary[2].rfind("none,1,2,", 0), 0u);
  EXPECT_NE(summary[1].find(",0,0,0,0,200;200;200;200,0"), std::string::npos);
  EXPECT_EQ(summary[5].rfind("distributed,0,1,", 0), 0u);

  EXPECT_EQ(lines(slurp(d / "diagnostics.csv")), std::vector<std::string>{"mode,run,seed,kind,detail"});

  // 0.3 s at dt = 1e-3 with the default stride 10: 31 records.
  const auto ts = lines(slurp(d / "timeseries_centralized_0.csv"));
  ASSERT_EQ(ts.size(), 32u);
  EXPECT_EQ(ts[0], "t,err_norm,V,x_1_1,x_1_2,x_2_1,x_2_2,x_3_1,x_3_2,x_4_1,x_4_2");
  EXPECT_EQ(std::count(ts[5].begin(), ts[5].end(), ','), 10);

  const auto tr = lines(slurp(d / "triggers_distributed_1.csv"));
  ASSERT_GE(tr.size(), 2u);
  EXPECT_EQ(tr[0], "agent,time");
  EXPECT_EQ(lines(slurp(d / "triggers_none_0.csv")), std::vector<std::string>{"agent,time"});
  fs::remove_all(d);
}

TEST(Cli, SkipsTimeSeriesOnRequest) {
  const fs::path d = fresh_dir("nots");
  const auto r = run("run --modes none --no-timeseries --out " + d.string() + kShort);
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_FALSE(fs::exists(d / "timeseries_none_0.csv"));
  EXPECT_TRUE(fs::exists(d / "triggers_none_0.csv"));
  fs::remove_all(d);
}

TEST(Cli, OutputDirectoryFromEnvironment) {
  const fs::path d = fresh_dir("env");
  const std::string cmd = "SWARM_GP_ET_OUT=" + d.string() + " " + SWARM_GP_ET_CLI +
                          " run --modes none --no-timeseries" + kShort + " > /dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(d / "summary.csv"));
  fs::remove_all(d);
}

TEST(Cli, Errors) {
  const auto empty = run("run --modes '' --out /tmp/unused_swarm_cli");
  EXPECT_NE(empty.status, 0);
  EXPECT_NE(empty.out.find("--modes"), std::string::npos);

  const auto gain = run("synth --set c=1e-6");
  EXPECT_EQ(gain.status, 2);
  EXPECT_NE(gain.out.find("Q_z not positive definite (lambda_min = -"), std::string::npos);

  const auto edges = run("synth --set 'edges=[[1, 2, 3, 4]]'");
  EXPECT_EQ(edges.status, 2);
  EXPECT_NE(edges.out.find("edges"), std::string::npos);

  const auto mode = run("run --modes sometimes --out /tmp/unused_swarm_cli");
  EXPECT_EQ(mode.status, 2);
  EXPECT_NE(mode.out.find("sometimes"), std::string::npos);
  fs::remove_all("/tmp/unused_swarm_cli");

  EXPECT_NE(run("").status, 0);
}

TEST(Cli, ReportsAndPreset) {
  const auto synth = run("synth");
  ASSERT_EQ(synth.status, 0) << synth.out;
  EXPECT_NE(synth.out.find("lambda_min(Q_z)"), std::string::npos);
  EXPECT_NE(synth.out.find("theta_bar_min"), std::string::npos);

  const auto zeno = run("zeno --set trigger.epsilon_strategy=dwell");
  ASSERT_EQ(zeno.status, 0) << zeno.out;
  EXPECT_NE(zeno.out.find("dwell_bound"), std::string::npos);
  EXPECT_NE(zeno.out.find("0.01"), std::string::npos);

  const auto preset = run("preset-paper");
  ASSERT_EQ(preset.status, 0);
  EXPECT_EQ(preset.out, slurp(fs::path(SWARM_GP_ET_SOURCE_DIR) / "configs" / "paper.cfg"));

  const fs::path cfg = fs::temp_directory_path() / "swarm_cli_single.cfg";
  std::ofstream(cfg) << "agents = 1\norder = 2\nedges = []\nc = 2\nlambda = [1, 1]\n"
                        "[domain]\nlower = [-2, -2]\nupper = [2, 2]\n"
                        "[gp]\nsignal_std = 0.5\nlengthscale = 0.2\nnoise_std = 0.01\n";
  EXPECT_EQ(run("synth --config " + cfg.string()).status, 0);
  fs::remove(cfg);
}
