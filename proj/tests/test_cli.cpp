#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "phaseret/io.hpp"

using namespace phaseret;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(PHASERET_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (p == nullptr) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string without_timing(const std::string& report) {
  std::istringstream in(report);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.rfind("timing_seconds", 0) != 0) out += line + '\n';
  }
  return out;
}

double metric(const std::string& text, const std::string& name) {
  std::istringstream in(text);
  std::string line;
  const std::string key = "metric " + name + " ";
  while (std::getline(in, line)) {
    if (line.rfind(key, 0) == 0) return parse_double(line.substr(key.size()));
    if (line.rfind(name + " ", 0) == 0) return parse_double(line.substr(name.size() + 1));
  }
  ADD_FAILURE() << "no " << name << " in output";
  return -1;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("phaseret_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenerateTestFunctionInstance) {
  ASSERT_EQ(run("generate --kind paper-h --out " + path("h.txt")).status, 0);
  std::ifstream in(path("h.txt"));
  const auto inst = std::get<ProblemInstance1D>(read_instance(in));
  EXPECT_EQ(inst.grid_len, 399);
  EXPECT_EQ(inst.support.size(), 200);
}

TEST_F(Cli, GenerateIsDeterministic) {
  const auto a = run("generate --kind random-smooth --size 32 --seed 1");
  const auto b = run("generate --kind random-smooth --size 32 --seed 1");
  ASSERT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, run("generate --kind random-smooth --size 32 --seed 2").out);
}

TEST_F(Cli, GenerateOneSided) {
  const auto r = run("generate --kind one-sided --size 16");
  ASSERT_EQ(r.status, 0);
  std::istringstream in(r.out);
  EXPECT_EQ(std::get<ProblemInstance1D>(read_instance(in)).support, (Window{0, 15}));
}

TEST_F(Cli, SolveAndVerifyNoiseless) {
  ASSERT_EQ(run("generate --kind random-uniform --size 12 --seed 3 --out " + path("i.txt") + " --truth-out " +
                path("t.txt"))
                .status,
            0);
  ASSERT_EQ(run("solve " + path("i.txt") + " --truth " + path("t.txt") + " --out " + path("r.txt")).status, 0);
  EXPECT_LE(metric(slurp(path("r.txt")), "spectral_error"), 1e-10);
  const auto v = run("verify " + path("r.txt") + " --truth " + path("t.txt"));
  ASSERT_EQ(v.status, 0);
  EXPECT_LE(metric(v.out, "spectral_error"), 1e-10);
  const auto vi = run("verify " + path("r.txt") + " --truth " + path("t.txt") + " --instance " + path("i.txt"));
  ASSERT_EQ(vi.status, 0);
  EXPECT_LE(metric(vi.out, "field_magnitude_error"), 1e-10);
}

TEST_F(Cli, ReportIsReproducibleApartFromTiming) {
  ASSERT_EQ(run("generate --kind random-smooth --size 24 --seed 9 --out " + path("i.txt")).status, 0);
  const auto a = run("solve " + path("i.txt"));
  const auto b = run("solve " + path("i.txt"));
  ASSERT_EQ(a.status, 0);
  EXPECT_EQ(without_timing(a.out), without_timing(b.out));
  EXPECT_NE(a.out.find("timing_seconds"), std::string::npos);
}

TEST_F(Cli, SelectorsGiveIdenticalBranchLogs) {
  ASSERT_EQ(run("generate --kind random-uniform --size 32 --seed 4 --out " + path("i.txt")).status, 0);
  const auto inc = run("solve " + path("i.txt") + " --selector incremental --format json");
  const auto full = run("solve " + path("i.txt") + " --selector full --format json");
  ASSERT_EQ(inc.status, 0);
  ASSERT_EQ(full.status, 0);
  const auto ji = nlohmann::json::parse(inc.out), jf = nlohmann::json::parse(full.out);
  ASSERT_EQ(ji["branch_log"].size(), jf["branch_log"].size());
  for (std::size_t k = 0; k < ji["branch_log"].size(); ++k) {
    for (const char* key : {"step", "upper", "lower", "choice"}) EXPECT_EQ(ji["branch_log"][k][key], jf["branch_log"][k][key]);
  }
}

TEST_F(Cli, NoisyTestFunctionCompletes) {
  ASSERT_EQ(run("generate --kind paper-h --noise 0.3 --out " + path("n.txt")).status, 0);
  const auto r = run("solve " + path("n.txt") + " --emit-curves " + path("noisy"));
  ASSERT_EQ(r.status, 0);
  EXPECT_GT(metric(r.out, "field_magnitude_error"), 0.0);
  EXPECT_TRUE(fs::exists(path("noisy_field.txt")));
  EXPECT_TRUE(fs::exists(path("noisy_spectrum.txt")));
}

TEST_F(Cli, VerifyTruthAgainstItselfAndRotation) {
  ASSERT_EQ(run("generate --kind random-smooth --size 10 --seed 2 --out " + path("i.txt") + " --truth-out " +
                path("t.txt"))
                .status,
            0);
  const auto same = run("verify " + path("t.txt") + " --truth " + path("t.txt"));
  ASSERT_EQ(same.status, 0);
  for (const char* m : {"spectral_error", "field_magnitude_error", "residual", "gauge"}) EXPECT_EQ(metric(same.out, m), 0.0);

  std::ifstream in(path("t.txt"));
  const auto truth = std::get<CenteredSpectrum>(read_spectrum(in));
  CenteredSpectrum rot(truth.grid_len(), truth.support());
  for (int l = truth.support().lo; l <= truth.support().hi; ++l) rot.set(l, truth[l] * std::polar(1.0, 2.0));
  std::ofstream out(path("rot.json"));
  write_spectrum(out, rot, Format::json);
  out.close();
  const auto r = run("verify " + path("rot.json") + " --truth " + path("t.txt") + " --format json");
  ASSERT_EQ(r.status, 0);
  EXPECT_NEAR(nlohmann::json::parse(r.out)["spectral_error"].get<double>(), 0.0, 1e-15);
}

TEST_F(Cli, TwoDimensionalPipeline) {
  ASSERT_EQ(run("generate --mode 2d --size 2 --seed 6 --format json --out " + path("i.json") + " --truth-out " +
                path("t.json"))
                .status,
            0);
  const auto r = run("solve " + path("i.json") + " --truth " + path("t.json"));
  ASSERT_EQ(r.status, 0);
  EXPECT_LE(metric(r.out, "spectral_error"), 1e-10);
}

TEST_F(Cli, BenchTable) {
  const auto r = run("bench --sizes 8 --trials 100 --min-seconds 0");
  ASSERT_EQ(r.status, 0);
  std::istringstream in(r.out);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "size mean_seconds median_seconds mean_spectral_error success_rate");
  int size;
  double mean, median, err, rate;
  ASSERT_TRUE(in >> size >> mean >> median >> err >> rate);
  EXPECT_EQ(size, 8);
  EXPECT_GE(rate, 0.95);
}

TEST_F(Cli, BenchJson) {
  const auto r = run("bench --sizes 8,12 --trials 2 --min-seconds 0 --format json");
  ASSERT_EQ(r.status, 0);
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[1]["size"], 12);
}

TEST_F(Cli, UsageAndInputErrorsExitNonzero) {
  EXPECT_NE(run("bench --sizes \"\"").status, 0);
  EXPECT_NE(run("bench").status, 0);
  EXPECT_NE(run("").status, 0);
  EXPECT_NE(run("frobnicate").status, 0);
  EXPECT_NE(run("generate --kind nonsense").status, 0);
  EXPECT_NE(run("generate --format yaml").status, 0);
  EXPECT_NE(run("solve " + path("missing.txt")).status, 0);
  {
    std::ofstream bad(path("bad.txt"));
    bad << "phaseret-instance 1\nmode 1d\ngrid x\n";
  }
  EXPECT_NE(run("solve " + path("bad.txt")).status, 0);
  EXPECT_EQ(run("--version").status, 0);
  EXPECT_EQ(run("--help").status, 0);
}

TEST_F(Cli, FlaggedSolveStillSucceeds) {
  ASSERT_EQ(run("generate --kind random-uniform --size 64 --seed 0 --out " + path("i.txt")).status, 0);
  EXPECT_EQ(run("solve " + path("i.txt") + " --search greedy --placeholder unit").status, 0);
}

TEST_F(Cli, GaugeAndPriorsFlags) {
  ASSERT_EQ(run("generate --kind random-smooth --size 12 --seed 5 --out " + path("i.txt") + " --truth-out " +
                path("t.txt"))
                .status,
            0);
  const auto base = run("solve " + path("i.txt") + " --format json");
  const auto rot = run("solve " + path("i.txt") + " --gauge 0.5 --format json");
  ASSERT_EQ(base.status, 0);
  ASSERT_EQ(rot.status, 0);
  const auto jb = nlohmann::json::parse(base.out), jr = nlohmann::json::parse(rot.out);
  EXPECT_EQ(jb["branch_log"].size(), jr["branch_log"].size());
  EXPECT_EQ(run("solve " + path("i.txt") + " --priors " + path("t.txt")).status, 0);
}
