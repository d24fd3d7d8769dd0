// Drives the spotvol binary end to end through its files and exit codes.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "spotvol/spotvol.hpp"

namespace fs = std::filesystem;
using namespace spotvol;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(::testing::TempDir()) /
           ("spotvol_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string cmd = "cd '" + dir_.string() + "' && '" SPOTVOL_CLI "' " + args + " >out.txt 2>err.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(dir_ / name, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SimulateConstCorrWritesTwoAssets) {
  ASSERT_EQ(run("simulate --model const-corr --d 2 --rho 0.5 --n 150 --seed 1"), 0) << read("err.txt");
  std::istringstream ticks(read("ticks.csv"));
  const auto obs = parse_ticks_csv(ticks, PriceKind::log);
  EXPECT_EQ(obs.d(), 2u);
  std::istringstream oracle(read("oracle.csv"));
  const auto path = read_vol_csv(oracle);
  EXPECT_EQ(path.size(), 150u);
  EXPECT_DOUBLE_EQ(path.points[10].entries(0, 1), 0.5);
  EXPECT_NE(read("out.txt").find("seed=1"), std::string::npos);
}

TEST_F(CliTest, SimulateIsDeterministic) {
  const std::string args = "simulate --model factor --d 12 --r 3 --n 150 --sampling poisson --seed 7";
  ASSERT_EQ(run(args), 0);
  const auto first = read("ticks.csv");
  const auto first_oracle = read("oracle.csv");
  ASSERT_EQ(run(args), 0);
  EXPECT_EQ(read("ticks.csv"), first);
  EXPECT_EQ(read("oracle.csv"), first_oracle);
  std::istringstream in(first);
  const auto obs = parse_ticks_csv(in, PriceKind::log);
  EXPECT_EQ(obs.d(), 12u);
  EXPECT_NE(obs.series[0].times, obs.series[1].times);
}

TEST_F(CliTest, PipelineAndReferenceConfigurations) {
  ASSERT_EQ(run("simulate --model factor --d 12 --r 3 --n 150 --seed 3"), 0);
  ASSERT_EQ(run("estimate --input ticks.csv --output vol.csv"), 0) << read("err.txt");
  const auto vol = read("vol.csv");
  ASSERT_EQ(run("estimate --input ticks.csv --output vol.csv --threads 3"), 0);
  EXPECT_EQ(read("vol.csv"), vol);

  ASSERT_EQ(run("estimate --M 15 --nodes 31 --grid 150 --kernel cauchy --gamma 0.1796 --output c1.csv"), 0);
  ASSERT_EQ(run("estimate --kernel gaussian --l-gauss 31 --output g3.csv"), 0);
  EXPECT_EQ(read("g3.csv"), vol);  // defaults are the same configuration
  ASSERT_EQ(run("estimate --kernel gaussian --l-gauss 2.36 --output g4.csv"), 0);
  ASSERT_EQ(run("estimate --kernel fejer --output f.csv"), 0);

  ASSERT_EQ(run("pca --input vol.csv --csv pca.csv --svg pca.svg --rank-threshold 0.9"), 0) << read("err.txt");
  EXPECT_EQ(read("pca.csv").rfind("t,lambda_1,", 0), 0u);
  EXPECT_NE(read("pca.svg").find("</svg>"), std::string::npos);
  EXPECT_NE(read("out.txt").find("rank at threshold 0.9"), std::string::npos);
}

TEST_F(CliTest, PcaOnRankOneAndDiagonalPaths) {
  {
    std::ofstream out(dir_ / "diag.csv");
    out << "t,V_1_1,V_1_2,V_1_3,V_1_4,V_2_2,V_2_3,V_2_4,V_3_3,V_3_4,V_4_4\n"
        << "0,4,0,0,0,3,0,0,2,0,1\n1,4,0,0,0,3,0,0,2,0,1\n";
  }
  ASSERT_EQ(run("pca --input diag.csv --csv p.csv --svg p.svg"), 0);
  EXPECT_NE(read("p.csv").find("\n0,4,3,2,1,0.40000000000000002,0.69999999999999996,0.90000000000000002\n"),
            std::string::npos);

  ASSERT_EQ(run("simulate --model const-corr --d 3 --rho 0.2 --n 100 --seed 2"), 0);
  ASSERT_EQ(run("estimate --kernel flat --M 8 --grid 20 --output flat.csv"), 0);
  ASSERT_EQ(run("pca --input flat.csv --csv r.csv --svg r.svg"), 0);
  std::istringstream in(read("flat.csv"));
  for (const auto& r : pca_ratios(read_vol_csv(in))) EXPECT_NEAR(r.ratios[0], 1.0, 1e-10);
}

TEST_F(CliTest, PerRealTimeScalesByInverseSpan) {
  {
    std::ofstream out(dir_ / "raw.csv");
    out << "asset,time,price\nA,0,100\nA,5,101\nA,10,99\nA,20,100.5\nB,0,50\nB,7,50.5\nB,20,49\n";
  }
  ASSERT_EQ(run("estimate --input raw.csv --price-kind raw --M 2 --grid 5 --output a.csv"), 0) << read("err.txt");
  ASSERT_EQ(run("estimate --input raw.csv --price-kind raw --M 2 --grid 5 --per-real-time --output b.csv"), 0);
  std::istringstream a(read("a.csv")), b(read("b.csv"));
  const auto pa = read_vol_csv(a), pb = read_vol_csv(b);
  EXPECT_NEAR(pb.points[2].entries(0, 0), pa.points[2].entries(0, 0) / 20.0, 1e-15);
  EXPECT_NE(read("err.txt").find("warning: M = 2"), std::string::npos);
}

TEST_F(CliTest, ErrorsExitNonzeroWithMessages) {
  EXPECT_NE(run("bench --reps 0"), 0);
  EXPECT_NE(read("err.txt").find("repetitions"), std::string::npos);
  EXPECT_NE(run("estimate --input missing.csv"), 0);
  EXPECT_NE(read("err.txt").find("missing.csv"), std::string::npos);
  {
    std::ofstream out(dir_ / "dup.csv");
    out << "asset,time,price\nA,5,1\nA,5,2\nA,7,3\n";
  }
  EXPECT_NE(run("estimate --input dup.csv"), 0);
  EXPECT_NE(read("err.txt").find("duplicate"), std::string::npos);
  ASSERT_EQ(run("simulate --d 2 --n 50 --seed 1"), 0);
  EXPECT_NE(run("estimate --kernel gaussian --gamma 0.2"), 0);
  EXPECT_NE(run("estimate --method classical --kernel cauchy --gamma 0.2"), 0);
  EXPECT_NE(run("estimate --L 3"), 0);
  EXPECT_NE(run("estimate --method bogus"), 0);
  EXPECT_NE(run("simulate --model bogus"), 0);
  EXPECT_NE(run("simulate --model const-corr --d 3 --rho -0.9"), 0);
  EXPECT_NE(run("nonsense"), 0);

  ASSERT_EQ(run("estimate --method classical --M 3 --grid 10 --output cl.csv"), 0) << read("err.txt");
  EXPECT_NE(run("pca --input cl.csv"), 0);
  EXPECT_NE(read("err.txt").find("at t = "), std::string::npos);
}

TEST_F(CliTest, BenchSmallAgrees) {
  ASSERT_EQ(run("bench --d 2 --n 20 --M 3 --grid 10 --reps 1"), 0) << read("err.txt");
  EXPECT_NE(read("out.txt").find("agreement"), std::string::npos);
  EXPECT_NE(read("out.txt").find("speedup"), std::string::npos);
}
