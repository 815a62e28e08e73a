#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "spcfr/builders.hpp"
#include "spcfr/trace_csv.hpp"

namespace spcfr {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("spcfr_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args, const std::string& env = "") const {
    const std::string cmd = "cd '" + dir_.string() + "' && " + env + " '" SPCFR_CLI "' " + args + " >log.txt 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(dir_ / name, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path dir_;
};

TEST_F(Cli, solve_writes_header_records_and_summary) {
  // Action
  ASSERT_EQ(run("solve --game kuhn -T 1024 --out a.csv"), 0);

  // Verification
  std::istringstream in(read("a.csv"));
  const auto parsed = parse_trace_csv(in);
  EXPECT_TRUE(parsed.complete());
  ASSERT_EQ(parsed.records.size(), 512u);
  EXPECT_EQ(parsed.records.back().t, 1024u);
  for (const auto& r : parsed.records) EXPECT_EQ(r.wall_ms, 0.0);
  EXPECT_NE(parsed.summary->find("t=1024"), std::string::npos);
}

TEST_F(Cli, same_seed_gives_identical_bytes) {
  ASSERT_EQ(run("solve --game random --seed 7 -T 256 --out a.csv"), 0);
  ASSERT_EQ(run("solve --game random --seed 7 -T 256 --out b.csv"), 0);
  EXPECT_EQ(read("a.csv"), read("b.csv"));
  ASSERT_EQ(run("solve --game random --seed 8 -T 256 --out c.csv"), 0);
  EXPECT_NE(read("a.csv"), read("c.csv"));
}

TEST_F(Cli, seed_environment_variable_overrides_flag) {
  ASSERT_EQ(run("solve --game random --seed 7 -T 128 --out a.csv"), 0);
  ASSERT_EQ(run("solve --game random --seed 1 -T 128 --out b.csv", "SPCFR_SEED=7"), 0);
  EXPECT_EQ(read("a.csv"), read("b.csv"));
}

TEST_F(Cli, exported_game_file_reproduces_builtin_trace) {
  // Setup
  ASSERT_EQ(run("export-game --game kuhn --out kuhn.efg"), 0);

  // Action
  ASSERT_EQ(run("solve --game kuhn -T 512 --algo cfr_rm --out a.csv"), 0);
  ASSERT_EQ(run("solve --game file:kuhn.efg -T 512 --algo cfr_rm --out b.csv"), 0);

  // Verification
  std::istringstream ia(read("a.csv")), ib(read("b.csv"));
  const auto a = parse_trace_csv(ia), b = parse_trace_csv(ib);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_NEAR(a.records[i].residual, b.records[i].residual, 1e-12);
    EXPECT_NEAR(a.records[i].regret_x, b.records[i].regret_x, 1e-12);
  }
}

TEST_F(Cli, sweep_writes_all_runs_and_resumes) {
  // Action
  ASSERT_EQ(run("sweep --game kuhn -T 256 --threads 3 --out sw"), 0);

  // Verification
  std::size_t traces = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "sw")) {
    const auto name = e.path().filename().string();
    if (name == "kuhn_summary.csv") continue;
    ++traces;
    EXPECT_TRUE(read_trace_csv(e.path().string()).complete()) << name;
  }
  EXPECT_EQ(traces, 6u);
  const auto summary = read("sw/kuhn_summary.csv");
  EXPECT_EQ(summary.rfind("run,status,t,residual,exponent,csv\n", 0), 0u);
  EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 7);

  // a rerun leaves complete traces untouched
  const auto before = fs::last_write_time(dir_ / "sw" / "kuhn_cfr_rm_alternating.csv");
  ASSERT_EQ(run("sweep --game kuhn -T 256 --out sw"), 0);
  EXPECT_EQ(fs::last_write_time(dir_ / "sw" / "kuhn_cfr_rm_alternating.csv"), before);
  EXPECT_NE(read("log.txt").find("skip"), std::string::npos);
}

TEST_F(Cli, exit_codes) {
  EXPECT_EQ(run("solve --game bogus -T 4 --out a.csv"), 2);
  EXPECT_EQ(run("solve --game kuhn -T 0 --out a.csv"), 2);
  EXPECT_EQ(run("solve --no-such-flag"), 2);
  std::ofstream(dir_ / "bad.efg") << "garbage\n";
  EXPECT_EQ(run("solve --game file:bad.efg -T 4 --out a.csv"), 3);
  EXPECT_NE(read("log.txt").find("line 1"), std::string::npos);
  EXPECT_EQ(run("solve --game random --depth 12 --branching 10 -T 4 --out a.csv"), 4);
}

TEST(TraceCsv, format_uses_round_trip_precision) {
  TraceRecord r;
  r.t = 3;
  r.residual = 0.1;
  r.residual_mbbg = 1.0 / 3.0;
  EXPECT_EQ(format_record(r), "3,0.10000000000000001,0.33333333333333331,0,0,0,0");
}

TEST(TraceCsv, round_trip_is_exact) {
  // Setup
  SolveConfig c;
  c.iterations = 128;
  const auto trace = solve(build_kuhn(), c);

  // Action
  std::istringstream in(trace_to_csv(trace));
  const auto parsed = parse_trace_csv(in);

  // Verification
  ASSERT_EQ(parsed.records.size(), trace.records.size());
  for (std::size_t i = 0; i < parsed.records.size(); ++i) {
    EXPECT_EQ(parsed.records[i].t, trace.records[i].t);
    EXPECT_EQ(parsed.records[i].residual, trace.records[i].residual);
    EXPECT_EQ(parsed.records[i].regret_y, trace.records[i].regret_y);
  }
  EXPECT_TRUE(parsed.complete());
}

TEST(TraceCsv, header_mismatch_is_parse_error) {
  std::istringstream in("t,residual\n1,2\n");
  EXPECT_THROW(parse_trace_csv(in), ParseError);
}

TEST(TraceCsv, truncated_file_is_incomplete) {
  SolveConfig c;
  c.iterations = 64;
  auto text = trace_to_csv(solve(build_kuhn(), c));
  text = text.substr(0, text.find(kSummaryPrefix));
  std::istringstream in(text);
  const auto parsed = parse_trace_csv(in);
  EXPECT_FALSE(parsed.complete());
  EXPECT_FALSE(parsed.records.empty());
}

TEST(TraceCsv, short_row_is_parse_error) {
  std::istringstream in(std::string(kTraceHeader) + "\n1,2,3\n");
  EXPECT_THROW(parse_trace_csv(in), ParseError);
}

}  // namespace
}  // namespace spcfr
