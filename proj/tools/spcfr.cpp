#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "spcfr/spcfr.hpp"

namespace fs = std::filesystem;
using namespace spcfr;

namespace {

constexpr int kExitBadConfig = 2;
constexpr int kExitParse = 3;
constexpr int kExitSize = 4;

struct GameOptions {
  std::string game = "kuhn";
  std::uint64_t seed = 1;
  int depth = 2;
  int branching = 2;
};

struct RunOptions {
  std::string algo = "oftrl_theory";
  int scale_d = 1;
  std::string updates = "simultaneous";
  std::string regularizer;  // empty: euclidean for oftrl_theory, entropy otherwise
  std::size_t iterations = 1024;
  double kappa_constant = 1.0;
  std::size_t record_every = 0;
  bool timing = false;
};

class BadConfig : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

void add_game_options(CLI::App* app, GameOptions& g) {
  app->add_option("--game", g.game, "kuhn | leduc | random | file:<path>");
  app->add_option("--seed", g.seed, "random game seed (SPCFR_SEED overrides)");
  app->add_option("--depth", g.depth, "random game rounds");
  app->add_option("--branching", g.branching, "random game actions per move");
}

void add_run_options(CLI::App* app, RunOptions& r, bool with_algo) {
  if (with_algo) {
    app->add_option("--algo", r.algo, "oftrl_theory | oftrl_scaled | cfr_rm");
    app->add_option("--updates", r.updates, "simultaneous | alternating");
  }
  app->add_option("--scale-d", r.scale_d, "oftrl_scaled stepsize factor exponent d in {1,2,3}");
  app->add_option("--regularizer", r.regularizer, "entropy | euclidean");
  app->add_option("-T,--iterations", r.iterations, "iterations");
  app->add_option("--kappa-constant", r.kappa_constant, "c in kappa* = c T^{-1/4}");
  app->add_option("--record-every", r.record_every, "record interval (default 2^ceil(log2 T)/512)");
  app->add_flag("--timing", r.timing, "fill the wall_ms column");
}

std::uint64_t effective_seed(const GameOptions& g) {
  if (const char* env = std::getenv("SPCFR_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
      return v;
    } catch (const std::exception&) {
      throw BadConfig("SPCFR_SEED is not an unsigned integer: " + std::string(env));
    }
  }
  return g.seed;
}

ExtensiveFormGame load_efg(const GameOptions& g) {
  if (g.game == "kuhn") return build_kuhn_efg();
  if (g.game == "leduc") return build_leduc_efg();
  if (g.game == "random") {
    if (g.depth < 1 || g.branching < 1) throw BadConfig("random game needs depth >= 1 and branching >= 1");
    return build_random_game_efg(effective_seed(g), g.depth, g.branching);
  }
  if (g.game.rfind("file:", 0) == 0) {
    const std::string path = g.game.substr(5);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw BadConfig("cannot open game file " + path);
    std::ostringstream text;
    text << in.rdbuf();
    try {
      return parse_game_file(text.str());
    } catch (const StructuralError& e) {
      throw ParseError(0, e.what());
    }
  }
  throw BadConfig("unknown game '" + g.game + "'");
}

GameInstance load_game(const GameOptions& g) {
  if (g.game == "kuhn") return build_kuhn();
  if (g.game == "leduc") return build_leduc();
  if (g.game == "random") {
    if (g.depth < 1 || g.branching < 1) throw BadConfig("random game needs depth >= 1 and branching >= 1");
    return build_random_game(effective_seed(g), g.depth, g.branching);
  }
  auto efg = load_efg(g);
  return to_sequence_form_game(efg, fs::path(g.game.substr(5)).stem().string());
}

Algorithm parse_algorithm(const std::string& s) {
  if (s == "oftrl_theory") return Algorithm::oftrl_theory;
  if (s == "oftrl_scaled") return Algorithm::oftrl_scaled;
  if (s == "cfr_rm") return Algorithm::cfr_rm;
  throw BadConfig("unknown algorithm '" + s + "'");
}

UpdateMode parse_updates(const std::string& s) {
  if (s == "simultaneous") return UpdateMode::simultaneous;
  if (s == "alternating") return UpdateMode::alternating;
  throw BadConfig("unknown update mode '" + s + "'");
}

SolveConfig make_config(const RunOptions& r, Algorithm algo, UpdateMode updates) {
  SolveConfig c;
  c.algorithm = algo;
  c.updates = updates;
  c.scale_exponent = r.scale_d;
  if (r.regularizer.empty()) {
    c.regularizer = Regularizer{algo == Algorithm::oftrl_theory ? RegularizerKind::euclidean : RegularizerKind::entropy};
  } else if (r.regularizer == "entropy") {
    c.regularizer = Regularizer{RegularizerKind::entropy};
  } else if (r.regularizer == "euclidean") {
    c.regularizer = Regularizer{RegularizerKind::euclidean};
  } else {
    throw BadConfig("unknown regularizer '" + r.regularizer + "'");
  }
  c.iterations = r.iterations;
  c.kappa_constant = r.kappa_constant;
  c.record_every = r.record_every;
  c.timing = r.timing;
  try {
    validate(c);
  } catch (const std::invalid_argument& e) {
    throw BadConfig(e.what());
  }
  return c;
}

std::string run_label(const SolveConfig& c) {
  std::string a = to_string(c.algorithm);
  if (c.algorithm == Algorithm::oftrl_scaled) a += std::to_string(c.scale_exponent);
  return a + "_" + to_string(c.updates);
}

struct RunResult {
  TraceSummary summary;
  double seconds = 0.0;
};

RunResult run_to_csv(const GameInstance& game, const SolveConfig& c, const std::string& path) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  TraceCsvWriter writer(path);
  const auto trace = solve(game, c, [&](const TraceRecord& r) { writer.write(r); });
  RunResult out{summarize(trace), 0.0};
  writer.finish(out.summary);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::string summary_line(const std::string& label, const TraceSummary& s, double seconds) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s: T=%zu residual=%.6g exponent=%.4f wall=%.3fs", label.c_str(), s.t, s.residual,
                s.exponent, seconds);
  return buf;
}

int do_solve(const GameOptions& g, const RunOptions& r, const std::string& out) {
  const auto game = load_game(g);
  const auto c = make_config(r, parse_algorithm(r.algo), parse_updates(r.updates));
  const std::string path = out.empty() ? game.name + "_" + run_label(c) + ".csv" : out;
  const auto res = run_to_csv(game, c, path);
  std::cout << summary_line(game.name + " " + run_label(c), res.summary, res.seconds) << "\n" << "wrote " << path
            << "\n";
  return 0;
}

// Fields of a "#summary,t=..,residual=..,exponent=..,wall_ms=.." row.
std::optional<TraceSummary> parse_summary_row(const std::string& row) {
  TraceSummary s;
  std::istringstream in(row);
  std::string cell;
  std::getline(in, cell, ',');
  int seen = 0;
  while (std::getline(in, cell, ',')) {
    const auto eq = cell.find('=');
    if (eq == std::string::npos) return std::nullopt;
    const auto key = cell.substr(0, eq);
    const auto value = cell.substr(eq + 1);
    try {
      if (key == "t") s.t = std::stoull(value), ++seen;
      else if (key == "residual") s.residual = std::stod(value), ++seen;
      else if (key == "exponent") s.exponent = std::stod(value), ++seen;
      else if (key == "wall_ms") s.wall_ms = std::stod(value), ++seen;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  if (seen != 4) return std::nullopt;
  return s;
}

std::optional<TraceSummary> completed_run(const std::string& path) {
  if (!fs::exists(path)) return std::nullopt;
  try {
    const auto parsed = read_trace_csv(path);
    if (!parsed.complete()) return std::nullopt;
    return parse_summary_row(*parsed.summary);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

int do_sweep(const GameOptions& g, const RunOptions& r, const std::string& out_dir, unsigned threads) {
  const auto game = load_game(g);
  std::vector<SolveConfig> configs;
  for (auto algo : {Algorithm::oftrl_theory, Algorithm::oftrl_scaled, Algorithm::cfr_rm}) {
    for (auto updates : {UpdateMode::simultaneous, UpdateMode::alternating}) {
      configs.push_back(make_config(r, algo, updates));
    }
  }
  struct Row {
    std::string label, path, status;
    TraceSummary summary;
    bool ok = false;
  };
  std::vector<Row> rows(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    rows[i].label = run_label(configs[i]);
    rows[i].path = (fs::path(out_dir) / (game.name + "_" + rows[i].label + ".csv")).string();
  }
  fs::create_directories(out_dir);

  std::atomic<std::size_t> next{0};
  std::mutex io;
  const auto worker = [&] {
    for (std::size_t i; (i = next++) < configs.size();) {
      auto& row = rows[i];
      if (const auto done = completed_run(row.path)) {
        row.summary = *done;
        row.ok = true;
        row.status = "skipped";
      } else {
        try {
          const auto res = run_to_csv(game, configs[i], row.path);
          row.summary = res.summary;
          row.ok = true;
          row.status = "ran";
        } catch (const std::exception& e) {
          row.status = std::string("failed: ") + e.what();
        }
      }
      std::lock_guard lock(io);
      std::cout << row.label << ": " << row.status << "\n";
    }
  };
  std::vector<std::thread> pool;
  for (unsigned k = 0; k < std::max(1u, threads); ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.ok != b.ok) return a.ok;
    return a.summary.residual < b.summary.residual;
  });
  const auto summary_path = (fs::path(out_dir) / (game.name + "_summary.csv")).string();
  std::ofstream summary(summary_path, std::ios::binary | std::ios::trunc);
  summary << "run,status,t,residual,exponent,csv\n";
  std::size_t failed = 0;
  for (const auto& row : rows) {
    if (!row.ok) ++failed;
    std::string status = row.status;
    std::replace(status.begin(), status.end(), ',', ';');
    summary << row.label << ',' << status << ',' << row.summary.t << ',' << detail::g17(row.summary.residual) << ','
            << detail::g17(row.summary.exponent) << ',' << row.path << "\n";
    if (row.ok) std::cout << summary_line(row.label, row.summary, row.summary.wall_ms / 1000.0) << "\n";
  }
  std::cout << "wrote " << summary_path << "\n";
  if (failed) {
    std::cerr << failed << " of " << rows.size() << " runs failed\n";
    return 1;
  }
  return 0;
}

int do_export(const GameOptions& g, const std::string& out) {
  const auto text = export_game(load_efg(g));
  if (out.empty() || out == "-") {
    std::cout << text;
    return 0;
  }
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) throw BadConfig("cannot open " + out + " for writing");
  f << text;
  return 0;
}

int do_check() {
  bool all = true;
  checks::run_all([&](const checks::CriterionResult& r) {
    all = all && r.passed;
    std::cout << checks::format_result(r) << std::endl;
  });
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spcfr: stable-predictive counterfactual regret minimization"};
  app.require_subcommand(1);

  GameOptions game;
  RunOptions run;
  std::string out;
  std::string out_dir = "sweep";
  unsigned threads = 1;

  auto* solve_cmd = app.add_subcommand("solve", "run one configuration and write its trace CSV");
  add_game_options(solve_cmd, game);
  add_run_options(solve_cmd, run, true);
  solve_cmd->add_option("--out", out, "trace CSV path");

  auto* sweep_cmd = app.add_subcommand("sweep", "all algorithms x update modes on one game");
  add_game_options(sweep_cmd, game);
  add_run_options(sweep_cmd, run, false);
  sweep_cmd->add_option("--out", out_dir, "output directory");
  sweep_cmd->add_option("--threads", threads, "parallel runs");

  auto* export_cmd = app.add_subcommand("export-game", "write a built-in game in the game file format");
  add_game_options(export_cmd, game);
  export_cmd->add_option("--out", out, "output path (default stdout)");

  auto* check_cmd = app.add_subcommand("check", "run the invariant suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitBadConfig;
  }

  try {
    if (*solve_cmd) return do_solve(game, run, out);
    if (*sweep_cmd) return do_sweep(game, run, out_dir, threads);
    if (*export_cmd) return do_export(game, out);
    if (*check_cmd) return do_check();
  } catch (const ParseError& e) {
    std::cerr << "game file: " << e.what() << "\n";
    return kExitParse;
  } catch (const SizeLimitError& e) {
    std::cerr << "size limit: " << e.what() << "\n";
    return kExitSize;
  } catch (const std::invalid_argument& e) {
    std::cerr << "bad config: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
