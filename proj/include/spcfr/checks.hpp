#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "spcfr/builders.hpp"
#include "spcfr/local_rm.hpp"
#include "spcfr/metrics.hpp"
#include "spcfr/solver.hpp"
#include "spcfr/trace_csv.hpp"

namespace spcfr::checks {

struct CriterionResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Thresholds.
inline constexpr std::size_t kRateIterations = 4096;
inline constexpr double kRateExponent = -0.5;
inline constexpr double kEnvelopeAnchor = 64;
inline constexpr double kRateSeconds = 60.0;
inline constexpr double kKuhnValue = -1.0 / 18.0;
inline constexpr double kValueTolerance = 5e-3;
inline constexpr std::uint64_t kBaselineSeed = 1;
inline constexpr int kStreamCount = 200;
inline constexpr int kStreamLength = 1000;
inline constexpr int kLipschitzPairs = 1000;
inline constexpr int kDecompositionGames = 20;
inline constexpr std::size_t kDecompositionIterations = 100;
inline constexpr double kDecompositionTolerance = 1e-9;
inline constexpr double kFolkSlack = 1e-9;
inline constexpr double kStabilitySlack = 1e-12;
inline constexpr double kBoundSlack = 1e-12;

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

}  // namespace detail

/// Traces produced while running the suite; stability and folk-theorem
/// criteria are evaluated over all of them.
struct RunLog {
  struct Entry {
    std::string label;
    SolveTrace trace;
    bool theory_stepsizes = false;  // euclidean locals with eta_j = kappa_j
  };
  std::vector<Entry> runs;

  const SolveTrace& add(std::string label, SolveTrace trace) {
    const bool theory = trace.config.algorithm == Algorithm::oftrl_theory &&
                        trace.config.regularizer.kind == RegularizerKind::euclidean;
    runs.push_back({std::move(label), std::move(trace), theory});
    return runs.back().trace;
  }
};

// ---------------------------------------------------------------------------
// Rate and value on Kuhn
// ---------------------------------------------------------------------------

inline std::vector<CriterionResult> rate_and_value(RunLog& log) {
  const auto game = build_kuhn();
  SolveConfig c;
  c.algorithm = Algorithm::oftrl_theory;
  c.regularizer = Regularizer{RegularizerKind::euclidean};
  c.updates = UpdateMode::simultaneous;
  c.iterations = kRateIterations;
  c.record_every = 1;
  const auto start = std::chrono::steady_clock::now();
  const auto& trace = log.add("kuhn/oftrl_theory/simultaneous", solve(game, c));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::vector<double> t, r;
  for (const auto& rec : trace.records) {
    t.push_back(static_cast<double>(rec.t));
    r.push_back(rec.residual);
  }
  const auto fit = fit_convergence_rate(t, r);
  const double anchor = r.at(static_cast<std::size_t>(kEnvelopeAnchor) - 1);
  const double envelope_c = anchor * std::pow(kEnvelopeAnchor, 0.75);
  std::size_t above = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double bound = envelope_c * std::pow(t[i], -0.75);
    if (r[i] > bound * (1.0 + kBoundSlack)) ++above;
    worst = std::max(worst, r[i] / bound);
  }
  CriterionResult rate{"rate check (kuhn, oftrl_theory, euclidean, simultaneous, T=4096)", false, ""};
  rate.passed = fit.exponent <= kRateExponent && above == 0 && seconds < kRateSeconds;
  rate.detail = "exponent " + detail::fmt(fit.exponent) + " (need <= -0.5), envelope C=" + detail::fmt(envelope_c) +
                " exceeded at " + std::to_string(above) + " of " + std::to_string(r.size()) +
                " iterations (worst ratio " + detail::fmt(worst) + "), final residual " + detail::fmt(r.back()) +
                ", " + detail::fmt(seconds) + " s";

  const auto [xbar, ybar] = average_strategies(trace);
  const double value = expected_payoff(game, xbar, ybar);
  CriterionResult eq{"equilibrium value (kuhn, oftrl_theory, T=4096)", false, ""};
  eq.passed = std::abs(value - kKuhnValue) <= kValueTolerance;
  eq.detail = "average payoff " + detail::fmt(value) + ", target " + detail::fmt(kKuhnValue) + ", |diff| " +
              detail::fmt(std::abs(value - kKuhnValue)) + " (need <= 5e-3)";
  return {rate, eq};
}

// ---------------------------------------------------------------------------
// Tuned OFTRL against regret matching
// ---------------------------------------------------------------------------

struct BaselineOutcome {
  std::string game;
  double cfr_rm = 0.0;
  double best_scaled = 0.0;
  int best_d = 0;
};

inline BaselineOutcome compare_baseline(const GameInstance& game, RunLog& log) {
  SolveConfig c;
  c.updates = UpdateMode::simultaneous;
  c.iterations = kRateIterations;
  c.algorithm = Algorithm::cfr_rm;
  BaselineOutcome out{game.name, 0.0, std::numeric_limits<double>::infinity(), 0};
  out.cfr_rm = log.add(game.name + "/cfr_rm", solve(game, c)).records.back().residual;
  c.algorithm = Algorithm::oftrl_scaled;
  c.regularizer = Regularizer{RegularizerKind::entropy};
  for (int d = 1; d <= 3; ++d) {
    c.scale_exponent = d;
    const double res = log.add(game.name + "/oftrl_scaled" + std::to_string(d), solve(game, c)).records.back().residual;
    if (res < out.best_scaled) {
      out.best_scaled = res;
      out.best_d = d;
    }
  }
  return out;
}

inline CriterionResult baseline(RunLog& log) {
  CriterionResult r{"baseline comparison (oftrl_scaled best d vs cfr_rm, T=4096, simultaneous)", true, ""};
  for (const auto& game : {build_kuhn(), build_random_game(kBaselineSeed, 3, 3)}) {
    const auto o = compare_baseline(game, log);
    const bool ok = o.best_scaled <= o.cfr_rm;
    r.passed = r.passed && ok;
    if (!r.detail.empty()) r.detail += "; ";
    r.detail += o.game + ": oftrl_scaled(d=" + std::to_string(o.best_d) + ") " + detail::fmt(o.best_scaled) +
                " vs cfr_rm " + detail::fmt(o.cfr_rm) + (ok ? "" : " [worse]");
  }
  return r;
}

// ---------------------------------------------------------------------------
// OFTRL regret and step bounds on loss streams
// ---------------------------------------------------------------------------

struct StreamSpec {
  std::size_t n;
  Regularizer reg;
  bool nonnegative;
  bool random_walk;
  std::uint64_t seed;
};

inline StreamSpec stream_spec(int i) {
  static constexpr std::array<std::size_t, 3> kDims{2, 10, 50};
  return {kDims[i % 3], Regularizer{(i / 3) % 2 ? RegularizerKind::entropy : RegularizerKind::euclidean},
          (i / 6) % 2 == 1, (i / 12) % 2 == 1, 1000 + static_cast<std::uint64_t>(i)};
}

/// Loss vectors with dual norm in [1/6, 1/3].
inline std::vector<std::vector<double>> make_stream(const StreamSpec& s, int length) {
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double lo = s.nonnegative ? 0.0 : -1.0;
  const auto draw = [&] { return lo + (1.0 - lo) * unit(rng); };
  std::vector<double> current(s.n);
  for (auto& c : current) c = draw();
  std::vector<std::vector<double>> out(length, std::vector<double>(s.n));
  for (int t = 0; t < length; ++t) {
    for (auto& c : current) c = s.random_walk ? std::clamp(c + 0.2 * (2.0 * unit(rng) - 1.0), lo, 1.0) : draw();
    const double norm = s.reg.dual_norm(current);
    const double target = (0.5 + 0.5 * unit(rng)) / 3.0;
    for (std::size_t k = 0; k < s.n; ++k) out[t][k] = norm > 0.0 ? current[k] * target / norm : 0.0;
  }
  return out;
}

struct StreamOutcome {
  double regret = 0.0;
  double bound = 0.0;
  double worst_step_ratio = 0.0;  // max_t ||x^t - x^{t-1}|| / (eta * loss_norm)
  std::size_t step_violations = 0;
};

/// OFTRL with predictions m^t = l^{t-1} (m^1 = 0) and eta = T^{-1/4} / loss_norm,
/// where loss_norm bounds every loss and prediction.
inline StreamOutcome run_stream(const StreamSpec& s, const std::vector<std::vector<double>>& losses) {
  double loss_norm = 0.0;
  for (const auto& l : losses) loss_norm = std::max(loss_norm, s.reg.dual_norm(l));
  const double T = static_cast<double>(losses.size());
  const double eta = std::pow(T, -0.25) / loss_norm;
  const double step_factor = s.nonnegative ? 2.0 : 3.0;
  OftrlMinimizer m(s.n, eta, s.reg);
  std::vector<double> prediction(s.n, 0.0), previous;
  std::vector<std::vector<double>> decisions;
  double prediction_error = 0.0;
  StreamOutcome out;
  for (const auto& loss : losses) {
    const auto x = m.next_decision(prediction);
    std::vector<double> xv(x.begin(), x.end());
    if (!previous.empty()) {
      const double step = primal_distance(s.reg, xv, previous);
      out.worst_step_ratio = std::max(out.worst_step_ratio, step / (eta * loss_norm));
      if (step > step_factor * eta * loss_norm * (1.0 + kBoundSlack)) ++out.step_violations;
    }
    previous = xv;
    decisions.push_back(std::move(xv));
    m.observe_loss(loss);
    const double e = dual_distance(s.reg, loss, prediction);
    prediction_error += e * e;
    prediction = loss;
  }
  out.regret = cumulative_regret(decisions, losses);
  out.bound = s.reg.diameter(s.n) / eta + 3.0 * loss_norm * eta * prediction_error;
  return out;
}

inline CriterionResult regret_bound_streams() {
  std::size_t regret_violations = 0, step_violations = 0;
  double worst_regret_ratio = -std::numeric_limits<double>::infinity(), worst_step = 0.0;
  for (int i = 0; i < kStreamCount; ++i) {
    const auto spec = stream_spec(i);
    const auto o = run_stream(spec, make_stream(spec, kStreamLength));
    if (o.regret > o.bound * (1.0 + kBoundSlack)) ++regret_violations;
    step_violations += o.step_violations;
    worst_regret_ratio = std::max(worst_regret_ratio, o.regret / o.bound);
    worst_step = std::max(worst_step, o.worst_step_ratio);
  }
  CriterionResult r{"OFTRL regret and step bounds (200 loss streams)", regret_violations == 0 && step_violations == 0,
                    ""};
  r.detail = std::to_string(regret_violations) + " regret-bound violations (worst regret/bound " +
             detail::fmt(worst_regret_ratio) + "), " + std::to_string(step_violations) +
             " step violations (worst step " + detail::fmt(worst_step) + " * eta * loss norm)";
  return r;
}

// ---------------------------------------------------------------------------
// Lipschitz continuity of the regularized argmin
// ---------------------------------------------------------------------------

inline CriterionResult lipschitz_pairs() {
  static constexpr std::array<std::size_t, 4> kDims{2, 3, 10, 50};
  std::size_t violations = 0, total = 0;
  double worst = 0.0;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto kind : {RegularizerKind::entropy, RegularizerKind::euclidean}) {
    const Regularizer reg{kind};
    for (std::size_t n : kDims) {
      for (int i = 0; i < kLipschitzPairs; ++i) {
        const double eta = std::pow(10.0, -2.0 + 4.0 * unit(rng));
        const double spread = std::pow(10.0, -1.0 + 3.0 * unit(rng));
        std::vector<double> a(n), b(n);
        for (std::size_t k = 0; k < n; ++k) {
          a[k] = spread * (2.0 * unit(rng) - 1.0);
          b[k] = (i % 2) ? a[k] + 0.1 * spread * (2.0 * unit(rng) - 1.0) : spread * (2.0 * unit(rng) - 1.0);
        }
        const double lhs = primal_distance(reg, argmin_reg(a, eta, reg), argmin_reg(b, eta, reg));
        const double rhs = eta * dual_distance(reg, a, b);
        ++total;
        if (lhs > rhs * (1.0 + kBoundSlack) + 1e-15) ++violations;
        if (rhs > 0.0) worst = std::max(worst, lhs / rhs);
      }
    }
  }
  return {"argmin Lipschitz bound (1000 pairs per n in {2,3,10,50} x 2 regularizers)", violations == 0,
          std::to_string(violations) + " violations of " + std::to_string(total) + " (worst ratio " +
              detail::fmt(worst) + ")"};
}

// ---------------------------------------------------------------------------
// Regret decomposition over random games
// ---------------------------------------------------------------------------

struct DecompositionOutcome {
  std::size_t equality_checks = 0, inequality_checks = 0;
  std::size_t equality_failures = 0, inequality_failures = 0;
  double worst_equality_gap = 0.0;
  double worst_inequality_excess = -std::numeric_limits<double>::infinity();
};

/// Observation nodes: subtree regret equals the sum over child decision
/// nodes. Decision nodes: subtree regret is at most the counterfactual
/// regret plus the largest subtree regret reachable through one action
/// (an action with no observation below contributes 0).
inline void check_decomposition(const TreePlex& tree, const PlayerHistory& h, DecompositionOutcome& out) {
  for (std::size_t t = 1; t <= h.size(); ++t) {
    std::vector<double> dec(tree.num_decisions()), obs(tree.num_observations());
    for (std::size_t j = 0; j < tree.num_decisions(); ++j) {
      dec[j] = brute_force_regret(tree, h, NodeRef{NodeKind::decision, j}, t);
    }
    for (std::size_t k = 0; k < tree.num_observations(); ++k) {
      obs[k] = brute_force_regret(tree, h, NodeRef{NodeKind::observation, k}, t);
      double sum = 0.0;
      for (std::size_t c : tree.observation(k).children) sum += dec[c];
      const double gap = std::abs(obs[k] - sum);
      ++out.equality_checks;
      out.worst_equality_gap = std::max(out.worst_equality_gap, gap);
      if (!(gap < kDecompositionTolerance)) ++out.equality_failures;
    }
    for (std::size_t j = 0; j < tree.num_decisions(); ++j) {
      const auto& node = tree.decision(j);
      double best_child = -std::numeric_limits<double>::infinity();
      for (const auto& k : node.children) best_child = std::max(best_child, k ? obs[*k] : 0.0);
      const double cf = brute_force_counterfactual_regret(tree, h, j, t);
      const double excess = dec[j] - (cf + best_child);
      ++out.inequality_checks;
      out.worst_inequality_excess = std::max(out.worst_inequality_excess, excess);
      if (excess > kDecompositionTolerance) ++out.inequality_failures;
    }
  }
}

inline std::pair<int, int> decomposition_shape(int i) {
  static constexpr std::array<std::pair<int, int>, 3> kShapes{{{2, 2}, {2, 3}, {3, 2}}};
  return kShapes[i % 3];
}

inline CriterionResult decomposition(RunLog& log) {
  DecompositionOutcome out;
  std::size_t max_sequences = 0;
  for (int i = 0; i < kDecompositionGames; ++i) {
    const auto [depth, branching] = decomposition_shape(i);
    const auto game = build_random_game(100 + static_cast<std::uint64_t>(i), depth, branching);
    max_sequences = std::max({max_sequences, game.treeplex_x.num_sequences(), game.treeplex_y.num_sequences()});
    SolveConfig c;
    c.algorithm = Algorithm::oftrl_theory;
    c.regularizer = Regularizer{RegularizerKind::euclidean};
    c.iterations = kDecompositionIterations;
    c.record_every = 1;
    c.record_history = true;
    const auto& trace = log.add(game.name + "/decomposition", solve(game, c));
    check_decomposition(game.treeplex_x, *trace.history_x, out);
    check_decomposition(game.treeplex_y, *trace.history_y, out);
  }
  const bool ok = out.equality_failures == 0 && out.inequality_failures == 0 && max_sequences <= 200;
  return {"regret decomposition (20 random games x 100 iterations)", ok,
          "observation equality: " + std::to_string(out.equality_failures) + " failures of " +
              std::to_string(out.equality_checks) + " (worst gap " + detail::fmt(out.worst_equality_gap) +
              "); decision inequality: " + std::to_string(out.inequality_failures) + " failures of " +
              std::to_string(out.inequality_checks) + " (worst excess " + detail::fmt(out.worst_inequality_excess) +
              "); largest game " + std::to_string(max_sequences) + " sequences"};
}

// ---------------------------------------------------------------------------
// Properties over every recorded run
// ---------------------------------------------------------------------------

inline CriterionResult stability(const RunLog& log) {
  std::size_t runs = 0, violations = 0;
  double worst = 0.0;
  for (const auto& e : log.runs) {
    if (!e.theory_stepsizes) continue;
    ++runs;
    for (const auto& r : e.trace.records) {
      worst = std::max(worst, r.max_stability_violation);
      if (r.max_stability_violation > kStabilitySlack) ++violations;
    }
  }
  return {"stability schedule (euclidean locals, eta_j = kappa_j)", runs > 0 && violations == 0,
          std::to_string(violations) + " violating records over " + std::to_string(runs) +
              " runs (largest excess over gamma_v or kappa_j: " + detail::fmt(worst) + ")"};
}

inline CriterionResult folk_theorem(const RunLog& log) {
  std::size_t checked = 0, violations = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& e : log.runs) {
    for (const auto& r : e.trace.records) {
      const double excess = static_cast<double>(r.t) * r.residual - (r.regret_x + r.regret_y);
      worst = std::max(worst, excess);
      ++checked;
      if (excess > kFolkSlack) ++violations;
    }
  }
  return {"folk theorem (T * residual <= regret_x + regret_y)", checked > 0 && violations == 0,
          std::to_string(violations) + " violations over " + std::to_string(checked) + " records in " +
              std::to_string(log.runs.size()) + " runs (largest excess " + detail::fmt(worst) + ")"};
}

inline CriterionResult determinism() {
  SolveConfig c;
  c.algorithm = Algorithm::oftrl_scaled;
  c.scale_exponent = 2;
  c.regularizer = Regularizer{RegularizerKind::entropy};
  c.updates = UpdateMode::alternating;
  c.iterations = 512;
  bool same = true;
  std::size_t bytes = 0;
  for (const auto& make : std::vector<std::function<GameInstance()>>{
           [] { return build_kuhn(); }, [] { return build_random_game(7, 2, 3); }}) {
    const auto a = trace_to_csv(solve(make(), c));
    const auto b = trace_to_csv(solve(make(), c));
    same = same && a == b;
    bytes += a.size();
  }
  return {"determinism (identical configs give identical CSV bytes)", same,
          same ? "2 configs, " + std::to_string(bytes) + " bytes each run" : "CSV bytes differ between runs"};
}

/// Every criterion, in order. `on_result` sees each result as soon as it
/// is known.
inline std::vector<CriterionResult> run_all(const std::function<void(const CriterionResult&)>& on_result = {}) {
  std::vector<CriterionResult> out;
  const auto emit = [&](CriterionResult r) {
    if (on_result) on_result(r);
    out.push_back(std::move(r));
  };
  RunLog log;
  const auto rv = rate_and_value(log);
  emit(rv[0]);
  emit(baseline(log));
  emit(regret_bound_streams());
  emit(lipschitz_pairs());
  emit(decomposition(log));
  emit(stability(log));
  emit(folk_theorem(log));
  emit(rv[1]);
  emit(determinism());
  return out;
}

inline std::string format_result(const CriterionResult& r) {
  return std::string(r.passed ? "PASS" : "FAIL") + "  " + r.name + ": " + r.detail;
}

}  // namespace spcfr::checks
