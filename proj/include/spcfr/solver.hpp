#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spcfr/cfr.hpp"
#include "spcfr/game.hpp"
#include "spcfr/local_rm.hpp"
#include "spcfr/metrics.hpp"
#include "spcfr/stability.hpp"

namespace spcfr {

enum class Algorithm { oftrl_theory, oftrl_scaled, cfr_rm };
enum class UpdateMode { simultaneous, alternating };

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::oftrl_theory: return "oftrl_theory";
    case Algorithm::oftrl_scaled: return "oftrl_scaled";
    case Algorithm::cfr_rm: return "cfr_rm";
  }
  return "?";
}

inline std::string to_string(UpdateMode u) {
  return u == UpdateMode::simultaneous ? "simultaneous" : "alternating";
}

struct SolveConfig {
  Algorithm algorithm = Algorithm::oftrl_theory;
  int scale_exponent = 1;  // oftrl_scaled: eta_j = kappa_j * 10^d
  UpdateMode updates = UpdateMode::simultaneous;
  Regularizer regularizer{RegularizerKind::euclidean};
  std::size_t iterations = 1;
  double kappa_constant = 1.0;  // kappa_star = c * T^{-1/4}
  std::size_t record_every = 0;  // 0 selects default_record_every(T)
  bool record_history = false;
  bool timing = false;  // wall_ms stays 0 unless set
};

/// 2^ceil(log2 T) / 512, at least 1.
inline std::size_t default_record_every(std::size_t T) {
  std::size_t p = 1;
  while (p < T) p <<= 1;
  return std::max<std::size_t>(1, p / 512);
}

inline double kappa_star_for(const SolveConfig& c) {
  return c.kappa_constant * std::pow(static_cast<double>(c.iterations), -0.25);
}

inline void validate(const SolveConfig& c) {
  if (c.iterations < 1) throw std::invalid_argument("iterations must be at least 1");
  if (c.algorithm == Algorithm::oftrl_scaled && (c.scale_exponent < 1 || c.scale_exponent > 3)) {
    throw std::invalid_argument("oftrl_scaled exponent must be 1, 2 or 3");
  }
  if (!(c.kappa_constant > 0.0) || !std::isfinite(c.kappa_constant)) {
    throw std::invalid_argument("kappa constant must be positive");
  }
}

struct TraceRecord {
  std::size_t t = 0;
  double residual = 0.0;
  double residual_mbbg = 0.0;
  double regret_x = 0.0;  // root subtree regrets, payoff units
  double regret_y = 0.0;
  double max_stability_violation = 0.0;  // since the previous record, >= 0
  double max_local_stability_violation = 0.0;
  double wall_ms = 0.0;
};

struct SolveTrace {
  SolveConfig config;
  std::string game;
  double kappa_star = 0.0;
  std::vector<TraceRecord> records;
  std::vector<double> sum_x, sum_y;  // sums of played iterates
  std::size_t iterations = 0;
  std::optional<PlayerHistory> history_x, history_y;
};

/// Uniform averages of the played iterates.
inline std::pair<std::vector<double>, std::vector<double>> average_strategies(const SolveTrace& trace) {
  if (trace.iterations == 0) throw std::invalid_argument("average_strategies: empty trace");
  const double inv = 1.0 / static_cast<double>(trace.iterations);
  std::pair<std::vector<double>, std::vector<double>> out{trace.sum_x, trace.sum_y};
  for (auto& v : out.first) v *= inv;
  for (auto& v : out.second) v *= inv;
  return out;
}

using RecordCallback = std::function<void(const TraceRecord&)>;

namespace detail {

// Played-pair regret bookkeeping for one player, in payoff units.
struct RegretBook {
  std::vector<double> cumulative;  // sum of unscaled losses
  double incurred = 0.0;

  explicit RegretBook(std::size_t n) : cumulative(n, 0.0) {}

  void add(std::span<const double> loss, std::span<const double> decision) {
    for (std::size_t i = 0; i < loss.size(); ++i) {
      cumulative[i] += loss[i];
      incurred += loss[i] * decision[i];
    }
  }
  double regret(const TreePlex& tree) const { return incurred - minimize_linear(tree, cumulative).value; }
};

struct StabilityTracker {
  const TreePlex* tree;
  const StabilitySchedule* schedule;
  std::vector<double> previous;
  bool has_previous = false;
  double subtree = 0.0, local = 0.0;

  void push(std::span<const double> behavioral) {
    if (has_previous) {
      const auto e = stability_excess(subtree_movement(*tree, previous, behavioral), *schedule);
      subtree = std::max(subtree, e.subtree);
      local = std::max(local, e.local);
    }
    previous.assign(behavioral.begin(), behavioral.end());
    has_previous = true;
  }
  void reset_window() { subtree = local = 0.0; }
};

inline void require_finite(std::span<const double> v, const char* what) {
  for (double a : v) {
    if (!std::isfinite(a)) throw std::overflow_error(std::string("non-finite ") + what);
  }
}

template <typename Local>
SolveTrace run(const GameInstance& g, const SolveConfig& config, TreeplexMinimizer<Local> px,
               TreeplexMinimizer<Local> py, const StabilitySchedule& sx, const StabilitySchedule& sy,
               const RecordCallback& on_record) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const std::size_t T = config.iterations;
  const std::size_t every = config.record_every ? config.record_every : default_record_every(T);
  const std::size_t nx = g.treeplex_x.num_sequences(), ny = g.treeplex_y.num_sequences();
  const double scale = g.loss_scale;

  SolveTrace trace;
  trace.config = config;
  trace.game = g.name;
  trace.kappa_star = sx.kappa_star;
  trace.sum_x.assign(nx, 0.0);
  trace.sum_y.assign(ny, 0.0);
  if (config.record_history) {
    trace.history_x.emplace();
    trace.history_y.emplace();
  }

  RegretBook book_x(nx), book_y(ny);
  StabilityTracker track_x{&g.treeplex_x, &sx, {}, false};
  StabilityTracker track_y{&g.treeplex_y, &sy, {}, false};
  std::vector<double> mx(nx, 0.0), my(ny, 0.0), lx(nx), ly(ny), x(nx), y(ny);

  const auto observe = [&](auto& player, std::optional<PlayerHistory>& history, std::span<const double> loss) {
    if (history) {
      history->behavioral.emplace_back(player.behavioral().begin(), player.behavioral().end());
      history->loss.emplace_back(loss.begin(), loss.end());
    }
    player.observe_loss(loss);
  };
  const auto scaled = [&](std::span<const double> raw, std::vector<double>& out) {
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = scale * raw[i];
    require_finite(out, "loss");
  };

  if (config.updates == UpdateMode::alternating) {
    const auto y0 = py.next_decision(my);
    track_y.push(py.behavioral());
    y.assign(y0.begin(), y0.end());
  }

  for (std::size_t t = 1; t <= T; ++t) {
    std::vector<double> raw_x, raw_y;
    if (config.updates == UpdateMode::simultaneous) {
      const auto xs = px.next_decision(mx);
      x.assign(xs.begin(), xs.end());
      const auto ys = py.next_decision(my);
      y.assign(ys.begin(), ys.end());
      track_x.push(px.behavioral());
      track_y.push(py.behavioral());
      raw_x = payoff_times_y(g, y);
      for (auto& v : raw_x) v = -v;
      raw_y = payoff_transpose_times_x(g, x);
      scaled(raw_x, lx);
      scaled(raw_y, ly);
      observe(px, trace.history_x, lx);
      observe(py, trace.history_y, ly);
    } else {
      // X moves on its prediction; Y's pending decision is charged against
      // the fresh x, then Y answers with y^t, which X is charged against.
      const auto xs = px.next_decision(mx);
      x.assign(xs.begin(), xs.end());
      track_x.push(px.behavioral());
      raw_y = payoff_transpose_times_x(g, x);
      scaled(raw_y, ly);
      observe(py, trace.history_y, ly);
      my = ly;
      const auto ys = py.next_decision(my);
      y.assign(ys.begin(), ys.end());
      track_y.push(py.behavioral());
      raw_x = payoff_times_y(g, y);
      for (auto& v : raw_x) v = -v;
      scaled(raw_x, lx);
      observe(px, trace.history_x, lx);
    }
    mx = lx;
    if (config.updates == UpdateMode::simultaneous) my = ly;

    book_x.add(raw_x, x);
    book_y.add(raw_y, y);
    for (std::size_t i = 0; i < nx; ++i) trace.sum_x[i] += x[i];
    for (std::size_t i = 0; i < ny; ++i) trace.sum_y[i] += y[i];
    trace.iterations = t;

    if (t % every == 0 || t == T) {
      TraceRecord r;
      r.t = t;
      const double inv = 1.0 / static_cast<double>(t);
      std::vector<double> xbar(trace.sum_x), ybar(trace.sum_y);
      for (auto& v : xbar) v *= inv;
      for (auto& v : ybar) v *= inv;
      r.residual = saddle_residual(g, xbar, ybar);
      r.residual_mbbg = residual_to_mbbg(r.residual, g.big_blind);
      r.regret_x = book_x.regret(g.treeplex_x);
      r.regret_y = book_y.regret(g.treeplex_y);
      r.max_stability_violation = std::max({0.0, track_x.subtree, track_y.subtree, track_x.local, track_y.local});
      r.max_local_stability_violation = std::max({0.0, track_x.local, track_y.local});
      track_x.reset_window();
      track_y.reset_window();
      if (config.timing) r.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
      if (!std::isfinite(r.residual)) throw std::overflow_error("non-finite residual");
      trace.records.push_back(r);
      if (on_record) on_record(r);
    }
  }
  return trace;
}

}  // namespace detail

/// Stability schedule and stepsizes used for one player under `config`.
inline StabilitySchedule schedule_for(const TreePlex& tree, const SolveConfig& config) {
  auto s = assign_stability(tree, kappa_star_for(config));
  if (config.algorithm == Algorithm::oftrl_scaled) s.scale_stepsizes(std::pow(10.0, config.scale_exponent));
  return s;
}

/// Runs T iterations of self-play and records the trace. Each player is a
/// treeplex minimizer; predictions are the previous loss (zero at t = 1).
inline SolveTrace solve(const GameInstance& g, const SolveConfig& config, const RecordCallback& on_record = {}) {
  validate(config);
  const auto sx = schedule_for(g.treeplex_x, config);
  const auto sy = schedule_for(g.treeplex_y, config);
  if (config.algorithm == Algorithm::cfr_rm) {
    return detail::run(g, config, make_regret_matching_treeplex(g.treeplex_x),
                       make_regret_matching_treeplex(g.treeplex_y), sx, sy, on_record);
  }
  return detail::run(g, config, make_oftrl_treeplex(g.treeplex_x, sx, config.regularizer),
                     make_oftrl_treeplex(g.treeplex_y, sy, config.regularizer), sx, sy, on_record);
}

inline SolveTrace run_simultaneous(const GameInstance& g, SolveConfig config, const RecordCallback& on_record = {}) {
  config.updates = UpdateMode::simultaneous;
  return solve(g, config, on_record);
}

inline SolveTrace run_alternating(const GameInstance& g, SolveConfig config, const RecordCallback& on_record = {}) {
  config.updates = UpdateMode::alternating;
  return solve(g, config, on_record);
}

}  // namespace spcfr
