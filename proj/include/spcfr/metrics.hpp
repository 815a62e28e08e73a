#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "spcfr/cfr.hpp"
#include "spcfr/errors.hpp"
#include "spcfr/game.hpp"
#include "spcfr/treeplex.hpp"

namespace spcfr {

// ---------------------------------------------------------------------------
// Best response
// ---------------------------------------------------------------------------

struct BestResponse {
  double value = 0.0;
  std::vector<double> strategy;  // pure, sequence form
};

/// min over the treeplex of <loss, x> by backward induction; ties go to the
/// lowest action index.
inline BestResponse minimize_linear(const TreePlex& tree, std::span<const double> loss) {
  require_dimension(tree, loss.size(), "loss");
  const std::size_t nj = tree.num_decisions();
  std::vector<double> value(nj, 0.0);
  std::vector<std::size_t> choice(nj, 0);
  for (std::size_t j = nj; j-- > 0;) {
    const auto& node = tree.decision(j);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < node.num_actions(); ++a) {
      double v = loss[node.first_sequence + a];
      for (std::size_t c : tree.children_of(j, a)) v += value[c];
      if (v < best) {
        best = v;
        choice[j] = a;
      }
    }
    value[j] = best;
  }
  BestResponse br{value[tree.root()], std::vector<double>(tree.num_sequences(), 0.0)};
  for (std::size_t j = 0; j < nj; ++j) {
    const double mass = parent_mass(tree, br.strategy, j);
    br.strategy[tree.decision(j).first_sequence + choice[j]] = mass;
  }
  return br;
}

enum class Side { x, y };

/// Best response of `side` to the opponent's sequence-form strategy, with
/// its value x^T A y in payoff units (player 1's perspective): x maximises,
/// y minimises.
inline BestResponse best_response_value(const GameInstance& g, Side side,
                                        std::span<const double> opponent) {
  if (side == Side::x) {
    auto gradient = payoff_times_y(g, opponent);
    for (auto& v : gradient) v = -v;
    auto br = minimize_linear(g.treeplex_x, gradient);
    br.value = -br.value;
    return br;
  }
  return minimize_linear(g.treeplex_y, payoff_transpose_times_x(g, opponent));
}

/// max_x x^T A ybar - min_y xbar^T A y.
inline double saddle_residual(const GameInstance& g, std::span<const double> xbar,
                              std::span<const double> ybar) {
  return best_response_value(g, Side::x, ybar).value - best_response_value(g, Side::y, xbar).value;
}

inline double residual_to_mbbg(double residual, double big_blind) {
  if (!(big_blind > 0.0)) throw std::invalid_argument("big blind must be positive");
  return residual / big_blind * 1000.0;
}

// ---------------------------------------------------------------------------
// Rate fitting
// ---------------------------------------------------------------------------

struct RateFit {
  double exponent = 0.0;
  double constant = 0.0;
  std::size_t points = 0;
};

inline constexpr std::size_t kMinFitLength = 64;

/// Least-squares line through (log t, log residual) over the last half of
/// the trace: residual ~ constant * t^exponent. Non-positive residuals are
/// left out.
inline RateFit fit_convergence_rate(std::span<const double> t, std::span<const double> residual) {
  if (t.size() != residual.size()) throw std::invalid_argument("fit_convergence_rate: length mismatch");
  if (t.size() < kMinFitLength) {
    throw std::invalid_argument("fit_convergence_rate needs at least " + std::to_string(kMinFitLength) +
                                " points, got " + std::to_string(t.size()));
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (std::size_t i = t.size() / 2; i < t.size(); ++i) {
    if (!(residual[i] > 0.0) || !(t[i] > 0.0)) continue;
    const double lx = std::log(t[i]), ly = std::log(residual[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) throw std::invalid_argument("fit_convergence_rate: fewer than two positive residuals");
  const double dn = static_cast<double>(n);
  const double den = dn * sxx - sx * sx;
  if (den == 0.0) throw std::invalid_argument("fit_convergence_rate: degenerate t values");
  const double slope = (dn * sxy - sx * sy) / den;
  const double intercept = (sy - slope * sx) / dn;
  return {slope, std::exp(intercept), n};
}

// ---------------------------------------------------------------------------
// Regret oracles
// ---------------------------------------------------------------------------

/// Decisions and losses seen by one treeplex minimizer, in order.
/// behavioral[t] is the decision that loss[t] was charged against.
struct PlayerHistory {
  std::vector<std::vector<double>> behavioral;
  std::vector<std::vector<double>> loss;

  std::size_t size() const { return loss.size(); }
};

inline constexpr std::size_t kOracleMaxSequences = 1000;
inline constexpr double kVertexEnumerationLimit = 1024;

namespace detail {

inline void oracle_size_guard(SequenceRange r) {
  if (r.size() > kOracleMaxSequences) {
    throw SizeLimitError("regret oracle limited to " + std::to_string(kOracleMaxSequences) +
                         " sequences below the node, got " + std::to_string(r.size()));
  }
}

// Objective values <loss, x> of every vertex x of the subtree polytope at j.
inline std::vector<double> vertex_values(const TreePlex& tree, std::size_t j, std::span<const double> loss) {
  const auto& node = tree.decision(j);
  std::vector<double> out;
  for (std::size_t a = 0; a < node.num_actions(); ++a) {
    std::vector<double> combos{loss[node.first_sequence + a]};
    for (std::size_t c : tree.children_of(j, a)) {
      const auto child = vertex_values(tree, c, loss);
      std::vector<double> next;
      next.reserve(combos.size() * child.size());
      for (double u : combos) {
        for (double v : child) next.push_back(u + v);
      }
      combos = std::move(next);
    }
    out.insert(out.end(), combos.begin(), combos.end());
  }
  return out;
}

// min over vertices at j; children of different signals combine independently.
inline double vertex_min_dp(const TreePlex& tree, std::size_t j, std::span<const double> loss) {
  const auto& node = tree.decision(j);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < node.num_actions(); ++a) {
    double v = loss[node.first_sequence + a];
    for (std::size_t c : tree.children_of(j, a)) v += vertex_min_dp(tree, c, loss);
    best = std::min(best, v);
  }
  return best;
}

}  // namespace detail

/// Number of vertices (deterministic subtree strategies) of the polytope at j.
inline double count_vertices(const TreePlex& tree, std::size_t j) {
  const auto& node = tree.decision(j);
  double total = 0.0;
  for (std::size_t a = 0; a < node.num_actions(); ++a) {
    double product = 1.0;
    for (std::size_t c : tree.children_of(j, a)) product *= count_vertices(tree, c);
    total += product;
  }
  return total;
}

/// min over vertices of the subtree polytope at j of <loss, x>. Lists every
/// vertex value when there are at most kVertexEnumerationLimit of them;
/// otherwise recurses per signal, which reaches the same minimum.
inline double min_over_vertices(const TreePlex& tree, std::size_t j, std::span<const double> loss) {
  require_dimension(tree, loss.size(), "loss");
  detail::oracle_size_guard(tree.subtree_range(j));
  if (count_vertices(tree, j) <= kVertexEnumerationLimit) {
    const auto values = detail::vertex_values(tree, j, loss);
    return *std::min_element(values.begin(), values.end());
  }
  return detail::vertex_min_dp(tree, j, loss);
}

inline double min_over_vertices(const TreePlex& tree, NodeRef v, std::span<const double> loss) {
  if (v.kind == NodeKind::decision) return min_over_vertices(tree, v.index, loss);
  double total = 0.0;
  for (std::size_t c : tree.observation(v.index).children) total += min_over_vertices(tree, c, loss);
  return total;
}

/// Subtree regret at node v: sum_t <[l^t]_{down v}, x^t_v> minus the best
/// fixed subtree strategy in hindsight, with x^t_v the subtree-local
/// sequence form of the recorded decision.
inline double brute_force_regret(const TreePlex& tree, const PlayerHistory& h, NodeRef v,
                                 std::size_t steps) {
  if (steps > h.size()) throw std::invalid_argument("brute_force_regret: history too short");
  const auto range = tree.subtree_range(v);
  detail::oracle_size_guard(range);
  std::vector<double> total(tree.num_sequences(), 0.0);
  double incurred = 0.0;
  std::vector<std::size_t> roots;
  if (v.kind == NodeKind::decision) {
    roots.push_back(v.index);
  } else {
    const auto& ch = tree.observation(v.index).children;
    roots.assign(ch.begin(), ch.end());
  }
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t r : roots) {
      const auto x = subtree_sequence_form(tree, h.behavioral[t], r);
      const auto sub = tree.subtree_range(r);
      for (std::size_t i = 0; i < x.size(); ++i) incurred += h.loss[t][sub.begin + i] * x[i];
    }
    for (std::size_t s = range.begin; s < range.end; ++s) total[s] += h.loss[t][s];
  }
  return incurred - min_over_vertices(tree, v, total);
}

inline double brute_force_regret(const TreePlex& tree, const PlayerHistory& h, NodeRef v) {
  return brute_force_regret(tree, h, v, h.size());
}

/// Counterfactual regret at decision node j: regret of the local decisions
/// against the counterfactual losses rebuilt from the recorded history.
inline double brute_force_counterfactual_regret(const TreePlex& tree, const PlayerHistory& h,
                                                std::size_t j, std::size_t steps) {
  if (steps > h.size()) throw std::invalid_argument("brute_force_counterfactual_regret: history too short");
  detail::oracle_size_guard(tree.subtree_range(j));
  const auto r = tree.local_range(j);
  std::vector<double> total(r.size(), 0.0);
  double incurred = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    const auto cf = counterfactual_loss(tree, j, h.loss[t], h.behavioral[t]);
    for (std::size_t a = 0; a < r.size(); ++a) {
      incurred += cf[a] * h.behavioral[t][r.begin + a];
      total[a] += cf[a];
    }
  }
  return incurred - *std::min_element(total.begin(), total.end());
}

inline double brute_force_counterfactual_regret(const TreePlex& tree, const PlayerHistory& h,
                                                std::size_t j) {
  return brute_force_counterfactual_regret(tree, h, j, h.size());
}

}  // namespace spcfr
