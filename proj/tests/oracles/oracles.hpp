#pragma once

// Reference implementations used only by tests. They walk the extensive-form
// game or the treeplex recursively and never call the solver's own
// evaluation routines.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "spcfr/efg.hpp"
#include "spcfr/treeplex.hpp"

namespace oracle {

using spcfr::ExtensiveFormGame;
using spcfr::TreePlex;

// ---------------------------------------------------------------------------
// Tree walk over the extensive-form game
// ---------------------------------------------------------------------------

inline std::map<std::string, std::size_t> label_index(const TreePlex& tree) {
  std::map<std::string, std::size_t> out;
  for (std::size_t j = 0; j < tree.num_decisions(); ++j) out[tree.decision(j).label] = j;
  return out;
}

/// Expected utility of player 1 when both players follow the given
/// behavioral strategies (flat per-sequence probabilities).
inline double tree_walk_payoff(const ExtensiveFormGame& g, const TreePlex& tx, const std::vector<double>& bx,
                               const TreePlex& ty, const std::vector<double>& by) {
  const auto ix = label_index(tx), iy = label_index(ty);
  std::function<double(std::size_t)> walk = [&](std::size_t n) -> double {
    const auto& node = g.nodes[n];
    if (const auto* t = std::get_if<spcfr::TerminalNode>(&node.data)) return t->payoff;
    if (const auto* c = std::get_if<spcfr::ChanceNode>(&node.data)) {
      double v = 0.0;
      for (std::size_t i = 0; i < c->children.size(); ++i) {
        if (c->probs[i] != 0.0) v += c->probs[i] * walk(c->children[i]);
      }
      return v;
    }
    const auto& p = std::get<spcfr::PlayerNode>(node.data);
    const auto& tree = p.player == 1 ? tx : ty;
    const auto& b = p.player == 1 ? bx : by;
    const std::size_t j = (p.player == 1 ? ix : iy).at(p.infoset);
    double v = 0.0;
    for (std::size_t a = 0; a < p.children.size(); ++a) {
      const double pr = b[tree.decision(j).first_sequence + a];
      if (pr != 0.0) v += pr * walk(p.children[a]);
    }
    return v;
  };
  return walk(g.root);
}

// ---------------------------------------------------------------------------
// Pure strategies
// ---------------------------------------------------------------------------

/// Every deterministic behavioral strategy (one action per decision node,
/// including nodes the strategy itself never reaches). Throws above `limit`.
inline std::vector<std::vector<double>> pure_behavioral(const TreePlex& tree, std::size_t limit = 1 << 16) {
  double count = 1.0;
  for (std::size_t j = 0; j < tree.num_decisions(); ++j) count *= static_cast<double>(tree.decision(j).num_actions());
  if (count > static_cast<double>(limit)) throw std::length_error("too many pure strategies");
  std::vector<std::vector<double>> out;
  std::vector<std::size_t> choice(tree.num_decisions(), 0);
  while (true) {
    std::vector<double> b(tree.num_sequences(), 0.0);
    for (std::size_t j = 0; j < tree.num_decisions(); ++j) b[tree.decision(j).first_sequence + choice[j]] = 1.0;
    out.push_back(std::move(b));
    std::size_t j = 0;
    while (j < choice.size() && ++choice[j] == tree.decision(j).num_actions()) choice[j++] = 0;
    if (j == choice.size()) break;
  }
  return out;
}

/// Sequence form by walking down from the root: the mass of a sequence is
/// the product of behavioral probabilities on its path.
inline std::vector<double> realization_plan(const TreePlex& tree, const std::vector<double>& b) {
  std::vector<double> x(tree.num_sequences(), 0.0);
  std::function<void(std::size_t, double)> down = [&](std::size_t j, double mass) {
    const auto& node = tree.decision(j);
    for (std::size_t a = 0; a < node.num_actions(); ++a) {
      const double m = mass * b[node.first_sequence + a];
      x[node.first_sequence + a] = m;
      if (node.children[a]) {
        for (std::size_t c : tree.observation(*node.children[a]).children) down(c, m);
      }
    }
  };
  down(tree.root(), 1.0);
  return x;
}

/// Subtree-local realization plans of every deterministic strategy below
/// decision node j.
inline std::vector<std::vector<double>> subtree_vertices(const TreePlex& tree, std::size_t j) {
  const auto& node = tree.decision(j);
  const std::size_t base = node.first_sequence, width = node.subtree_end - node.first_sequence;
  std::vector<std::vector<double>> out;
  for (std::size_t a = 0; a < node.num_actions(); ++a) {
    std::vector<std::vector<double>> partial{std::vector<double>(width, 0.0)};
    partial[0][a] = 1.0;
    if (node.children[a]) {
      for (std::size_t c : tree.observation(*node.children[a]).children) {
        const auto sub = subtree_vertices(tree, c);
        const std::size_t off = tree.decision(c).first_sequence - base;
        std::vector<std::vector<double>> next;
        for (const auto& p : partial) {
          for (const auto& s : sub) {
            auto v = p;
            for (std::size_t i = 0; i < s.size(); ++i) v[off + i] = s[i];
            next.push_back(std::move(v));
          }
        }
        partial = std::move(next);
      }
    }
    out.insert(out.end(), partial.begin(), partial.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Matrix games by the simplex method
// ---------------------------------------------------------------------------

struct MatrixGameSolution {
  double value = 0.0;
  std::vector<double> row;  // maximizer
  std::vector<double> col;  // minimizer
};

/// max_row min_col row^T M col. Shifts M to be positive, then solves
/// max sum(w) s.t. M w <= 1, w >= 0 with Bland's rule.
inline MatrixGameSolution solve_matrix_game(const std::vector<std::vector<double>>& M) {
  const std::size_t m = M.size(), n = M.at(0).size();
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& r : M) lo = std::min(lo, *std::min_element(r.begin(), r.end()));
  const double shift = 1.0 - lo;
  // Tableau: m constraint rows + objective row; columns n vars, m slacks, rhs.
  const std::size_t cols = n + m + 1;
  std::vector<std::vector<double>> tab(m + 1, std::vector<double>(cols, 0.0));
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < n; ++k) tab[i][k] = M[i][k] + shift;
    tab[i][n + i] = 1.0;
    tab[i][cols - 1] = 1.0;
    basis[i] = n + i;
  }
  for (std::size_t k = 0; k < n; ++k) tab[m][k] = -1.0;
  const double eps = 1e-12;
  for (int iter = 0; iter < 100000; ++iter) {
    std::size_t enter = cols;
    for (std::size_t k = 0; k + 1 < cols; ++k) {
      if (tab[m][k] < -eps) {
        enter = k;
        break;
      }
    }
    if (enter == cols) break;
    std::size_t leave = m;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      if (tab[i][enter] > eps) {
        const double ratio = tab[i][cols - 1] / tab[i][enter];
        if (ratio < best - eps || (std::abs(ratio - best) <= eps && basis[i] < basis[leave])) {
          best = ratio;
          leave = i;
        }
      }
    }
    if (leave == m) throw std::runtime_error("unbounded LP");
    const double piv = tab[leave][enter];
    for (auto& v : tab[leave]) v /= piv;
    for (std::size_t i = 0; i <= m; ++i) {
      if (i == leave || tab[i][enter] == 0.0) continue;
      const double f = tab[i][enter];
      for (std::size_t k = 0; k < cols; ++k) tab[i][k] -= f * tab[leave][k];
    }
    basis[leave] = enter;
  }
  const double total = tab[m][cols - 1];
  MatrixGameSolution s;
  s.value = 1.0 / total - shift;
  s.col.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < n) s.col[basis[i]] = tab[i][cols - 1] / total;
  }
  s.row.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) s.row[i] = tab[m][n + i] / total;
  return s;
}

/// Normal form of the game over every pure strategy of each player,
/// evaluated by tree walk.
struct NormalForm {
  std::vector<std::vector<double>> pure_x, pure_y;  // behavioral
  std::vector<std::vector<double>> matrix;
};

inline NormalForm normal_form(const ExtensiveFormGame& g, const TreePlex& tx, const TreePlex& ty) {
  NormalForm nf{pure_behavioral(tx), pure_behavioral(ty), {}};
  nf.matrix.assign(nf.pure_x.size(), std::vector<double>(nf.pure_y.size()));
  for (std::size_t i = 0; i < nf.pure_x.size(); ++i) {
    for (std::size_t k = 0; k < nf.pure_y.size(); ++k) {
      nf.matrix[i][k] = tree_walk_payoff(g, tx, nf.pure_x[i], ty, nf.pure_y[k]);
    }
  }
  return nf;
}

/// Mixed strategy over pure strategies, as a realization plan.
inline std::vector<double> mix(const TreePlex& tree, const std::vector<std::vector<double>>& pure,
                               const std::vector<double>& weights) {
  std::vector<double> out(tree.num_sequences(), 0.0);
  for (std::size_t i = 0; i < pure.size(); ++i) {
    if (weights[i] == 0.0) continue;
    const auto x = realization_plan(tree, pure[i]);
    for (std::size_t s = 0; s < x.size(); ++s) out[s] += weights[i] * x[s];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Treeplex recursion
// ---------------------------------------------------------------------------

/// Expected loss of the subtree at j: play `local` at j and follow
/// `behavioral` at every decision node below it.
inline double subtree_expected_loss(const TreePlex& tree, std::size_t j, const std::vector<double>& local,
                                    const std::vector<double>& loss, const std::vector<double>& behavioral) {
  const auto& node = tree.decision(j);
  double v = 0.0;
  for (std::size_t a = 0; a < node.num_actions(); ++a) {
    double entry = loss[node.first_sequence + a];
    if (node.children[a]) {
      for (std::size_t c : tree.observation(*node.children[a]).children) {
        const auto& child = tree.decision(c);
        std::vector<double> lc(behavioral.begin() + static_cast<std::ptrdiff_t>(child.first_sequence),
                               behavioral.begin() + static_cast<std::ptrdiff_t>(child.first_sequence +
                                                                                 child.num_actions()));
        entry += subtree_expected_loss(tree, c, lc, loss, behavioral);
      }
    }
    v += local[a] * entry;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Grid search on the 2-simplex
// ---------------------------------------------------------------------------

/// argmin over (p, 1-p), p on a grid of the given step, of f.
inline double grid_argmin(const std::function<double(double)>& f, double step) {
  double best_p = 0.0, best = std::numeric_limits<double>::infinity();
  const auto n = static_cast<std::size_t>(std::llround(1.0 / step));
  for (std::size_t i = 0; i <= n; ++i) {
    const double p = static_cast<double>(i) * step;
    const double v = f(p);
    if (v < best) {
      best = v;
      best_p = p;
    }
  }
  return best_p;
}

// ---------------------------------------------------------------------------
// Random treeplex builder
// ---------------------------------------------------------------------------

inline spcfr::DecisionSpec random_decision_spec(std::mt19937_64& rng, int depth, const std::string& label) {
  std::uniform_int_distribution<int> actions(1, 3), signals(1, 2), coin(0, 2);
  spcfr::DecisionSpec d;
  d.label = label;
  const int n = actions(rng);
  for (int a = 0; a < n; ++a) {
    spcfr::ActionSpec act{label + "/a" + std::to_string(a), std::nullopt};
    if (depth > 1 && coin(rng) != 0) {
      spcfr::ObservationSpec obs;
      const int k = signals(rng);
      for (int s = 0; s < k; ++s) {
        const std::string sl = label + "/a" + std::to_string(a) + "s" + std::to_string(s);
        obs.signals.push_back({sl, random_decision_spec(rng, depth - 1, sl)});
      }
      act.next = std::move(obs);
    }
    d.actions.push_back(std::move(act));
  }
  return d;
}

inline TreePlex random_treeplex(std::uint64_t seed, int depth) {
  std::mt19937_64 rng(seed);
  return TreePlex(random_decision_spec(rng, depth, "r"));
}

inline std::vector<double> random_behavioral(const TreePlex& tree, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> b(tree.num_sequences());
  for (std::size_t j = 0; j < tree.num_decisions(); ++j) {
    const auto r = tree.local_range(j);
    double sum = 0.0;
    for (std::size_t s = r.begin; s < r.end; ++s) sum += b[s] = u(rng);
    for (std::size_t s = r.begin; s < r.end; ++s) b[s] /= sum;
  }
  return b;
}

}  // namespace oracle
