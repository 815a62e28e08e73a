#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "spcfr/efg.hpp"
#include "spcfr/errors.hpp"
#include "spcfr/treeplex.hpp"

namespace spcfr {

struct PayoffEntry {
  std::size_t x = 0;  // sequence index in treeplex_x
  std::size_t y = 0;  // sequence index in treeplex_y
  double value = 0.0;

  friend bool operator==(const PayoffEntry&, const PayoffEntry&) = default;
};

/// Bilinear saddle-point form of a two-player zero-sum game.
///
/// `payoff` holds A from player 1's (x's) perspective: x^T A y is the
/// expected utility of player 1. Player 1 maximises it, player 2 minimises
/// it. The solver works with losses -A y for x and A^T x for y.
struct GameInstance {
  std::string name;
  TreePlex treeplex_x;
  TreePlex treeplex_y;
  std::vector<PayoffEntry> payoff;  // sorted by (x, y), no duplicates
  double payoff_norm = 0.0;         // upper bound on ||A||_op (2-norm)
  double loss_scale = 1.0;          // multiplies losses fed to regret minimizers
  double big_blind = 1.0;           // unit for mbb/g reporting
};

// ---------------------------------------------------------------------------
// Sparse products
// ---------------------------------------------------------------------------

/// A y, one entry per x-sequence.
inline std::vector<double> payoff_times_y(const GameInstance& g, std::span<const double> y) {
  require_dimension(g.treeplex_y, y.size(), "y strategy");
  std::vector<double> out(g.treeplex_x.num_sequences(), 0.0);
  for (const auto& e : g.payoff) out[e.x] += e.value * y[e.y];
  return out;
}

/// A^T x, one entry per y-sequence.
inline std::vector<double> payoff_transpose_times_x(const GameInstance& g,
                                                    std::span<const double> x) {
  require_dimension(g.treeplex_x, x.size(), "x strategy");
  std::vector<double> out(g.treeplex_y.num_sequences(), 0.0);
  for (const auto& e : g.payoff) out[e.y] += e.value * x[e.x];
  return out;
}

inline double expected_payoff(const GameInstance& g, std::span<const double> x,
                              std::span<const double> y) {
  require_dimension(g.treeplex_x, x.size(), "x strategy");
  require_dimension(g.treeplex_y, y.size(), "y strategy");
  double total = 0.0;
  for (const auto& e : g.payoff) total += x[e.x] * e.value * y[e.y];
  return total;
}

inline double expected_payoff(const GameInstance& g, const SequenceFormVector& x,
                              const SequenceFormVector& y) {
  return expected_payoff(g, std::span<const double>(x.values), std::span<const double>(y.values));
}

// ---------------------------------------------------------------------------
// Operator norm
// ---------------------------------------------------------------------------

/// min(Frobenius, sqrt(max row sum * max column sum)); both bound ||A||_2.
inline double operator_norm_upper_bound(const GameInstance& g) {
  std::vector<double> rows(g.treeplex_x.num_sequences(), 0.0);
  std::vector<double> cols(g.treeplex_y.num_sequences(), 0.0);
  double frob = 0.0;
  for (const auto& e : g.payoff) {
    rows[e.x] += std::abs(e.value);
    cols[e.y] += std::abs(e.value);
    frob += e.value * e.value;
  }
  const double r = rows.empty() ? 0.0 : *std::max_element(rows.begin(), rows.end());
  const double c = cols.empty() ? 0.0 : *std::max_element(cols.begin(), cols.end());
  return std::min(std::sqrt(frob), std::sqrt(r * c));
}

/// Power iteration on A^T A; a lower estimate of ||A||_2.
inline double power_iteration_norm(const GameInstance& g, int iterations = 500) {
  const std::size_t m = g.treeplex_y.num_sequences();
  if (m == 0 || g.payoff.empty()) return 0.0;
  std::vector<double> v(m);
  // Deterministic, non-degenerate start vector.
  for (std::size_t i = 0; i < m; ++i) v[i] = 1.0 + 0.01 * static_cast<double>(i % 7);
  double estimate = 0.0;
  for (int it = 0; it < iterations; ++it) {
    double norm = 0.0;
    for (double a : v) norm += a * a;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (double& a : v) a /= norm;
    const auto av = payoff_times_y(g, v);
    double av_norm = 0.0;
    for (double a : av) av_norm += a * a;
    estimate = std::sqrt(av_norm);
    v = payoff_transpose_times_x(g, av);
  }
  return estimate;
}

/// Fills payoff_norm and loss_scale. loss_scale = 1/(3 ||A|| B_x B_y), so
/// every counterfactual loss and prediction has 2-norm at most 1/3.
inline void finalize_scaling(GameInstance& g) {
  g.payoff_norm = operator_norm_upper_bound(g);
  if (power_iteration_norm(g, 50) > g.payoff_norm * (1.0 + 1e-9)) {
    throw std::logic_error("operator norm bound below power-iteration estimate");
  }
  const double bx = subtree_norm_bounds(g.treeplex_x).decision[g.treeplex_x.root()];
  const double by = subtree_norm_bounds(g.treeplex_y).decision[g.treeplex_y.root()];
  g.loss_scale = g.payoff_norm > 0.0 ? 1.0 / (3.0 * g.payoff_norm * bx * by) : 1.0;
}

inline GameInstance scaled_payoffs(GameInstance g, double factor) {
  for (auto& e : g.payoff) e.value *= factor;
  finalize_scaling(g);
  return g;
}

// ---------------------------------------------------------------------------
// Extensive form -> sequence form
// ---------------------------------------------------------------------------

namespace detail {

/// Per-player view of an extensive-form game: infosets in first-visit DFS
/// order, keyed by the owner's parent sequence.
struct PlayerView {
  struct Infoset {
    std::string label;
    std::vector<std::string> actions;
    std::optional<std::pair<std::size_t, std::size_t>> parent;  // (infoset, action)
  };
  std::vector<Infoset> infosets;
  std::map<std::string, std::size_t> by_label;
  bool terminal_without_move = false;  // some terminal is reached before the player acts

  std::map<std::optional<std::pair<std::size_t, std::size_t>>, std::vector<std::size_t>> children;

  void index_children() {
    children.clear();
    for (std::size_t i = 0; i < infosets.size(); ++i) children[infosets[i].parent].push_back(i);
  }

  std::span<const std::size_t> children_of(std::optional<std::pair<std::size_t, std::size_t>> p) const {
    const auto it = children.find(p);
    if (it == children.end()) return {};
    return it->second;
  }
};

inline DecisionSpec build_decision_spec(const PlayerView& view, std::size_t i) {
  DecisionSpec spec;
  spec.label = view.infosets[i].label;
  for (std::size_t a = 0; a < view.infosets[i].actions.size(); ++a) {
    ActionSpec action{view.infosets[i].actions[a], std::nullopt};
    const auto kids = view.children_of(std::make_pair(i, a));
    if (!kids.empty()) {
      ObservationSpec obs;
      for (auto c : kids) obs.signals.push_back(SignalSpec{view.infosets[c].label, build_decision_spec(view, c)});
      action.next = std::move(obs);
    }
    spec.actions.push_back(std::move(action));
  }
  return spec;
}

/// Treeplex plus the sequence index of every (infoset, action) pair and of
/// the empty sequence (the dummy root's single action, when present).
struct PlayerTreeplex {
  TreePlex tree;
  std::vector<std::size_t> infoset_decision;  // infoset index -> decision index
  std::optional<std::size_t> empty_sequence;
};

inline PlayerTreeplex build_player_treeplex(const PlayerView& view) {
  const auto top = view.children_of(std::nullopt);
  const bool dummy = top.size() != 1 || view.terminal_without_move;
  DecisionSpec root;
  if (dummy) {
    root.label = "root";
    ActionSpec start{"start", std::nullopt};
    if (!top.empty()) {
      ObservationSpec obs;
      for (auto c : top) obs.signals.push_back(SignalSpec{view.infosets[c].label, build_decision_spec(view, c)});
      start.next = std::move(obs);
    }
    root.actions.push_back(std::move(start));
  } else {
    root = build_decision_spec(view, top.front());
  }
  PlayerTreeplex out{TreePlex(root), std::vector<std::size_t>(view.infosets.size()), std::nullopt};
  const std::size_t offset = dummy ? 1 : 0;
  for (std::size_t j = offset; j < out.tree.num_decisions(); ++j) {
    out.infoset_decision[view.by_label.at(out.tree.decision(j).label)] = j;
  }
  if (dummy) out.empty_sequence = out.tree.sequence(0, 0);
  return out;
}

}  // namespace detail

/// Sequence-form (two treeplexes + sparse payoff matrix) of a validated game.
/// Chance probabilities are folded into the payoff entries.
inline GameInstance to_sequence_form_game(const ExtensiveFormGame& efg, std::string name = "game") {
  validate(efg);

  detail::PlayerView views[2];
  using Seq = std::optional<std::pair<std::size_t, std::size_t>>;
  struct Leaf {
    Seq last[2];
    double weight;
    double payoff;
  };
  std::vector<Leaf> leaves;

  struct Frame {
    std::size_t node;
    Seq last[2];
    double reach;
  };
  std::vector<Frame> stack{Frame{efg.root, {std::nullopt, std::nullopt}, 1.0}};
  while (!stack.empty()) {
    const Frame frame = stack.back();
    stack.pop_back();
    const auto& node = efg.nodes[frame.node];
    if (const auto* p = std::get_if<PlayerNode>(&node.data)) {
      auto& view = views[p->player - 1];
      auto [it, inserted] = view.by_label.try_emplace(p->infoset, view.infosets.size());
      if (inserted) {
        view.infosets.push_back({p->infoset, p->actions, frame.last[p->player - 1]});
      }
      const std::size_t info = it->second;
      for (std::size_t a = p->children.size(); a-- > 0;) {
        Frame next = frame;
        next.node = p->children[a];
        next.last[p->player - 1] = std::make_pair(info, a);
        stack.push_back(next);
      }
    } else if (const auto* c = std::get_if<ChanceNode>(&node.data)) {
      for (std::size_t i = c->children.size(); i-- > 0;) {
        Frame next = frame;
        next.node = c->children[i];
        next.reach *= c->probs[i];
        stack.push_back(next);
      }
    } else {
      const auto& t = std::get<TerminalNode>(node.data);
      leaves.push_back(Leaf{{frame.last[0], frame.last[1]}, frame.reach, t.payoff});
      for (int p = 0; p < 2; ++p) {
        if (!frame.last[p]) views[p].terminal_without_move = true;
      }
    }
  }

  views[0].index_children();
  views[1].index_children();
  const auto px = detail::build_player_treeplex(views[0]);
  const auto py = detail::build_player_treeplex(views[1]);
  const auto seq_index = [](const detail::PlayerTreeplex& pt, const Seq& s) {
    if (!s) return *pt.empty_sequence;
    return pt.tree.sequence(pt.infoset_decision[s->first], s->second);
  };

  std::map<std::pair<std::size_t, std::size_t>, double> merged;
  for (const auto& leaf : leaves) {
    if (leaf.weight == 0.0) continue;
    merged[{seq_index(px, leaf.last[0]), seq_index(py, leaf.last[1])}] += leaf.weight * leaf.payoff;
  }

  GameInstance g;
  g.name = std::move(name);
  g.treeplex_x = px.tree;
  g.treeplex_y = py.tree;
  g.payoff.reserve(merged.size());
  for (const auto& [key, value] : merged) g.payoff.push_back({key.first, key.second, value});
  finalize_scaling(g);
  return g;
}

}  // namespace spcfr
