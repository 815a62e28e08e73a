#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spcfr/errors.hpp"

namespace spcfr {

// ---------------------------------------------------------------------------
// Recursive description used to build a TreePlex. Builders assemble one of
// these and hand it to the TreePlex constructor, which flattens it.
// ---------------------------------------------------------------------------

struct DecisionSpec;
struct SignalSpec;

struct ObservationSpec {
  std::vector<SignalSpec> signals;
};

struct ActionSpec {
  std::string label;
  std::optional<ObservationSpec> next;  // nullopt: the process ends after this action
};

struct DecisionSpec {
  std::string label;
  std::vector<ActionSpec> actions;
};

struct SignalSpec {
  std::string label;
  DecisionSpec decision;
};

enum class NodeKind { decision, observation };

struct NodeRef {
  NodeKind kind;
  std::size_t index;

  friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

struct DecisionNode {
  std::string label;
  std::vector<std::string> actions;
  std::vector<std::optional<std::size_t>> children;  // rho(j, a): observation index per action
  std::optional<std::size_t> parent;                 // observation node above, if any
  std::optional<std::size_t> parent_sequence;        // last sequence before this node
  std::size_t first_sequence = 0;                    // sequences of j are [first, first + n_j)
  std::size_t subtree_end = 0;                       // one past the last sequence at or below j

  std::size_t num_actions() const { return actions.size(); }
};

struct ObservationNode {
  std::vector<std::string> signals;
  std::vector<std::size_t> children;  // rho(k, s): decision index per signal
  std::size_t parent = 0;             // decision node above
  std::size_t parent_action = 0;
  std::size_t first_sequence = 0;
  std::size_t subtree_end = 0;

  std::size_t num_signals() const { return signals.size(); }
};

/// Half-open range of sequence indices.
struct SequenceRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool contains(std::size_t s) const { return s >= begin && s < end; }
};

/// Sequential decision process with a decision-node root.
///
/// Decision and observation nodes are numbered in depth-first pre-order and
/// sequences are numbered in the same traversal: the n_j sequences of j come
/// first, followed by the subtrees of its actions in declared order. Every
/// slice [v]_{down j} is therefore a contiguous range, and every child node
/// has a larger index than its parent.
class TreePlex {
 public:
  TreePlex() = default;

  explicit TreePlex(const DecisionSpec& root) {
    flatten_decision(root, std::nullopt, std::nullopt);
    for (std::size_t j = 0; j < decisions_.size(); ++j) {
      for (std::size_t a = 0; a < decisions_[j].num_actions(); ++a) {
        owner_.push_back(j);
        action_.push_back(a);
      }
    }
  }

  std::size_t num_sequences() const { return owner_.size(); }
  std::size_t num_decisions() const { return decisions_.size(); }
  std::size_t num_observations() const { return observations_.size(); }
  std::size_t root() const { return 0; }

  const DecisionNode& decision(std::size_t j) const {
    check_decision(j);
    return decisions_[j];
  }
  const ObservationNode& observation(std::size_t k) const {
    if (k >= observations_.size()) {
      throw StructuralError("unknown observation node " + std::to_string(k));
    }
    return observations_[k];
  }
  std::span<const DecisionNode> decisions() const { return decisions_; }
  std::span<const ObservationNode> observations() const { return observations_; }

  std::size_t sequence(std::size_t j, std::size_t a) const {
    const auto& node = decision(j);
    if (a >= node.num_actions()) {
      throw StructuralError("action " + std::to_string(a) + " out of range at decision " +
                            std::to_string(j));
    }
    return node.first_sequence + a;
  }

  /// Decision node owning sequence s, and the action index within it.
  std::size_t sequence_owner(std::size_t s) const { return owner_.at(s); }
  std::size_t sequence_action(std::size_t s) const { return action_.at(s); }

  /// [v]_j: the n_j entries of decision node j.
  SequenceRange local_range(std::size_t j) const {
    const auto& node = decision(j);
    return {node.first_sequence, node.first_sequence + node.num_actions()};
  }

  /// [v]_{down j}: entries at or below decision node j.
  SequenceRange subtree_range(std::size_t j) const {
    const auto& node = decision(j);
    return {node.first_sequence, node.subtree_end};
  }

  SequenceRange subtree_range(NodeRef v) const {
    if (v.kind == NodeKind::decision) return subtree_range(v.index);
    const auto& node = observation(v.index);
    return {node.first_sequence, node.subtree_end};
  }

  /// Decision nodes whose parent observation hangs off (j, a); empty if none.
  std::span<const std::size_t> children_of(std::size_t j, std::size_t a) const {
    const auto& node = decision(j);
    const auto k = node.children.at(a);
    if (!k) return {};
    return observations_[*k].children;
  }

  /// Longest root-to-leaf path counted in decision nodes.
  std::size_t decision_depth() const {
    std::vector<std::size_t> depth(decisions_.size(), 1);
    std::size_t best = 0;
    for (std::size_t j = 0; j < decisions_.size(); ++j) {
      if (const auto& p = decisions_[j].parent) {
        depth[j] = depth[observations_[*p].parent] + 1;
      }
      best = std::max(best, depth[j]);
    }
    return best;
  }

 private:
  void check_decision(std::size_t j) const {
    if (j >= decisions_.size()) {
      throw StructuralError("unknown decision node " + std::to_string(j));
    }
  }

  std::size_t flatten_decision(const DecisionSpec& spec, std::optional<std::size_t> parent,
                               std::optional<std::size_t> parent_sequence) {
    if (spec.actions.empty()) {
      throw StructuralError("decision node '" + spec.label + "' has no actions");
    }
    const std::size_t j = decisions_.size();
    decisions_.emplace_back();
    {
      auto& node = decisions_[j];
      node.label = spec.label;
      node.parent = parent;
      node.parent_sequence = parent_sequence;
      node.first_sequence = next_sequence_;
      for (const auto& action : spec.actions) node.actions.push_back(action.label);
      node.children.assign(spec.actions.size(), std::nullopt);
    }
    next_sequence_ += spec.actions.size();
    const std::size_t first = decisions_[j].first_sequence;
    for (std::size_t a = 0; a < spec.actions.size(); ++a) {
      if (const auto& next = spec.actions[a].next) {
        const auto k = flatten_observation(*next, j, a, first + a);
        decisions_[j].children[a] = k;
      }
    }
    decisions_[j].subtree_end = next_sequence_;
    return j;
  }

  std::size_t flatten_observation(const ObservationSpec& spec, std::size_t parent,
                                  std::size_t parent_action, std::size_t parent_sequence) {
    if (spec.signals.empty()) {
      throw StructuralError("observation node below decision " + std::to_string(parent) +
                            " has no signals");
    }
    const std::size_t k = observations_.size();
    observations_.emplace_back();
    observations_[k].parent = parent;
    observations_[k].parent_action = parent_action;
    observations_[k].first_sequence = next_sequence_;
    for (const auto& signal : spec.signals) {
      observations_[k].signals.push_back(signal.label);
      const auto child = flatten_decision(signal.decision, k, parent_sequence);
      observations_[k].children.push_back(child);
    }
    observations_[k].subtree_end = next_sequence_;
    return k;
  }

  std::vector<DecisionNode> decisions_;
  std::vector<ObservationNode> observations_;
  std::vector<std::size_t> owner_;
  std::vector<std::size_t> action_;
  std::size_t next_sequence_ = 0;
};

// ---------------------------------------------------------------------------
// Strategy and loss vectors
// ---------------------------------------------------------------------------

inline constexpr double kSimplexTolerance = 1e-9;

/// One simplex point per decision node, stored flat in sequence order:
/// probs[tree.sequence(j, a)] is the probability of a at j.
struct BehavioralStrategy {
  std::vector<double> probs;

  std::span<const double> at(const TreePlex& tree, std::size_t j) const {
    const auto r = tree.local_range(j);
    return std::span<const double>(probs).subspan(r.begin, r.size());
  }
  std::span<double> at(const TreePlex& tree, std::size_t j) {
    const auto r = tree.local_range(j);
    return std::span<double>(probs).subspan(r.begin, r.size());
  }

  static BehavioralStrategy uniform(const TreePlex& tree) {
    BehavioralStrategy b;
    b.probs.resize(tree.num_sequences());
    for (std::size_t j = 0; j < tree.num_decisions(); ++j) {
      auto p = b.at(tree, j);
      std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
    }
    return b;
  }
};

enum class VectorKind { strategy, loss, prediction };

struct SequenceFormVector {
  std::vector<double> values;
  VectorKind kind = VectorKind::strategy;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t s) const { return values[s]; }
  double& operator[](std::size_t s) { return values[s]; }
};

inline void require_dimension(const TreePlex& tree, std::size_t size, const char* what) {
  if (size != tree.num_sequences()) {
    throw StructuralError(std::string(what) + " has " + std::to_string(size) +
                          " entries, treeplex has " + std::to_string(tree.num_sequences()) +
                          " sequences");
  }
}

/// Mass flowing into decision node j: 1 at the root, else the parent sequence.
inline double parent_mass(const TreePlex& tree, std::span<const double> v, std::size_t j) {
  const auto& p = tree.decision(j).parent_sequence;
  return p ? v[*p] : 1.0;
}

inline bool is_behavioral(const TreePlex& tree, const BehavioralStrategy& b,
                          double tol = kSimplexTolerance) {
  if (b.probs.size() != tree.num_sequences()) return false;
  for (std::size_t j = 0; j < tree.num_decisions(); ++j) {
    double sum = 0.0;
    for (double p : b.at(tree, j)) {
      if (!(p >= -tol && p <= 1.0 + tol)) return false;
      sum += p;
    }
    if (std::abs(sum - 1.0) > tol) return false;
  }
  return true;
}

/// Largest violation of sum_a v[(j,a)] = parent mass over all decision nodes.
inline double flow_conservation_residual(const TreePlex& tree, std::span<const double> v) {
  require_dimension(tree, v.size(), "sequence-form vector");
  double worst = 0.0;
  for (std::size_t j = 0; j < tree.num_decisions(); ++j) {
    const auto r = tree.local_range(j);
    double sum = 0.0;
    for (std::size_t s = r.begin; s < r.end; ++s) sum += v[s];
    worst = std::max(worst, std::abs(sum - parent_mass(tree, v, j)));
  }
  return worst;
}

inline bool is_sequence_form_strategy(const TreePlex& tree, std::span<const double> v,
                                      double tol = kSimplexTolerance) {
  if (v.size() != tree.num_sequences()) return false;
  for (double x : v) {
    if (!(x >= -tol)) return false;
  }
  return flow_conservation_residual(tree, v) <= tol;
}

inline SequenceFormVector to_sequence_form(const TreePlex& tree, const BehavioralStrategy& b) {
  require_dimension(tree, b.probs.size(), "behavioral strategy");
  SequenceFormVector out{std::vector<double>(tree.num_sequences()), VectorKind::strategy};
  // Pre-order guarantees the parent sequence is filled before its children.
  for (std::size_t j = 0; j < tree.num_decisions(); ++j) {
    const double mass = parent_mass(tree, out.values, j);
    const auto r = tree.local_range(j);
    for (std::size_t s = r.begin; s < r.end; ++s) out.values[s] = mass * b.probs[s];
  }
  return out;
}

/// Inverse of to_sequence_form. Decision nodes reached with zero parent mass
/// get the uniform distribution.
inline BehavioralStrategy to_behavioral(const TreePlex& tree, std::span<const double> v) {
  require_dimension(tree, v.size(), "sequence-form vector");
  BehavioralStrategy b;
  b.probs.resize(tree.num_sequences());
  for (std::size_t j = 0; j < tree.num_decisions(); ++j) {
    const double mass = parent_mass(tree, v, j);
    const auto r = tree.local_range(j);
    if (mass > 0.0) {
      double sum = 0.0;
      for (std::size_t s = r.begin; s < r.end; ++s) sum += v[s];
      // Normalise by the local sum: equals the parent mass up to rounding,
      // and keeps the output exactly on the simplex.
      const double denom = sum > 0.0 ? sum : mass;
      for (std::size_t s = r.begin; s < r.end; ++s) b.probs[s] = std::max(0.0, v[s]) / denom;
    } else {
      for (std::size_t s = r.begin; s < r.end; ++s) {
        b.probs[s] = 1.0 / static_cast<double>(r.size());
      }
    }
  }
  return b;
}

inline BehavioralStrategy to_behavioral(const TreePlex& tree, const SequenceFormVector& v) {
  return to_behavioral(tree, std::span<const double>(v.values));
}

/// [v]_{down j}, in sequence-index order.
inline std::vector<double> slice_down(const TreePlex& tree, std::span<const double> v,
                                      std::size_t j) {
  require_dimension(tree, v.size(), "sequence-form vector");
  const auto r = tree.subtree_range(j);
  return {v.begin() + static_cast<std::ptrdiff_t>(r.begin),
          v.begin() + static_cast<std::ptrdiff_t>(r.end)};
}

/// Decision nodes at or below j, as a contiguous pre-order index range.
inline std::pair<std::size_t, std::size_t> subtree_decisions(const TreePlex& tree, std::size_t j) {
  const auto range = tree.subtree_range(j);
  std::size_t e = j + 1;
  while (e < tree.num_decisions() && range.contains(tree.decision(e).first_sequence)) ++e;
  return {j, e};
}

/// Subtree-local sequence form of the behavioral strategy rooted at decision
/// node j: entries cover tree.subtree_range(j), with j's own actions taken
/// as if j were reached with probability 1.
inline std::vector<double> subtree_sequence_form(const TreePlex& tree,
                                                 std::span<const double> behavioral,
                                                 std::size_t j) {
  require_dimension(tree, behavioral.size(), "behavioral strategy");
  const auto range = tree.subtree_range(j);
  std::vector<double> out(range.size());
  const auto [first, last] = subtree_decisions(tree, j);
  for (std::size_t d = first; d < last; ++d) {
    const auto& node = tree.decision(d);
    const double mass = d == j ? 1.0 : out[*node.parent_sequence - range.begin];
    for (std::size_t a = 0; a < node.num_actions(); ++a) {
      const std::size_t s = node.first_sequence + a;
      out[s - range.begin] = mass * behavioral[s];
    }
  }
  return out;
}

/// Upper bounds B_v on the 2-norm of any subtree-local sequence-form vector.
struct NormBounds {
  std::vector<double> decision;
  std::vector<double> observation;
};

inline NormBounds subtree_norm_bounds(const TreePlex& tree) {
  NormBounds bounds{std::vector<double>(tree.num_decisions(), 0.0),
                    std::vector<double>(tree.num_observations(), 0.0)};
  // Children always carry larger indices, so reverse order is bottom-up.
  for (std::size_t j = tree.num_decisions(); j-- > 0;) {
    const auto& node = tree.decision(j);
    double worst_child = 0.0;
    for (const auto& child : node.children) {
      if (!child) continue;
      double sum = 0.0;
      for (std::size_t c : tree.observation(*child).children) sum += bounds.decision[c] * bounds.decision[c];
      bounds.observation[*child] = std::sqrt(sum);
      worst_child = std::max(worst_child, sum);
    }
    bounds.decision[j] = std::sqrt(1.0 + worst_child);
  }
  return bounds;
}

}  // namespace spcfr
