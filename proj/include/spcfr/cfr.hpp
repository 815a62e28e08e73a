#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "spcfr/errors.hpp"
#include "spcfr/local_rm.hpp"
#include "spcfr/stability.hpp"
#include "spcfr/treeplex.hpp"

namespace spcfr {

/// Counterfactual vector at decision node j for a sequence-form loss (or
/// prediction) `vec`, given the behavioral decisions below j:
///
///   out[a] = vec[(j,a)] + sum over j' in C_{ja} of <[vec]_{down j'}, x_{j'}>
///
/// where x_{j'} is the subtree-local sequence form at j'. Only the entries of
/// `behavioral` strictly below j are read; NaN marks a missing decision.
inline std::vector<double> counterfactual_vector(const TreePlex& tree, std::size_t j,
                                                 std::span<const double> vec,
                                                 std::span<const double> behavioral) {
  require_dimension(tree, vec.size(), "counterfactual input");
  require_dimension(tree, behavioral.size(), "subtree decisions");
  const auto [first, last] = subtree_decisions(tree, j);
  // value[d - first] = <[vec]_{down d}, x_d> for every d strictly below j.
  std::vector<double> value(last - first, 0.0);
  for (std::size_t d = last; d-- > first + 1;) {
    const auto& node = tree.decision(d);
    double acc = 0.0;
    for (std::size_t a = 0; a < node.num_actions(); ++a) {
      const std::size_t s = node.first_sequence + a;
      if (std::isnan(behavioral[s])) {
        throw StructuralError("missing subtree decision at decision node " + std::to_string(d));
      }
      double entry = vec[s];
      for (std::size_t c : tree.children_of(d, a)) entry += value[c - first];
      acc += behavioral[s] * entry;
    }
    value[d - first] = acc;
  }
  const auto& node = tree.decision(j);
  std::vector<double> out(node.num_actions());
  for (std::size_t a = 0; a < node.num_actions(); ++a) {
    out[a] = vec[node.first_sequence + a];
    for (std::size_t c : tree.children_of(j, a)) out[a] += value[c - first];
  }
  return out;
}

inline std::vector<double> counterfactual_loss(const TreePlex& tree, std::size_t j,
                                               std::span<const double> loss,
                                               std::span<const double> behavioral) {
  return counterfactual_vector(tree, j, loss, behavioral);
}

/// Same functional form as counterfactual_loss, applied to a prediction and
/// to the decisions already produced below j at the current iteration.
inline std::vector<double> counterfactual_prediction(const TreePlex& tree, std::size_t j,
                                                     std::span<const double> prediction,
                                                     std::span<const double> behavioral) {
  return counterfactual_vector(tree, j, prediction, behavioral);
}

/// Regret minimizer over a treeplex built from one local simplex minimizer
/// per decision node.
///
/// next_decision runs bottom-up: each node forms its counterfactual
/// prediction from the decisions its subtree has just produced, then queries
/// its local minimizer. observe_loss forms counterfactual losses the same
/// way against the current decisions and feeds them to every local.
template <PredictiveRegretMinimizer Local>
class TreeplexMinimizer {
 public:
  using LocalFactory = std::function<Local(std::size_t decision, std::size_t num_actions)>;

  TreeplexMinimizer(const TreePlex& tree, const LocalFactory& make_local)
      : tree_(&tree),
        behavioral_(tree.num_sequences(), 0.0),
        sequence_(tree.num_sequences(), 0.0),
        cf_loss_(tree.num_sequences(), 0.0),
        cf_prediction_(tree.num_sequences(), 0.0),
        cf_cumulative_(tree.num_sequences(), 0.0),
        cf_incurred_(tree.num_decisions(), 0.0),
        value_(tree.num_decisions(), 0.0) {
    locals_.reserve(tree.num_decisions());
    for (std::size_t j = 0; j < tree.num_decisions(); ++j) {
      locals_.push_back(make_local(j, tree.decision(j).num_actions()));
    }
  }

  /// Returns the sequence-form decision x^t for prediction m^t.
  std::span<const double> next_decision(std::span<const double> prediction) {
    require_dimension(*tree_, prediction.size(), "prediction");
    if (pending_) throw ProtocolError("next_decision called twice without observe_loss");
    pending_ = true;
    for (std::size_t j = tree_->num_decisions(); j-- > 0;) {
      const auto r = tree_->local_range(j);
      fill_counterfactual(j, prediction, cf_prediction_);
      const auto local = std::span<const double>(cf_prediction_).subspan(r.begin, r.size());
      const auto decision = locals_[j].next_decision(local);
      double v = 0.0;
      for (std::size_t a = 0; a < r.size(); ++a) {
        behavioral_[r.begin + a] = decision[a];
        v += decision[a] * local[a];
      }
      value_[j] = v;
    }
    assemble_sequence_form();
    return sequence_;
  }

  void observe_loss(std::span<const double> loss) {
    require_dimension(*tree_, loss.size(), "loss");
    if (!pending_) throw ProtocolError("observe_loss called without a pending decision");
    pending_ = false;
    for (std::size_t j = tree_->num_decisions(); j-- > 0;) {
      const auto r = tree_->local_range(j);
      fill_counterfactual(j, loss, cf_loss_);
      const auto local = std::span<const double>(cf_loss_).subspan(r.begin, r.size());
      double v = 0.0;
      for (std::size_t a = 0; a < r.size(); ++a) {
        v += behavioral_[r.begin + a] * local[a];
        cf_cumulative_[r.begin + a] += local[a];
      }
      value_[j] = v;
      cf_incurred_[j] += v;
      locals_[j].observe_loss(local);
    }
    ++t_;
  }

  const TreePlex& tree() const { return *tree_; }
  std::size_t iteration() const { return t_; }
  bool pending() const { return pending_; }

  /// Current decision: behavioral (per-node simplex points) and sequence form.
  std::span<const double> behavioral() const { return behavioral_; }
  std::span<const double> sequence_form() const { return sequence_; }

  /// Counterfactual vectors from the most recent pass, flat in sequence order.
  std::span<const double> last_counterfactual_losses() const { return cf_loss_; }
  std::span<const double> last_counterfactual_predictions() const { return cf_prediction_; }

  /// <[v]_{down j}, x_j> from the most recent pass (prediction or loss).
  double subtree_value(std::size_t j) const { return value_.at(j); }

  /// Incrementally maintained counterfactual regret of the local at j.
  double counterfactual_regret(std::size_t j) const {
    const auto r = tree_->local_range(j);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = r.begin; s < r.end; ++s) best = std::min(best, cf_cumulative_[s]);
    return cf_incurred_[j] - best;
  }

  const Local& local(std::size_t j) const { return locals_.at(j); }

 private:
  // out[(j,a)] = in[(j,a)] + sum of value_ over the decision children of (j,a).
  void fill_counterfactual(std::size_t j, std::span<const double> in, std::vector<double>& out) const {
    const auto& node = tree_->decision(j);
    for (std::size_t a = 0; a < node.num_actions(); ++a) {
      const std::size_t s = node.first_sequence + a;
      double entry = in[s];
      for (std::size_t c : tree_->children_of(j, a)) entry += value_[c];
      out[s] = entry;
    }
  }

  void assemble_sequence_form() {
    for (std::size_t j = 0; j < tree_->num_decisions(); ++j) {
      const double mass = parent_mass(*tree_, sequence_, j);
      const auto r = tree_->local_range(j);
      for (std::size_t s = r.begin; s < r.end; ++s) sequence_[s] = mass * behavioral_[s];
    }
  }

  const TreePlex* tree_;
  std::vector<Local> locals_;
  std::vector<double> behavioral_;
  std::vector<double> sequence_;
  std::vector<double> cf_loss_;
  std::vector<double> cf_prediction_;
  std::vector<double> cf_cumulative_;
  std::vector<double> cf_incurred_;
  std::vector<double> value_;
  std::size_t t_ = 0;
  bool pending_ = false;
};

/// OFTRL locals with stepsize schedule.eta[j].
inline TreeplexMinimizer<OftrlMinimizer> make_oftrl_treeplex(const TreePlex& tree,
                                                             const StabilitySchedule& schedule,
                                                             Regularizer reg) {
  return TreeplexMinimizer<OftrlMinimizer>(tree, [&](std::size_t j, std::size_t n) {
    return OftrlMinimizer(n, schedule.eta.at(j), reg);
  });
}

inline TreeplexMinimizer<RegretMatchingMinimizer> make_regret_matching_treeplex(const TreePlex& tree) {
  return TreeplexMinimizer<RegretMatchingMinimizer>(
      tree, [](std::size_t, std::size_t n) { return RegretMatchingMinimizer(n); });
}

// ---------------------------------------------------------------------------
// Stability measurement
// ---------------------------------------------------------------------------

/// ||x_v^t - x_v^{t-1}||_2 for every node v, on subtree-local sequence forms.
struct SubtreeMovement {
  std::vector<double> decision;
  std::vector<double> observation;
  std::vector<double> local;  // ||xhat_j^t - xhat_j^{t-1}||_2 per decision node
};

inline SubtreeMovement subtree_movement(const TreePlex& tree, std::span<const double> previous,
                                        std::span<const double> current) {
  require_dimension(tree, previous.size(), "previous behavioral strategy");
  require_dimension(tree, current.size(), "current behavioral strategy");
  SubtreeMovement m{std::vector<double>(tree.num_decisions()), std::vector<double>(tree.num_observations(), 0.0),
                    std::vector<double>(tree.num_decisions())};
  std::vector<double> sq(tree.num_decisions());
  for (std::size_t j = 0; j < tree.num_decisions(); ++j) {
    const auto a = subtree_sequence_form(tree, previous, j);
    const auto b = subtree_sequence_form(tree, current, j);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    sq[j] = acc;
    m.decision[j] = std::sqrt(acc);
    const auto r = tree.local_range(j);
    double local = 0.0;
    for (std::size_t s = r.begin; s < r.end; ++s) local += (previous[s] - current[s]) * (previous[s] - current[s]);
    m.local[j] = std::sqrt(local);
  }
  for (std::size_t k = 0; k < tree.num_observations(); ++k) {
    double acc = 0.0;
    for (std::size_t c : tree.observation(k).children) acc += sq[c];
    m.observation[k] = std::sqrt(acc);
  }
  return m;
}

/// Largest amount by which a movement exceeds its schedule target, over
/// subtree targets gamma_v and local targets kappa_j (<= 0 when all hold).
struct StabilityExcess {
  double subtree = -std::numeric_limits<double>::infinity();
  double local = -std::numeric_limits<double>::infinity();

  double worst() const { return std::max(subtree, local); }
};

inline StabilityExcess stability_excess(const SubtreeMovement& m, const StabilitySchedule& s) {
  StabilityExcess e;
  for (std::size_t j = 0; j < m.decision.size(); ++j) {
    e.subtree = std::max(e.subtree, m.decision[j] - s.gamma_decision[j]);
    e.local = std::max(e.local, m.local[j] - s.kappa[j]);
  }
  for (std::size_t k = 0; k < m.observation.size(); ++k) {
    e.subtree = std::max(e.subtree, m.observation[k] - s.gamma_observation[k]);
  }
  return e;
}

}  // namespace spcfr
