#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "spcfr/treeplex.hpp"

namespace spcfr {

/// Per-node stability targets for a treeplex regret minimizer.
///
/// gamma at the root decision node is kappa_star; children of a decision
/// node u get gamma_u / (2 sqrt(n_u)), children of an observation node u get
/// gamma_u / sqrt(n_u). Each decision node's local minimizer is asked for
/// kappa_j = gamma_j / (2 sqrt(n_j) B_j).
struct StabilitySchedule {
  double kappa_star = 0.0;
  std::vector<double> gamma_decision;
  std::vector<double> gamma_observation;
  std::vector<double> kappa;  // per decision node
  std::vector<double> eta;    // local stepsize; kappa_j unless rescaled
  NormBounds bounds;

  // gamma_v^2 = kappa_star^2 / den_v, exactly; 0 when the product overflows.
  std::vector<std::uint64_t> gamma_sq_den_decision;
  std::vector<std::uint64_t> gamma_sq_den_observation;

  void scale_stepsizes(double factor) {
    for (auto& e : eta) e *= factor;
  }
};

namespace detail {

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out = 0;
  if (a == 0 || b == 0 || __builtin_mul_overflow(a, b, &out)) return 0;
  return out;
}

}  // namespace detail

inline StabilitySchedule assign_stability(const TreePlex& tree, double kappa_star) {
  if (!(kappa_star > 0.0)) throw std::invalid_argument("kappa_star must be positive");
  StabilitySchedule s;
  s.kappa_star = kappa_star;
  s.bounds = subtree_norm_bounds(tree);
  const std::size_t nj = tree.num_decisions(), nk = tree.num_observations();
  s.gamma_decision.assign(nj, 0.0);
  s.gamma_observation.assign(nk, 0.0);
  s.gamma_sq_den_decision.assign(nj, 0);
  s.gamma_sq_den_observation.assign(nk, 0);
  s.kappa.assign(nj, 0.0);

  // Pre-order: every parent is assigned before its children.
  s.gamma_decision[tree.root()] = kappa_star;
  s.gamma_sq_den_decision[tree.root()] = 1;
  for (std::size_t j = 0; j < nj; ++j) {
    const auto& node = tree.decision(j);
    const auto n = static_cast<std::uint64_t>(node.num_actions());
    if (const auto& p = node.parent) {
      const auto& obs = tree.observation(*p);
      s.gamma_decision[j] = s.gamma_observation[*p] / std::sqrt(static_cast<double>(obs.num_signals()));
      s.gamma_sq_den_decision[j] = detail::checked_mul(s.gamma_sq_den_observation[*p], obs.num_signals());
    }
    s.kappa[j] = s.gamma_decision[j] / (2.0 * std::sqrt(static_cast<double>(n)) * s.bounds.decision[j]);
    for (const auto& child : node.children) {
      if (!child) continue;
      s.gamma_observation[*child] = s.gamma_decision[j] / (2.0 * std::sqrt(static_cast<double>(n)));
      s.gamma_sq_den_observation[*child] = detail::checked_mul(s.gamma_sq_den_decision[j], 4 * n);
    }
  }
  s.eta = s.kappa;
  return s;
}

}  // namespace spcfr
