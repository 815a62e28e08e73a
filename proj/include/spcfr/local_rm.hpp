#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spcfr/errors.hpp"

namespace spcfr {

enum class RegularizerKind { entropy, euclidean };

/// 1-strongly convex regularizer on the simplex, with its norm pairing:
/// negative entropy is paired with (l1, linf), half squared 2-norm with (l2, l2).
struct Regularizer {
  RegularizerKind kind = RegularizerKind::euclidean;

  /// max R - min R over the n-simplex.
  double diameter(std::size_t n) const {
    const double dn = static_cast<double>(n);
    return kind == RegularizerKind::entropy ? std::log(dn) : 0.5 * (1.0 - 1.0 / dn);
  }

  double primal_norm(std::span<const double> v) const {
    double acc = 0.0;
    if (kind == RegularizerKind::entropy) {
      for (double a : v) acc += std::abs(a);
      return acc;
    }
    for (double a : v) acc += a * a;
    return std::sqrt(acc);
  }

  double dual_norm(std::span<const double> v) const {
    double acc = 0.0;
    if (kind == RegularizerKind::entropy) {
      for (double a : v) acc = std::max(acc, std::abs(a));
      return acc;
    }
    for (double a : v) acc += a * a;
    return std::sqrt(acc);
  }

  std::string name() const { return kind == RegularizerKind::entropy ? "entropy" : "euclidean"; }
};

inline double primal_distance(const Regularizer& reg, std::span<const double> a, std::span<const double> b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return reg.primal_norm(d);
}

inline double dual_distance(const Regularizer& reg, std::span<const double> a, std::span<const double> b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return reg.dual_norm(d);
}

/// Euclidean projection of v onto the probability simplex (sort and threshold).
inline void project_to_simplex(std::span<const double> v, std::span<double> out) {
  const std::size_t n = v.size();
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double prefix = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    prefix += u[k];
    const double candidate = (prefix - 1.0) / static_cast<double>(k + 1);
    if (u[k] - candidate > 0.0) theta = candidate;
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = std::max(v[i] - theta, 0.0);
}

/// argmin over the simplex of <x, L> + R(x) / eta, written into `out`.
inline void argmin_reg(std::span<const double> cumulative, double eta, const Regularizer& reg,
                       std::span<double> out) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("stepsize must be positive");
  if (out.size() != cumulative.size() || cumulative.empty()) {
    throw StructuralError("argmin_reg: dimension mismatch");
  }
  for (double a : cumulative) {
    if (!std::isfinite(a)) throw std::invalid_argument("argmin_reg: non-finite loss entry");
  }
  const std::size_t n = cumulative.size();
  if (reg.kind == RegularizerKind::entropy) {
    const double lowest = *std::min_element(cumulative.begin(), cumulative.end());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double w = std::exp(-eta * (cumulative[i] - lowest));
      if (w < 1e-300) w = 0.0;
      out[i] = w;
      total += w;
    }
    // total >= 1: the minimising coordinate contributes exp(0).
    for (auto& w : out) w /= total;
    return;
  }
  std::vector<double> shifted(n);
  for (std::size_t i = 0; i < n; ++i) shifted[i] = -eta * cumulative[i];
  project_to_simplex(shifted, out);
}

inline std::vector<double> argmin_reg(std::span<const double> cumulative, double eta, const Regularizer& reg) {
  std::vector<double> out(cumulative.size());
  argmin_reg(cumulative, eta, reg, out);
  return out;
}

/// Sum_t <l^t, x^t> - min_i Sum_t l^t_i.
inline double cumulative_regret(std::span<const std::vector<double>> decisions,
                                std::span<const std::vector<double>> losses) {
  if (decisions.size() != losses.size()) {
    throw std::invalid_argument("cumulative_regret: sequences differ in length");
  }
  if (decisions.empty()) return 0.0;
  const std::size_t n = losses.front().size();
  std::vector<double> total(n, 0.0);
  double incurred = 0.0;
  for (std::size_t t = 0; t < losses.size(); ++t) {
    if (losses[t].size() != n || decisions[t].size() != n) {
      throw StructuralError("cumulative_regret: dimension mismatch");
    }
    for (std::size_t i = 0; i < n; ++i) {
      incurred += losses[t][i] * decisions[t][i];
      total[i] += losses[t][i];
    }
  }
  return incurred - *std::min_element(total.begin(), total.end());
}

/// next_decision / observe_loss contract shared by the simplex minimizers.
template <typename M>
concept PredictiveRegretMinimizer = requires(M m, const M cm, std::span<const double> v) {
  { m.next_decision(v) } -> std::convertible_to<std::span<const double>>;
  m.observe_loss(v);
  { cm.dimension() } -> std::convertible_to<std::size_t>;
};

namespace detail {

class AlternationGuard {
 public:
  void begin_decision() {
    if (pending_) throw ProtocolError("next_decision called twice without observe_loss");
    pending_ = true;
  }
  void begin_observation() {
    if (!pending_) throw ProtocolError("observe_loss called without a pending decision");
    pending_ = false;
  }

 private:
  bool pending_ = false;
};

inline void check_dimension(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw StructuralError(std::string(what) + ": expected dimension " + std::to_string(expected) +
                          ", got " + std::to_string(got));
  }
}

}  // namespace detail

/// Optimistic follow-the-regularized-leader over the n-simplex:
/// x^t = argmin <x, L^{t-1} + m^t> + R(x) / eta.
class OftrlMinimizer {
 public:
  OftrlMinimizer(std::size_t n, double eta, Regularizer reg)
      : eta_(eta), reg_(reg), cumulative_(n, 0.0), prediction_(n, 0.0), decision_(n, 1.0 / static_cast<double>(n)),
        scratch_(n) {
    if (n == 0) throw StructuralError("OFTRL needs at least one action");
    if (!(eta > 0.0)) throw std::invalid_argument("OFTRL stepsize must be positive");
  }

  std::span<const double> next_decision(std::span<const double> prediction) {
    detail::check_dimension(dimension(), prediction.size(), "OFTRL prediction");
    guard_.begin_decision();
    for (std::size_t i = 0; i < scratch_.size(); ++i) {
      prediction_[i] = prediction[i];
      scratch_[i] = cumulative_[i] + prediction[i];
    }
    argmin_reg(scratch_, eta_, reg_, decision_);
    return decision_;
  }

  void observe_loss(std::span<const double> loss) {
    detail::check_dimension(dimension(), loss.size(), "OFTRL loss");
    guard_.begin_observation();
    for (std::size_t i = 0; i < cumulative_.size(); ++i) cumulative_[i] += loss[i];
    ++t_;
  }

  std::size_t dimension() const { return cumulative_.size(); }
  double eta() const { return eta_; }
  const Regularizer& regularizer() const { return reg_; }
  std::size_t iteration() const { return t_; }
  std::span<const double> cumulative_loss() const { return cumulative_; }
  std::span<const double> last_prediction() const { return prediction_; }
  std::span<const double> last_decision() const { return decision_; }

 private:
  double eta_;
  Regularizer reg_;
  std::vector<double> cumulative_;
  std::vector<double> prediction_;
  std::vector<double> decision_;
  std::vector<double> scratch_;
  std::size_t t_ = 0;
  detail::AlternationGuard guard_;
};

/// Vanilla regret matching; predictions are accepted and ignored.
class RegretMatchingMinimizer {
 public:
  explicit RegretMatchingMinimizer(std::size_t n)
      : regrets_(n, 0.0), decision_(n, 1.0 / static_cast<double>(n)) {
    if (n == 0) throw StructuralError("regret matching needs at least one action");
  }

  std::span<const double> next_decision(std::span<const double> prediction) {
    detail::check_dimension(dimension(), prediction.size(), "regret-matching prediction");
    guard_.begin_decision();
    double positive = 0.0;
    for (double r : regrets_) positive += std::max(r, 0.0);
    const double n = static_cast<double>(regrets_.size());
    for (std::size_t i = 0; i < regrets_.size(); ++i) {
      decision_[i] = positive > 0.0 ? std::max(regrets_[i], 0.0) / positive : 1.0 / n;
    }
    return decision_;
  }

  void observe_loss(std::span<const double> loss) {
    detail::check_dimension(dimension(), loss.size(), "regret-matching loss");
    guard_.begin_observation();
    double expected = 0.0;
    for (std::size_t i = 0; i < loss.size(); ++i) expected += loss[i] * decision_[i];
    for (std::size_t i = 0; i < loss.size(); ++i) regrets_[i] += expected - loss[i];
    ++t_;
  }

  std::size_t dimension() const { return regrets_.size(); }
  std::size_t iteration() const { return t_; }
  std::span<const double> cumulative_regrets() const { return regrets_; }
  std::span<const double> last_decision() const { return decision_; }

 private:
  std::vector<double> regrets_;
  std::vector<double> decision_;
  std::size_t t_ = 0;
  detail::AlternationGuard guard_;
};

static_assert(PredictiveRegretMinimizer<OftrlMinimizer>);
static_assert(PredictiveRegretMinimizer<RegretMatchingMinimizer>);

}  // namespace spcfr
