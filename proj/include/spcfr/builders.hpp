#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "spcfr/efg.hpp"
#include "spcfr/errors.hpp"
#include "spcfr/game.hpp"

namespace spcfr {

inline constexpr std::size_t kMaxSequences = 1'000'000;

namespace detail {

class EfgWriter {
 public:
  explicit EfgWriter(ExtensiveFormGame& game) : game_(game) {}

  std::size_t terminal(double payoff) { return game_.add(next_id(), TerminalNode{payoff}); }
  std::size_t chance(std::vector<double> probs, std::vector<std::size_t> children) {
    return game_.add(next_id(), ChanceNode{std::move(probs), std::move(children)});
  }
  std::size_t player(int who, std::string infoset, std::vector<std::string> actions,
                     std::vector<std::size_t> children) {
    return game_.add(next_id(), PlayerNode{who, std::move(infoset), std::move(actions), std::move(children)});
  }

 private:
  std::string next_id() { return "n" + std::to_string(counter_++); }

  ExtensiveFormGame& game_;
  std::size_t counter_ = 0;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Kuhn poker
// ---------------------------------------------------------------------------

/// Three cards (J < Q < K), antes of 1, one bet of 1. Player 1 checks or
/// raises; player 2 answers; a check followed by a raise lets player 1 fold
/// or call.
inline ExtensiveFormGame build_kuhn_efg() {
  ExtensiveFormGame g;
  detail::EfgWriter w(g);
  static constexpr std::array<const char*, 3> kCards{"J", "Q", "K"};

  const auto showdown = [](int c1, int c2, double pot_share) { return c1 > c2 ? pot_share : -pot_share; };

  std::vector<std::size_t> deals;
  std::vector<double> probs;
  for (int c1 = 0; c1 < 3; ++c1) {
    for (int c2 = 0; c2 < 3; ++c2) {
      if (c1 == c2) continue;
      const std::string p1 = std::string("P1:") + kCards[c1];
      const std::string p2 = std::string("P2:") + kCards[c2];

      // P1 check -> P2 check / raise -> P1 fold / call
      const auto p1_fold = w.terminal(-1.0);
      const auto p1_call = w.terminal(showdown(c1, c2, 2.0));
      const auto p1_facing = w.player(1, p1 + ":check:raise", {"fold", "call"}, {p1_fold, p1_call});
      const auto both_check = w.terminal(showdown(c1, c2, 1.0));
      const auto p2_after_check = w.player(2, p2 + ":check", {"check", "raise"}, {both_check, p1_facing});

      // P1 raise -> P2 fold / call
      const auto p2_fold = w.terminal(1.0);
      const auto p2_call = w.terminal(showdown(c1, c2, 2.0));
      const auto p2_after_raise = w.player(2, p2 + ":raise", {"fold", "call"}, {p2_fold, p2_call});

      deals.push_back(w.player(1, p1, {"check", "raise"}, {p2_after_check, p2_after_raise}));
      probs.push_back(1.0 / 6.0);
    }
  }
  g.root = w.chance(std::move(probs), std::move(deals));
  return g;
}

inline GameInstance build_kuhn() { return to_sequence_form_game(build_kuhn_efg(), "kuhn"); }

// ---------------------------------------------------------------------------
// Leduc poker
// ---------------------------------------------------------------------------

namespace detail {

class LeducBuilder {
 public:
  static constexpr std::array<const char*, 3> kRanks{"J", "Q", "K"};
  static constexpr int kMaxRaises = 2;
  static constexpr std::array<double, 2> kRaiseSize{2.0, 4.0};

  explicit LeducBuilder(EfgWriter& w) : w_(w) {}

  std::size_t deal(int card1, int card2) {
    card1_ = card1;
    card2_ = card2;
    return act(0, "", 1, 0, false, false, 1.0, 1.0);
  }

 private:
  static int rank(int card) { return card / 2; }

  std::string infoset(int who, const std::string& history) const {
    const int card = who == 1 ? card1_ : card2_;
    return "P" + std::to_string(who) + ":" + kRanks[rank(card)] + ":" + history;
  }

  double showdown(double contribution) const {
    const int r1 = rank(card1_), r2 = rank(card2_), rb = rank(board_);
    const bool pair1 = r1 == rb, pair2 = r2 == rb;
    if (pair1 != pair2) return pair1 ? contribution : -contribution;
    if (r1 == r2) return 0.0;
    return r1 > r2 ? contribution : -contribution;
  }

  std::size_t round_end(int round, const std::string& history, double contribution) {
    if (round == 1) return w_.terminal(showdown(contribution));
    std::vector<std::size_t> boards;
    std::vector<double> probs;
    for (int board = 0; board < 6; ++board) {
      if (board == card1_ || board == card2_) continue;
      board_ = board;
      boards.push_back(act(1, history + "/" + kRanks[rank(board)] + ":", 1, 0, false, false,
                           contribution, contribution));
      probs.push_back(0.25);
    }
    return w_.chance(std::move(probs), std::move(boards));
  }

  // Stakes c1, c2 are each player's total contribution so far.
  std::size_t act(int round, const std::string& history, int to_act, int raises, bool facing,
                  bool acted, double c1, double c2) {
    const double own = to_act == 1 ? c1 : c2;
    const double other = to_act == 1 ? c2 : c1;
    const auto raise_to = [&](double stake) {
      return act(round, history + "r", 3 - to_act, raises + 1, true, true, to_act == 1 ? stake : c1,
                 to_act == 2 ? stake : c2);
    };
    std::vector<std::string> actions;
    std::vector<std::size_t> children;
    if (facing) {
      actions.push_back("fold");
      children.push_back(w_.terminal(to_act == 1 ? -own : own));
      actions.push_back("call");
      children.push_back(round_end(round, history + "c", other));
      if (raises < kMaxRaises) {
        actions.push_back("raise");
        children.push_back(raise_to(other + kRaiseSize[round]));
      }
    } else {
      actions.push_back("check");
      children.push_back(acted ? round_end(round, history + "k", own)
                               : act(round, history + "k", 3 - to_act, raises, false, true, c1, c2));
      actions.push_back("raise");
      children.push_back(raise_to(own + kRaiseSize[round]));
    }
    return w_.player(to_act, infoset(to_act, history), std::move(actions), std::move(children));
  }

  EfgWriter& w_;
  int card1_ = 0, card2_ = 0, board_ = 0;
};

}  // namespace detail

/// Six cards (J, Q, K in two suits), antes of 1, two betting rounds with
/// raise sizes 2 and 4 and at most two raises per round. One public card is
/// revealed between the rounds; pairing it wins, otherwise the higher rank.
inline ExtensiveFormGame build_leduc_efg() {
  ExtensiveFormGame g;
  detail::EfgWriter w(g);
  detail::LeducBuilder builder(w);
  std::vector<std::size_t> deals;
  std::vector<double> probs;
  for (int c1 = 0; c1 < 6; ++c1) {
    for (int c2 = 0; c2 < 6; ++c2) {
      if (c1 == c2) continue;
      deals.push_back(builder.deal(c1, c2));
      probs.push_back(1.0 / 30.0);
    }
  }
  g.root = w.chance(std::move(probs), std::move(deals));
  return g;
}

inline GameInstance build_leduc() { return to_sequence_form_game(build_leduc_efg(), "leduc"); }

// ---------------------------------------------------------------------------
// Random games
// ---------------------------------------------------------------------------

/// Sequences per player of build_random_game(depth, branching).
inline double random_game_sequences(int depth, int branching) {
  const double b = branching;
  double infosets = 0.0, level = 1.0;
  for (int r = 0; r < depth; ++r) {
    infosets += level;
    level *= b * b * b;
  }
  return infosets * b;
}

namespace detail {

class RandomGameBuilder {
 public:
  RandomGameBuilder(EfgWriter& w, std::uint64_t seed, int depth, int branching)
      : w_(w), rng_(seed), depth_(depth), branching_(branching) {}

  std::size_t build() { return round(0, "", ""); }

 private:
  // Uniform in [0, 1) from the top 53 bits; independent of the standard
  // library's distribution implementations.
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  // One round: P1 and P2 move without seeing each other's action, then both
  // actions are revealed and a chance event (also public) starts the next round.
  std::size_t round(int r, const std::string& h1, const std::string& h2) {
    std::vector<std::size_t> p1_children;
    std::vector<std::string> labels;
    for (int a = 0; a < branching_; ++a) labels.push_back("a" + std::to_string(a));
    for (int a = 0; a < branching_; ++a) {
      std::vector<std::size_t> p2_children;
      for (int b = 0; b < branching_; ++b) {
        if (r + 1 == depth_) {
          p2_children.push_back(w_.terminal(2.0 * uniform() - 1.0));
          continue;
        }
        std::vector<double> probs(branching_);
        double total = 0.0;
        for (auto& p : probs) {
          p = 0.05 + uniform();
          total += p;
        }
        std::vector<std::size_t> outcomes;
        for (int c = 0; c < branching_; ++c) {
          probs[c] /= total;
          const std::string obs = std::to_string(a) + std::to_string(b) + std::to_string(c) + ".";
          outcomes.push_back(round(r + 1, h1 + obs, h2 + obs));
        }
        p2_children.push_back(w_.chance(std::move(probs), std::move(outcomes)));
      }
      p1_children.push_back(w_.player(2, "P2:" + h2, labels, std::move(p2_children)));
    }
    return w_.player(1, "P1:" + h1, labels, std::move(p1_children));
  }

  EfgWriter& w_;
  std::mt19937_64 rng_;
  int depth_;
  int branching_;
};

}  // namespace detail

inline ExtensiveFormGame build_random_game_efg(std::uint64_t seed, int depth, int branching) {
  if (depth < 1 || branching < 1) {
    throw std::invalid_argument("random game needs depth >= 1 and branching >= 1");
  }
  if (random_game_sequences(depth, branching) > static_cast<double>(kMaxSequences)) {
    throw SizeLimitError("random game with depth " + std::to_string(depth) + " and branching " +
                         std::to_string(branching) + " exceeds " + std::to_string(kMaxSequences) +
                         " sequences per player");
  }
  ExtensiveFormGame g;
  detail::EfgWriter w(g);
  detail::RandomGameBuilder builder(w, seed, depth, branching);
  g.root = builder.build();
  return g;
}

/// Reproducible random game: `depth` rounds of simultaneous moves with
/// `branching` actions each, separated by public chance events; terminal
/// payoffs uniform in [-1, 1].
inline GameInstance build_random_game(std::uint64_t seed, int depth, int branching) {
  return to_sequence_form_game(build_random_game_efg(seed, depth, branching),
                               "random-s" + std::to_string(seed) + "-d" + std::to_string(depth) +
                                   "-b" + std::to_string(branching));
}

}  // namespace spcfr
