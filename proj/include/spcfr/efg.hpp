#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "spcfr/errors.hpp"

namespace spcfr {

struct ChanceNode {
  std::vector<double> probs;
  std::vector<std::size_t> children;
};

struct PlayerNode {
  int player = 1;  // 1 or 2
  std::string infoset;
  std::vector<std::string> actions;
  std::vector<std::size_t> children;
};

struct TerminalNode {
  double payoff = 0.0;  // utility to player 1
};

struct EfgNode {
  std::string id;
  std::variant<ChanceNode, PlayerNode, TerminalNode> data;
  std::size_t line = 0;  // source line when parsed from a file, else 0
};

/// Two-player zero-sum extensive-form game. Children are node indices.
struct ExtensiveFormGame {
  std::vector<EfgNode> nodes;
  std::size_t root = 0;

  std::size_t add(std::string id, std::variant<ChanceNode, PlayerNode, TerminalNode> data) {
    nodes.push_back(EfgNode{std::move(id), std::move(data), 0});
    return nodes.size() - 1;
  }

  const std::vector<std::size_t>* children(std::size_t n) const {
    if (const auto* c = std::get_if<ChanceNode>(&nodes[n].data)) return &c->children;
    if (const auto* p = std::get_if<PlayerNode>(&nodes[n].data)) return &p->children;
    return nullptr;
  }
};

inline constexpr double kChanceTolerance = 1e-9;

namespace detail {

inline std::string describe(const EfgNode& node) { return "node '" + node.id + "'"; }

// Owner's (infoset, action) history, used for the perfect-recall check.
using RecallKey = std::vector<std::pair<std::string, std::size_t>>;

}  // namespace detail

/// Structural validation: tree shape, chance sums, infoset consistency and
/// perfect recall. Diagnostics carry the node's source line when known.
inline void validate(const ExtensiveFormGame& game) {
  const auto n = game.nodes.size();
  if (n == 0) throw ParseError(0, "game has no nodes");
  if (game.root >= n) throw ParseError(0, "root index out of range");

  std::vector<int> parents(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = game.nodes[i];
    if (const auto* kids = game.children(i)) {
      if (kids->empty()) throw ParseError(node.line, detail::describe(node) + " has no children");
      for (auto c : *kids) {
        if (c >= n) throw ParseError(node.line, detail::describe(node) + " has a dangling child");
        ++parents[c];
      }
    }
    if (const auto* c = std::get_if<ChanceNode>(&node.data)) {
      if (c->probs.size() != c->children.size()) {
        throw ParseError(node.line, detail::describe(node) + ": probability/child count mismatch");
      }
      double sum = 0.0;
      for (double p : c->probs) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
          throw ParseError(node.line, detail::describe(node) + ": invalid probability");
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > kChanceTolerance) {
        throw ParseError(node.line, detail::describe(node) + ": chance probabilities sum to " +
                                        std::to_string(sum) + ", expected 1");
      }
    } else if (const auto* p = std::get_if<PlayerNode>(&node.data)) {
      if (p->player != 1 && p->player != 2) {
        throw ParseError(node.line, detail::describe(node) + ": player must be 1 or 2");
      }
      if (p->actions.size() != p->children.size()) {
        throw ParseError(node.line, detail::describe(node) + ": action/child count mismatch");
      }
    } else {
      const auto& t = std::get<TerminalNode>(node.data);
      if (!std::isfinite(t.payoff)) throw ParseError(node.line, detail::describe(node) + ": bad payoff");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const int expected = i == game.root ? 0 : 1;
    if (parents[i] != expected) {
      throw ParseError(game.nodes[i].line,
                       detail::describe(game.nodes[i]) +
                           (parents[i] == 0 ? " is unreachable from the root"
                                            : " has more than one parent (not a tree)"));
    }
  }

  // Infoset consistency and perfect recall, in one DFS from the root.
  struct InfosetInfo {
    int player;
    std::vector<std::string> actions;
    detail::RecallKey history;
  };
  std::map<std::string, InfosetInfo> infosets;
  struct Frame {
    std::size_t node;
    detail::RecallKey history[2];
  };
  std::vector<Frame> stack;
  std::vector<bool> visited(n, false);
  stack.push_back(Frame{game.root, {}});
  while (!stack.empty()) {
    Frame frame = std::move(stack.back());
    stack.pop_back();
    visited[frame.node] = true;
    const auto& node = game.nodes[frame.node];
    if (const auto* p = std::get_if<PlayerNode>(&node.data)) {
      const auto& own = frame.history[p->player - 1];
      auto [it, inserted] = infosets.try_emplace(p->infoset, InfosetInfo{p->player, p->actions, own});
      if (!inserted) {
        if (it->second.player != p->player) {
          throw ParseError(node.line, detail::describe(node) + ": infoset '" + p->infoset +
                                          "' is shared by both players");
        }
        if (it->second.actions != p->actions) {
          throw ParseError(node.line, detail::describe(node) + ": infoset '" + p->infoset +
                                          "' has inconsistent action labels");
        }
        if (it->second.history != own) {
          throw ParseError(node.line, detail::describe(node) + ": perfect recall violated at infoset '" +
                                          p->infoset + "'");
        }
      }
      for (std::size_t a = p->children.size(); a-- > 0;) {
        Frame next{p->children[a], {frame.history[0], frame.history[1]}};
        next.history[p->player - 1].emplace_back(p->infoset, a);
        stack.push_back(std::move(next));
      }
    } else if (const auto* c = std::get_if<ChanceNode>(&node.data)) {
      for (std::size_t i = c->children.size(); i-- > 0;) {
        stack.push_back(Frame{c->children[i], {frame.history[0], frame.history[1]}});
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!visited[i]) {
      throw ParseError(game.nodes[i].line,
                       detail::describe(game.nodes[i]) + " is unreachable from the root");
    }
  }
}

/// Same game with the roles of the players exchanged and payoffs negated.
inline ExtensiveFormGame swap_players(ExtensiveFormGame game) {
  for (auto& node : game.nodes) {
    if (auto* p = std::get_if<PlayerNode>(&node.data)) {
      p->player = 3 - p->player;
    } else if (auto* t = std::get_if<TerminalNode>(&node.data)) {
      t->payoff = -t->payoff;
    }
  }
  return game;
}

}  // namespace spcfr
