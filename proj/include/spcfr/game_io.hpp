#pragma once

#include <cctype>
#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "spcfr/efg.hpp"
#include "spcfr/errors.hpp"

namespace spcfr {

// Game file format (UTF-8, one record per line, '#' starts a comment):
//
//   root <id>
//   chance <id> <prob>:<child-id> ...
//   player <id> <1|2> <infoset-label> <action-label>:<child-id> ...
//   terminal <id> <payoff-to-player-1>
//
// Records may appear in any order; children may be referenced before they
// are defined.

namespace detail {

inline bool is_id(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

inline double parse_number(std::string_view token, std::size_t line, const char* what) {
  double value = 0.0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(line, std::string("bad ") + what + " '" + std::string(token) + "'");
  }
  return value;
}

inline std::vector<std::string_view> split_tokens(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

inline std::pair<std::string_view, std::string_view> split_edge(std::string_view token,
                                                                std::size_t line) {
  const auto colon = token.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == token.size()) {
    throw ParseError(line, "expected <label>:<child-id>, got '" + std::string(token) + "'");
  }
  return {token.substr(0, colon), token.substr(colon + 1)};
}

}  // namespace detail

/// Parses and validates a game file.
inline ExtensiveFormGame parse_game_file(std::string_view text) {
  struct Pending {
    std::size_t node;
    std::vector<std::string> child_ids;
  };
  ExtensiveFormGame game;
  std::map<std::string, std::size_t, std::less<>> index;
  std::vector<Pending> pending;
  std::string root_id;
  std::size_t root_line = 0;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tokens = detail::split_tokens(line);
    if (tokens.empty()) continue;

    const auto kind = tokens[0];
    if (kind == "root") {
      if (tokens.size() != 2 || !detail::is_id(tokens[1])) throw ParseError(line_no, "expected 'root <id>'");
      if (!root_id.empty()) throw ParseError(line_no, "duplicate root record");
      root_id = std::string(tokens[1]);
      root_line = line_no;
      continue;
    }
    if (kind != "chance" && kind != "player" && kind != "terminal") {
      throw ParseError(line_no, "unknown record '" + std::string(kind) + "'");
    }
    if (tokens.size() < 2 || !detail::is_id(tokens[1])) {
      throw ParseError(line_no, "expected an alphanumeric node id after '" + std::string(kind) + "'");
    }
    const std::string id(tokens[1]);
    if (index.count(id)) throw ParseError(line_no, "duplicate node id '" + id + "'");

    Pending edges{game.nodes.size(), {}};
    EfgNode node{id, TerminalNode{}, line_no};
    if (kind == "terminal") {
      if (tokens.size() != 3) throw ParseError(line_no, "expected 'terminal <id> <payoff>'");
      node.data = TerminalNode{detail::parse_number(tokens[2], line_no, "payoff")};
    } else if (kind == "chance") {
      if (tokens.size() < 3) throw ParseError(line_no, "chance node '" + id + "' has no outcomes");
      ChanceNode chance;
      for (std::size_t t = 2; t < tokens.size(); ++t) {
        const auto [prob, child] = detail::split_edge(tokens[t], line_no);
        chance.probs.push_back(detail::parse_number(prob, line_no, "probability"));
        edges.child_ids.emplace_back(child);
      }
      node.data = std::move(chance);
    } else {
      if (tokens.size() < 5) {
        throw ParseError(line_no, "expected 'player <id> <1|2> <infoset> <action>:<child> ...'");
      }
      PlayerNode player;
      if (tokens[2] == "1") {
        player.player = 1;
      } else if (tokens[2] == "2") {
        player.player = 2;
      } else {
        throw ParseError(line_no, "player must be 1 or 2, got '" + std::string(tokens[2]) + "'");
      }
      player.infoset = std::string(tokens[3]);
      for (std::size_t t = 4; t < tokens.size(); ++t) {
        const auto [action, child] = detail::split_edge(tokens[t], line_no);
        player.actions.emplace_back(action);
        edges.child_ids.emplace_back(child);
      }
      node.data = std::move(player);
    }
    for (const auto& c : edges.child_ids) {
      if (!detail::is_id(c)) throw ParseError(line_no, "bad child id '" + c + "'");
    }
    index.emplace(id, game.nodes.size());
    game.nodes.push_back(std::move(node));
    pending.push_back(std::move(edges));
  }

  if (root_id.empty()) throw ParseError(0, "missing 'root <id>' record");
  const auto root = index.find(root_id);
  if (root == index.end()) throw ParseError(root_line, "root '" + root_id + "' is not defined");
  game.root = root->second;

  for (const auto& p : pending) {
    auto& node = game.nodes[p.node];
    std::vector<std::size_t> children;
    for (const auto& c : p.child_ids) {
      const auto it = index.find(c);
      if (it == index.end()) {
        throw ParseError(node.line, "node '" + node.id + "' references undefined child '" + c + "'");
      }
      children.push_back(it->second);
    }
    if (auto* chance = std::get_if<ChanceNode>(&node.data)) chance->children = std::move(children);
    if (auto* player = std::get_if<PlayerNode>(&node.data)) player->children = std::move(children);
  }

  validate(game);
  return game;
}

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Writes a game in the file format above, nodes in depth-first order from
/// the root. Numbers carry 17 significant digits so they re-parse exactly.
inline std::string export_game(const ExtensiveFormGame& game) {
  std::ostringstream out;
  out << "root " << game.nodes.at(game.root).id << "\n";
  std::vector<std::size_t> stack{game.root};
  while (!stack.empty()) {
    const auto n = stack.back();
    stack.pop_back();
    const auto& node = game.nodes[n];
    if (const auto* c = std::get_if<ChanceNode>(&node.data)) {
      out << "chance " << node.id;
      for (std::size_t i = 0; i < c->children.size(); ++i) {
        out << ' ' << detail::format_double(c->probs[i]) << ':' << game.nodes[c->children[i]].id;
      }
      for (auto i = c->children.size(); i-- > 0;) stack.push_back(c->children[i]);
    } else if (const auto* p = std::get_if<PlayerNode>(&node.data)) {
      out << "player " << node.id << ' ' << p->player << ' ' << p->infoset;
      for (std::size_t i = 0; i < p->children.size(); ++i) {
        out << ' ' << p->actions[i] << ':' << game.nodes[p->children[i]].id;
      }
      for (auto i = p->children.size(); i-- > 0;) stack.push_back(p->children[i]);
    } else {
      out << "terminal " << node.id << ' ' << detail::format_double(std::get<TerminalNode>(node.data).payoff);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace spcfr
