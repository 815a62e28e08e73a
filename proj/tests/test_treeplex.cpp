#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles/oracles.hpp"
#include "spcfr/builders.hpp"
#include "spcfr/treeplex.hpp"

namespace spcfr {
namespace {

std::size_t by_label(const TreePlex& tree, const std::string& label) {
  for (std::size_t j = 0; j < tree.num_decisions(); ++j) {
    if (tree.decision(j).label == label) return j;
  }
  throw std::out_of_range(label);
}

DecisionSpec leaf(const std::string& label, int n) {
  DecisionSpec d{label, {}};
  for (int a = 0; a < n; ++a) d.actions.push_back({"a" + std::to_string(a), std::nullopt});
  return d;
}

TEST(Treeplex, pre_order_layout_keeps_subtrees_contiguous) {
  // Setup
  const auto tree = oracle::random_treeplex(11, 4);

  // Verification
  for (std::size_t j = 0; j < tree.num_decisions(); ++j) {
    const auto& node = tree.decision(j);
    EXPECT_EQ(tree.local_range(j).begin, node.first_sequence);
    for (std::size_t a = 0; a < node.num_actions(); ++a) {
      EXPECT_EQ(tree.sequence_owner(node.first_sequence + a), j);
      for (std::size_t c : tree.children_of(j, a)) {
        EXPECT_GT(c, j);
        EXPECT_TRUE(tree.subtree_range(j).contains(tree.decision(c).first_sequence));
        EXPECT_EQ(*tree.decision(c).parent_sequence, node.first_sequence + a);
      }
    }
  }
  EXPECT_EQ(tree.subtree_range(tree.root()).size(), tree.num_sequences());
}

TEST(Treeplex, kuhn_uniform_sequence_form_entry) {
  // Setup
  const auto g = build_kuhn();
  const auto& tree = g.treeplex_x;

  // Action
  const auto x = to_sequence_form(tree, BehavioralStrategy::uniform(tree));

  // Verification
  const std::size_t facing = by_label(tree, "P1:J:check:raise");
  EXPECT_DOUBLE_EQ(x[tree.sequence(facing, 0)], 0.25);
}

TEST(Treeplex, deterministic_strategy_gives_unit_entries) {
  // Setup
  const auto tree = oracle::random_treeplex(3, 4);
  const auto pure = oracle::pure_behavioral(tree).back();

  // Action
  const auto x = to_sequence_form(tree, BehavioralStrategy{pure});

  // Verification
  std::size_t reached = 0, units = 0;
  for (std::size_t j = 0; j < tree.num_decisions(); ++j) {
    if (parent_mass(tree, x.values, j) == 1.0) ++reached;
  }
  for (double v : x.values) {
    EXPECT_TRUE(v == 0.0 || v == 1.0);
    if (v == 1.0) ++units;
  }
  EXPECT_EQ(units, reached);
}

TEST(Treeplex, random_strategy_matches_recursive_realization_plan) {
  std::mt19937_64 rng(5);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    // Setup
    const auto tree = oracle::random_treeplex(seed, 3);
    const auto b = oracle::random_behavioral(tree, rng);

    // Action
    const auto x = to_sequence_form(tree, BehavioralStrategy{b});

    // Verification
    EXPECT_LT(flow_conservation_residual(tree, x.values), 1e-12);
    const auto expected = oracle::realization_plan(tree, b);
    for (std::size_t s = 0; s < x.size(); ++s) EXPECT_NEAR(x[s], expected[s], 1e-15);
  }
}

TEST(Treeplex, uniform_round_trip_on_kuhn_is_exact) {
  const auto tree = build_kuhn().treeplex_x;
  const auto u = BehavioralStrategy::uniform(tree);
  EXPECT_EQ(to_behavioral(tree, to_sequence_form(tree, u)).probs, u.probs);
}

TEST(Treeplex, zero_parent_mass_gives_uniform) {
  // Setup
  const auto tree = build_kuhn().treeplex_x;
  const std::size_t top = by_label(tree, "P1:J");
  auto b = BehavioralStrategy::uniform(tree);
  b.at(tree, top)[0] = 0.0;  // never check, so the fold/call node is unreachable
  b.at(tree, top)[1] = 1.0;
  const std::size_t facing = by_label(tree, "P1:J:check:raise");
  b.at(tree, facing)[0] = 0.9;
  b.at(tree, facing)[1] = 0.1;

  // Action
  const auto back = to_behavioral(tree, to_sequence_form(tree, b));

  // Verification
  EXPECT_DOUBLE_EQ(back.at(tree, facing)[0], 0.5);
  EXPECT_DOUBLE_EQ(back.at(tree, facing)[1], 0.5);
}

TEST(Treeplex, random_round_trip_error_is_small) {
  std::mt19937_64 rng(9);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto tree = oracle::random_treeplex(100 + seed, 4);
    const auto b = oracle::random_behavioral(tree, rng);
    const auto back = to_behavioral(tree, to_sequence_form(tree, BehavioralStrategy{b}));
    for (std::size_t s = 0; s < b.size(); ++s) EXPECT_NEAR(back.probs[s], b[s], 1e-9);
  }
}

TEST(Treeplex, slice_down_at_root_and_leaf) {
  // Setup
  const auto tree = oracle::random_treeplex(21, 3);
  std::vector<double> v(tree.num_sequences());
  for (std::size_t s = 0; s < v.size(); ++s) v[s] = static_cast<double>(s);

  // Verification
  EXPECT_EQ(slice_down(tree, v, tree.root()), v);
  for (std::size_t j = 0; j < tree.num_decisions(); ++j) {
    const auto& node = tree.decision(j);
    if (std::any_of(node.children.begin(), node.children.end(), [](const auto& c) { return c.has_value(); })) continue;
    const auto s = slice_down(tree, v, j);
    ASSERT_EQ(s.size(), node.num_actions());
    EXPECT_EQ(s.front(), static_cast<double>(node.first_sequence));
  }
}

TEST(Treeplex, kuhn_slice_below_first_card_infoset) {
  // Setup
  const auto tree = build_kuhn().treeplex_x;
  const std::size_t top = by_label(tree, "P1:J");
  const std::size_t facing = by_label(tree, "P1:J:check:raise");
  std::vector<double> v(tree.num_sequences());
  for (std::size_t s = 0; s < v.size(); ++s) v[s] = static_cast<double>(s);

  // Action
  const auto s = slice_down(tree, v, top);

  // Verification
  const std::vector<double> expected{double(tree.sequence(top, 0)), double(tree.sequence(top, 1)),
                                     double(tree.sequence(facing, 0)), double(tree.sequence(facing, 1))};
  EXPECT_EQ(s, expected);
}

TEST(Treeplex, norm_bounds_on_small_shapes) {
  // Setup: one action leading to two leaf decisions
  DecisionSpec root{"root", {}};
  ObservationSpec obs;
  obs.signals.push_back({"s0", leaf("l0", 2)});
  obs.signals.push_back({"s1", leaf("l1", 3)});
  root.actions.push_back({"go", obs});
  const TreePlex tree(root);

  // Action
  const auto b = subtree_norm_bounds(tree);

  // Verification
  EXPECT_DOUBLE_EQ(b.decision[1], 1.0);
  EXPECT_DOUBLE_EQ(b.observation[0], std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(b.decision[0], std::sqrt(3.0));
}

TEST(Treeplex, kuhn_norm_bound_matches_vertex_enumeration) {
  // Setup
  const auto tree = build_kuhn().treeplex_x;
  double worst = 0.0;
  for (const auto& v : oracle::subtree_vertices(tree, tree.root())) {
    double sq = 0.0;
    for (double a : v) sq += a * a;
    worst = std::max(worst, sq);
  }

  // Action
  const auto b = subtree_norm_bounds(tree);

  // Verification
  EXPECT_DOUBLE_EQ(worst, 7.0);
  EXPECT_NEAR(b.decision[tree.root()], std::sqrt(7.0), 1e-15);
}

TEST(Treeplex, norm_bounds_dominate_vertices_on_random_trees) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto tree = oracle::random_treeplex(200 + seed, 3);
    const auto b = subtree_norm_bounds(tree);
    for (std::size_t j = 0; j < tree.num_decisions(); ++j) {
      for (const auto& v : oracle::subtree_vertices(tree, j)) {
        double sq = 0.0;
        for (double a : v) sq += a * a;
        EXPECT_LE(std::sqrt(sq), b.decision[j] + 1e-12);
      }
    }
  }
}

TEST(Treeplex, dimension_mismatch_is_structural_error) {
  const auto tree = build_kuhn().treeplex_x;
  EXPECT_THROW(to_sequence_form(tree, BehavioralStrategy{std::vector<double>(3, 0.5)}), StructuralError);
  EXPECT_THROW(tree.decision(tree.num_decisions()), StructuralError);
}

}  // namespace
}  // namespace spcfr
