#include <gtest/gtest.h>

#include "support.hpp"

using namespace satchase;
using testing_support::I;
using testing_support::N;
using testing_support::S;

TEST(MutableExistentials, InductiveDefinitionExample) {
  const Scenario sc = parse_mapping(R"(
    SOURCE A(x, y).
    TARGET R(a, b). TARGET S(a, b). TARGET T(a, b). TARGET U(a, b). TARGET W(a, b).
    TGD m: A(x, y) -> R(x, C), S(C, G), T(y, D), U(L, D), W(V, M), W(V, N).
    FD kr: R[1] -> [2]. FD ks: S[1] -> [2]. FD kt: T[1] -> [2]. FD ku: U[1] -> [2]. FD kw: W[1] -> [2].
  )");
  EXPECT_EQ(compute_mutable_existentials(sc.tgds[0], sc.fds), (std::set<std::string>{"C", "D", "G", "M", "N"}));
}

TEST(MutableExistentials, NoFdsNoMutables) {
  const Scenario sc = parse_mapping("SOURCE A(x). TARGET R(a, b). TGD m: A(x) -> R(x, Y).");
  EXPECT_TRUE(compute_mutable_existentials(sc.tgds[0], sc.fds).empty());
}

TEST(ConflictGraph, ResearchersExampleStructure) {
  const auto l = testing_support::load_sample("example21");
  const ConflictGraph g = build_conflict_graph(l.scenario);
  ASSERT_EQ(g.vertex_count(), 3u);
  EXPECT_EQ(g.edges, (std::vector<std::pair<std::uint32_t, std::uint32_t>>{{0, 1}, {0, 2}, {1, 2}, {2, 2}}));
  EXPECT_FALSE(g.has_edge(0, 0));
  EXPECT_FALSE(g.has_edge(1, 1));
  EXPECT_TRUE(g.has_edge(2, 2));
  ASSERT_EQ(g.components.size(), 1u);
  EXPECT_EQ(g.areas[0].size(), 1u);
  EXPECT_EQ(g.areas[1].size(), 2u);
  EXPECT_EQ(g.areas[2].size(), 2u);
}

TEST(ConflictGraph, ResearchersExampleListing) {
  const auto l = testing_support::load_sample("example21");
  EXPECT_EQ(dump_graph(l.scenario, build_conflict_graph(l.scenario)),
            "vertex v1 m1\n"
            "  area ca1_1 = <(n,s),e1> atom 1\n"
            "vertex v2 m2\n"
            "  area ca2_1 = <(n',s'),e1> atom 1\n"
            "  area ca2_2 = <(p',w'),e2> atom 2\n"
            "vertex v3 m3\n"
            "  area ca3_1 = <(n'',s''),e1> atom 1\n"
            "  area ca3_2 = <(n''',s'''),e1> atom 2\n"
            "edge v1 v2\n"
            "edge v1 v3\n"
            "edge v2 v3\n"
            "edge v3 v3 (self-loop)\n"
            "component 1: v1 v2 v3\n");
}

TEST(ConflictGraph, AreasNeedStableKeys) {
  const Scenario sc = parse_mapping(R"(
    SOURCE A(x).
    TARGET R(a, b).
    TGD m1: A(x) -> R(Z, x).
    TGD m2: A(x) -> R(x, x).
    FD f: R[1] -> [2].
  )");
  const ConflictGraph g = build_conflict_graph(sc);
  EXPECT_TRUE(g.areas[0].empty());
  EXPECT_EQ(g.areas[1].size(), 1u);
  EXPECT_TRUE(g.edges.empty());
  EXPECT_EQ(g.components.size(), 2u);
}

TEST(ConnectedComponents, OrderedBySmallestVertex) {
  const std::vector<std::vector<std::uint32_t>> adj{{3}, {}, {4}, {0}, {2, 4}};
  EXPECT_EQ(connected_components(adj),
            (std::vector<std::vector<std::uint32_t>>{{0, 3}, {1}, {2, 4}}));
}

TEST(ConnectedComponents, LongPathDoesNotRecurse) {
  const std::uint32_t n = 200000;
  std::vector<std::vector<std::uint32_t>> adj(n);
  for (std::uint32_t i = 0; i + 1 < n; ++i) {
    adj[i].push_back(i + 1);
    adj[i + 1].push_back(i);
  }
  const auto comps = connected_components(adj);
  ASSERT_EQ(comps.size(), 1u);
  EXPECT_EQ(comps[0].size(), n);
}

TEST(Masks, FromResolvedImage) {
  const auto l = testing_support::load_sample("example21");
  const ConflictGraph g = build_conflict_graph(l.scenario);
  const Tuple img{S("John"), S("Gray"), S("Turing"), I(2014), N(5), N(6)};
  const ConflictMask m = mask_of(img, g.areas[1][0]);
  EXPECT_EQ(m.fd, 0u);
  EXPECT_EQ(m.cells, (std::vector<std::optional<Value>>{S("John"), S("Gray")}));

  const Scenario sc = parse_mapping(R"(
    SOURCE A(x). TARGET R(a, b). TARGET S(a, b).
    TGD m: A(x) -> R(x, Y), S(Y, x).
    FD f: R[1] -> [2]. FD g: S[1] -> [2].
  )");
  const ConflictGraph g2 = build_conflict_graph(sc);
  ASSERT_EQ(g2.areas[0].size(), 2u);
  EXPECT_EQ(mask_of(Tuple{I(1), N(3)}, g2.areas[0][1]).cells, (std::vector<std::optional<Value>>{std::nullopt}));
  EXPECT_EQ(mask_of(Tuple{I(1), I(4)}, g2.areas[0][1]).cells, (std::vector<std::optional<Value>>{I(4)}));
}

TEST(Masks, Subsumption) {
  const ConflictMask any{0, {std::nullopt, std::nullopt}};
  const ConflictMask half{0, {I(1), std::nullopt}};
  const ConflictMask full{0, {I(1), I(2)}};
  const ConflictMask other_fd{1, {std::nullopt, std::nullopt}};
  EXPECT_TRUE(subsumes(any, half));
  EXPECT_TRUE(subsumes(half, full));
  EXPECT_TRUE(subsumes(any, full));
  EXPECT_TRUE(subsumes(full, full));
  EXPECT_FALSE(subsumes(full, half));
  EXPECT_FALSE(subsumes(other_fd, full));
  EXPECT_FALSE(subsumes(ConflictMask{0, {I(3), std::nullopt}}, full));
}

TEST(Masks, SubsumptionImpliesMatchInclusion) {
  // Whatever matches the specific mask matches every mask subsuming it.
  std::mt19937_64 rng(7);
  const Scenario sc = parse_mapping(R"(
    SOURCE A(x, y, z). TARGET R(a, b, c, d).
    TGD m: A(x, y, z) -> R(x, y, z, W).
    FD f: R[1, 2, 3] -> [4].
  )");
  const ConflictGraph g = build_conflict_graph(sc);
  const ConflictArea& area = g.areas[0][0];
  auto cell = [&] { return rng() % 3 == 0 ? std::optional<Value>() : std::optional<Value>(I(rng() % 2)); };
  for (int k = 0; k < 2000; ++k) {
    ConflictMask specific{0, {cell(), cell(), cell()}};
    ConflictMask general = specific;
    for (auto& c : general.cells)
      if (rng() % 2) c.reset();
    ASSERT_TRUE(subsumes(general, specific));
    const Tuple img{I(rng() % 2), I(rng() % 2), I(rng() % 2), N(1)};
    if (matches(img, specific, area)) EXPECT_TRUE(matches(img, general, area));
  }
}

TEST(Overlap, ResearchersAssignments) {
  const auto l = testing_support::load_sample("example21");
  const ConflictGraph g = build_conflict_graph(l.scenario);
  const Tuple john_m1{S("John"), S("Gray"), I(33), N(3), N(4)};
  const Tuple john_m2{S("John"), S("Gray"), S("Turing"), I(2014), N(5), N(6)};
  const Tuple wallace_m2{S("Wallace"), S("Blue"), S("Turing"), I(1932), N(7), N(8)};
  EXPECT_TRUE(overlap(l.scenario, g, 0, john_m1, 1, john_m2));
  EXPECT_FALSE(overlap(l.scenario, g, 0, john_m1, 1, wallace_m2));
  // Same prize and year.
  const Tuple fredric_m2{S("Fredric"), S("Brown"), S("Turing"), I(1932), N(9), N(10)};
  EXPECT_TRUE(overlap(l.scenario, g, 1, wallace_m2, 1, fredric_m2));
}

TEST(Overlap, EquivalentToConflictAndMaskMatch) {
  // Direct overlap holds iff some conflict <ca1, ca2> exists and the second
  // assignment matches the first one's mask on ca2.
  std::mt19937_64 rng(11);
  std::size_t positives = 0, checked = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto r = testing_support::random_scenario(seed);
    const auto& sc = r.scenario;
    const ConflictGraph g = build_conflict_graph(sc);
    auto random_image = [&](std::uint32_t t) {
      Tuple img;
      for (std::uint32_t s = 0; s < sc.tgds[t].variables.size(); ++s) {
        const bool as_null = sc.tgds[t].is_existential(s) && rng() % 2;
        img.push_back(as_null ? N(100 + rng() % 3) : I(rng() % 2));
      }
      return img;
    };
    for (int k = 0; k < 20; ++k) {
      const auto t1 = static_cast<std::uint32_t>(rng() % sc.tgds.size());
      const auto t2 = static_cast<std::uint32_t>(rng() % sc.tgds.size());
      const Tuple i1 = random_image(t1), i2 = random_image(t2);
      bool via_masks = false;
      for (const auto& ca1 : g.areas[t1])
        for (const auto& ca2 : g.areas[t2])
          if (ca1.fd == ca2.fd && matches(i2, mask_of(i1, ca1), ca2)) via_masks = true;
      const bool direct = overlap(sc, g, t1, i1, t2, i2);
      EXPECT_EQ(direct, via_masks) << r.text;
      positives += direct;
      ++checked;
    }
  }
  EXPECT_GT(positives, checked / 20);
}

TEST(Overlap, ImpliedByInteractionOfInitialImages) {
  // Interaction of two initial images implies overlap.
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto r = testing_support::random_scenario(seed);
    NullSource ns(1);
    const auto aset = initial_assignment_set(r.scenario, r.source, ns);
    const ConflictGraph g = build_conflict_graph(r.scenario);
    for (std::size_t i = 0; i < aset.size(); ++i)
      for (std::size_t j = i + 1; j < aset.size(); ++j) {
        const auto &a = aset.all[i], &b = aset.all[j];
        if (interact(r.scenario, a.tgd, a.image, b.tgd, b.image))
          EXPECT_TRUE(overlap(r.scenario, g, a.tgd, a.image, b.tgd, b.image)) << r.text;
      }
  }
}
