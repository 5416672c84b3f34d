#include <gtest/gtest.h>

#include "support.hpp"

using namespace satchase;
using testing_support::I;
using testing_support::N;
using testing_support::S;

TEST(EqualityClasses, NullNullKeepsSmallestId) {
  EqualityClasses c;
  EXPECT_EQ(c.unify(N(5), N(3)), UnifyResult::Merged);
  EXPECT_EQ(c.resolve(N(5)), N(3));
  EXPECT_EQ(c.unify(N(3), N(9)), UnifyResult::Merged);
  EXPECT_EQ(c.resolve(N(9)), N(3));
  EXPECT_EQ(c.unify(N(9), N(5)), UnifyResult::NoOp);
}

TEST(EqualityClasses, NullConstantAndClash) {
  EqualityClasses c;
  EXPECT_EQ(c.unify(N(2), N(4)), UnifyResult::Merged);
  EXPECT_EQ(c.unify(N(4), S("a")), UnifyResult::Merged);
  EXPECT_EQ(c.resolve(N(2)), S("a"));
  EXPECT_EQ(c.unify(S("a"), N(2)), UnifyResult::NoOp);
  EXPECT_EQ(c.unify(N(2), S("b")), UnifyResult::Fail);
  EXPECT_EQ(c.unify(I(1), I(2)), UnifyResult::Fail);
  EXPECT_EQ(c.resolve(I(1)), I(1));
}

namespace {

struct Cascade {
  Scenario sc = parse_mapping(R"(
    SOURCE A(x). SOURCE B(x, z).
    TARGET R(a, b). TARGET S(a, b).
    TGD m1: A(x) -> R(x, Y), S(Y, Z).
    TGD m2: B(x, z) -> R(x, W), S(W, z).
    FD f1: R[1] -> [2].
    FD f2: S[1] -> [2].
  )");
  Instance src{sc.source};
  Cascade() {
    src.insert("A", {I(1)});
    src.insert("B", {I(1), I(7)});
  }
};

}  // namespace

TEST(SetChaser, CascadingMerges) {
  Cascade c;
  NullSource ns(1);
  const auto aset = initial_assignment_set(c.sc, c.src, ns);
  // m1: {x:1, Y:N1, Z:N2}; m2: {x:1, z:7, W:N3}
  const FdPlan plan = FdPlan::build(c.sc);
  SetChaser chaser(c.sc, plan);
  chaser.add(aset.all[0]);
  EXPECT_TRUE(chaser.apply_to_termination().empty());
  chaser.add(aset.all[1]);
  const auto log = chaser.apply_to_termination();
  ASSERT_EQ(log.size(), 2u);
  EXPECT_EQ(log[0], (Merge{N(3), N(1), "f1"}));
  EXPECT_EQ(log[1], (Merge{N(2), I(7), "f2"}));
  EXPECT_EQ(chaser.resolved_image(0), (Tuple{I(1), N(1), I(7)}));
  EXPECT_EQ(chaser.resolved_image(1), (Tuple{I(1), I(7), N(1)}));
  EXPECT_TRUE(chaser.quiescent());
}

TEST(SetChaser, ConstantClashThrowsWithWitnesses) {
  const Scenario sc = parse_mapping(R"(
    SOURCE A(x, y). TARGET R(a, b).
    TGD m: A(x, y) -> R(x, y).
    FD f: R[1] -> [2].
  )");
  Instance src(sc.source);
  src.insert("A", {I(1), S("p")});
  src.insert("A", {I(1), S("q")});
  NullSource ns(1);
  const auto aset = initial_assignment_set(sc, src, ns);
  const FdPlan plan = FdPlan::build(sc);
  SetChaser chaser(sc, plan);
  for (const auto& a : aset.all) chaser.add(a);
  try {
    chaser.apply_to_termination();
    FAIL();
  } catch (const ChaseFail& e) {
    EXPECT_EQ(e.fd_id(), "f");
    EXPECT_EQ(e.left().args[0], I(1));
    EXPECT_EQ(e.right().args[0], I(1));
    EXPECT_NE(e.left().args[1], e.right().args[1]);
  }
}

TEST(SetChaser, ResultIsFdQuiescentOnRandomScenarios) {
  // Exhaustive-scan oracle: after termination no fd has two facts agreeing
  // on the key and differing elsewhere.
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto r = testing_support::random_scenario(seed);
    NullSource ns(1);
    const auto aset = initial_assignment_set(r.scenario, r.source, ns);
    const FdPlan plan = FdPlan::build(r.scenario);
    SetChaser chaser(r.scenario, plan);
    for (const auto& a : aset.all) chaser.add(a);
    try {
      chaser.apply_to_termination();
    } catch (const ChaseFail&) {
      continue;
    }
    std::vector<Fact> facts;
    chaser.materialize_into(facts);
    for (const auto& fd : r.scenario.fds)
      for (const auto& x : facts)
        for (const auto& y : facts) {
          if (x.rel != fd.rel || y.rel != fd.rel) continue;
          bool key = true;
          for (auto p : fd.lhs) key = key && x.args[p] == y.args[p];
          if (!key) continue;
          for (auto p : fd.rhs) EXPECT_EQ(x.args[p], y.args[p]) << r.text;
        }
  }
}

TEST(SetChaser, ClearAllowsReuse) {
  Cascade c;
  NullSource ns(1);
  const auto aset = initial_assignment_set(c.sc, c.src, ns);
  const FdPlan plan = FdPlan::build(c.sc);
  SetChaser chaser(c.sc, plan);
  chaser.add(aset.all[0]);
  chaser.add(aset.all[1]);
  chaser.apply_to_termination();
  chaser.clear();
  EXPECT_EQ(chaser.size(), 0u);
  chaser.add(aset.all[1]);
  EXPECT_TRUE(chaser.apply_to_termination().empty());
  EXPECT_EQ(chaser.resolved_image(0), aset.all[1].image);
}
