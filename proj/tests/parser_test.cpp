#include <gtest/gtest.h>

#include "support.hpp"

using namespace satchase;
using testing_support::I;
using testing_support::N;
using testing_support::S;

namespace {

std::string ex21_text() { return read_file(std::filesystem::path(SATCHASE_SAMPLES) / "example21" / "mapping.map"); }

std::string error_of(std::string_view text) {
  try {
    parse_mapping(text);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Mapping, ParsesResearchersExample) {
  const Scenario sc = parse_mapping(ex21_text());
  ASSERT_EQ(sc.source.size(), 3u);
  ASSERT_EQ(sc.target.size(), 2u);
  ASSERT_EQ(sc.tgds.size(), 3u);
  ASSERT_EQ(sc.fds.size(), 2u);

  const StTgd& m2 = sc.tgds[1];
  EXPECT_EQ(m2.id, "m2");
  EXPECT_EQ(m2.num_universals, 4u);
  EXPECT_EQ(m2.num_existentials(), 2u);
  EXPECT_EQ(m2.variables[0].name, "n'");
  EXPECT_EQ(m2.variables[4].name, "T");
  EXPECT_EQ(m2.variables[5].name, "T1");
  EXPECT_EQ(sc.tgds[2].num_existentials(), 3u);

  EXPECT_EQ(sc.fds[0].lhs, (std::vector<std::uint32_t>{0, 1}));
  EXPECT_EQ(sc.fds[0].rhs, (std::vector<std::uint32_t>{2, 3}));
  EXPECT_EQ(sc.fds[1].rhs, (std::vector<std::uint32_t>{2}));
}

TEST(Mapping, PrintParseRoundTrip) {
  const Scenario sc = parse_mapping(ex21_text());
  const std::string printed = print_mapping(sc);
  const Scenario again = parse_mapping(printed);
  EXPECT_EQ(again, sc);
  EXPECT_EQ(print_mapping(again), printed);
}

TEST(Mapping, RoundTripOnRandomScenarios) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto r = testing_support::random_scenario(seed);
    EXPECT_EQ(parse_mapping(print_mapping(r.scenario)), r.scenario) << r.text;
  }
}

TEST(Mapping, ConstantsAndComments) {
  const Scenario sc = parse_mapping(R"(
    % comment
    SOURCE A(x).  # trailing comment
    TARGET R(a, b, c).
    TGD m: A(x) -> R(x, "lit", 42).
    FD f: R[1] -> [2, 3].
  )");
  const auto& head = sc.tgds[0].head[0];
  EXPECT_EQ(head.args[1].value(), S("lit"));
  EXPECT_EQ(head.args[2].value(), I(42));
}

TEST(Mapping, Errors) {
  EXPECT_NE(error_of("SOURCE A(x). TARGET R(a). TGD m: B(x) -> R(x)."), "");
  EXPECT_NE(error_of("SOURCE A(x). TARGET R(a). TGD m: A(x, y) -> R(x)."), "");
  EXPECT_NE(error_of("SOURCE A(x). SOURCE A(y)."), "");
  EXPECT_NE(error_of("SOURCE A(x). TARGET R(a,b). TGD m: A(x) -> R(x,x). TGD m: A(x) -> R(x,x)."), "");
  EXPECT_NE(error_of("SOURCE A(x,y). TARGET R(a,b). FD f: A[1] -> [2]."), "");
  EXPECT_NE(error_of("SOURCE A(x). TARGET R(a,b). FD f: R[1] -> [1]."), "");
  EXPECT_NE(error_of("SOURCE A(x). TARGET R(a,b). FD f: R[0] -> [1]."), "");
  EXPECT_NE(error_of("SOURCE A(x). TARGET R(a). TGD m: A(x) -> R(x)"), "");
}

TEST(Mapping, ErrorCarriesLine) {
  try {
    parse_mapping("SOURCE A(x).\nTARGET R(a).\nTGD m: A(x) -> Q(x).\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Csv, TypingAndQuoting) {
  const auto rows = csv::parse("a,b,c\n1,\"1\",_:N4\n\"x,y\",\"say \"\"hi\"\"\",-7\r\n");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(csv::to_value(rows[1][0]), I(1));
  EXPECT_EQ(csv::to_value(rows[1][1]), S("1"));
  EXPECT_EQ(csv::to_value(rows[1][2]), N(4));
  EXPECT_EQ(csv::to_value(rows[2][0]), S("x,y"));
  EXPECT_EQ(csv::to_value(rows[2][1]), S("say \"hi\""));
  EXPECT_EQ(csv::to_value(rows[2][2]), I(-7));
}

TEST(Csv, RenderRoundTrips) {
  for (const Value v : {I(5), S("5"), S(""), S("a,b"), S("q\"q"), N(9), S("_:N3"), S("plain")}) {
    const auto rows = csv::parse(csv::render(v) + "\n");
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(csv::to_value(rows[0][0]), v) << csv::render(v);
  }
}

TEST(Csv, LoadInstance) {
  const auto dir = std::filesystem::temp_directory_path() / "satchase_csv_load";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  { std::ofstream(dir / "A.csv") << "x,y\n1,a\n2,b\n1,a\n"; }
  Schema s;
  s.add({"A", {"x", "y"}});
  s.add({"B", {"z"}});
  std::vector<std::string> warnings;
  LoadOptions lo;
  lo.warn = [&](const std::string& w) { warnings.push_back(w); };
  const Instance inst = load_instance(dir, s, lo);
  EXPECT_EQ(inst.size("A"), 2u);
  EXPECT_EQ(inst.size("B"), 0u);
  EXPECT_EQ(warnings.size(), 1u);

  { std::ofstream(dir / "B.csv") << "z\n_:N1\n"; }
  EXPECT_THROW(load_instance(dir, s), Error);
  { std::ofstream(dir / "B.csv") << "z,w\n1,2\n"; }
  EXPECT_THROW(load_instance(dir, s), Error);
  std::filesystem::remove_all(dir);
}

TEST(Csv, SerializeIsSortedAndReloadable) {
  Schema s;
  s.add({"R", {"a", "b"}});
  Instance inst(s);
  inst.insert("R", {S("z"), N(2)});
  inst.insert("R", {I(3), S("7")});
  EXPECT_EQ(to_csv(inst, 0), "a,b\n3,\"7\"\nz,_:N2\n");
  const auto dir = std::filesystem::temp_directory_path() / "satchase_csv_out";
  serialize_solution(inst, dir);
  LoadOptions lo;
  lo.allow_nulls = true;
  EXPECT_EQ(load_instance(dir, s, lo), inst);
  EXPECT_EQ(infer_schema(dir), s);
  std::filesystem::remove_all(dir);
}
