#pragma once

// Helpers shared by the unit tests and the acceptance binary: sample
// loading, the researcher instances written out by hand, a random scenario
// generator, and brute-force oracles that do not reuse engine code.

#include <random>
#include <sstream>

#include "satchase/satchase.hpp"

namespace testing_support {

using namespace satchase;

struct Loaded {
  Scenario scenario;
  Instance source;
};

inline Loaded load_sample(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::path(SATCHASE_SAMPLES) / name;
  Loaded l{load_mapping(dir / "mapping.map"), {}};
  l.source = load_instance(dir / "source", l.scenario.source);
  return l;
}

inline Value S(std::string_view s) { return Value::string(s); }
inline Value I(std::int64_t v) { return Value::integer(v); }
inline Value N(std::uint64_t n) { return Value::null(n); }

// Researcher / Research_Prize facts as printed in the running example.
inline Instance researchers_presolution(const Schema& target) {
  Instance j(target);
  const std::vector<std::tuple<const char*, const char*, int, int>> r = {
      {"Ronald", "Red", 1, 2},       {"John", "Gray", 3, 4},      {"John", "Gray", 5, 6},
      {"Wallace", "Blue", 7, 8},     {"Fredric", "Brown", 9, 10}, {"Marlon", "Bold", 11, 12},
      {"Marlon", "Bold", 13, 14},    {"Ronald", "Red", 15, 16},   {"Matthew", "Orange", 17, 16},
      {"Fredric", "Brown", 18, 19},  {"Miriam", "White", 20, 19}};
  for (auto [n, s, a, b] : r) j.insert("Researcher", {S(n), S(s), N(a), N(b)});
  const std::vector<std::pair<int, int>> p = {{2014, 5}, {1932, 7}, {1932, 9}, {1954, 11}, {1972, 13}};
  for (auto [y, z] : p) j.insert("Research_Prize", {S("Turing"), I(y), N(z)});
  return j;
}

inline Instance researchers_solution(const Schema& target) {
  Instance j(target);
  const std::vector<std::tuple<const char*, const char*, int, int>> r = {
      {"John", "Gray", 5, 6},        {"Wallace", "Blue", 7, 8},   {"Marlon", "Bold", 13, 14},
      {"Ronald", "Red", 15, 16},     {"Matthew", "Orange", 17, 16}, {"Fredric", "Brown", 7, 19},
      {"Miriam", "White", 20, 19}};
  for (auto [n, s, a, b] : r) j.insert("Researcher", {S(n), S(s), N(a), N(b)});
  const std::vector<std::pair<int, int>> p = {{2014, 5}, {1932, 7}, {1954, 13}, {1972, 13}};
  for (auto [y, z] : p) j.insert("Research_Prize", {S("Turing"), I(y), N(z)});
  return j;
}

// ---------------------------------------------------------------------------
// Random scenarios: up to 5 tgds, 3 fds and 50 source tuples over a small
// value domain, so keys collide often and some fds clash on constants.

struct RandomScenario {
  std::string text;
  Scenario scenario;
  Instance source;
};

inline RandomScenario random_scenario(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto chance = [&](double p) { return std::bernoulli_distribution(p)(rng); };

  const int n_src = pick(1, 3), n_tgt = pick(1, 3);
  std::vector<int> src_arity(n_src), tgt_arity(n_tgt);
  std::ostringstream t;
  for (int i = 0; i < n_src; ++i) {
    src_arity[i] = pick(1, 3);
    t << "SOURCE S" << i << "(";
    for (int a = 0; a < src_arity[i]; ++a) t << (a ? "," : "") << "a" << a;
    t << ").\n";
  }
  for (int i = 0; i < n_tgt; ++i) {
    tgt_arity[i] = pick(2, 4);
    t << "TARGET T" << i << "(";
    for (int a = 0; a < tgt_arity[i]; ++a) t << (a ? "," : "") << "b" << a;
    t << ").\n";
  }

  const int n_tgds = pick(1, 5);
  for (int m = 0; m < n_tgds; ++m) {
    const int body_atoms = chance(0.3) ? 2 : 1;
    std::vector<std::string> universals;
    std::ostringstream body;
    for (int b = 0; b < body_atoms; ++b) {
      const int rel = pick(0, n_src - 1);
      body << (b ? ", " : "") << "S" << rel << "(";
      for (int a = 0; a < src_arity[rel]; ++a) {
        std::string v;
        if (!universals.empty() && chance(0.3)) {
          v = universals[pick(0, static_cast<int>(universals.size()) - 1)];
        } else {
          v = "x" + std::to_string(universals.size());
          universals.push_back(v);
        }
        body << (a ? "," : "") << v;
      }
      body << ")";
    }
    const int n_ex = pick(0, 3);
    std::ostringstream head;
    const int head_atoms = pick(1, 3);
    for (int h = 0; h < head_atoms; ++h) {
      const int rel = pick(0, n_tgt - 1);
      head << (h ? ", " : "") << "T" << rel << "(";
      for (int a = 0; a < tgt_arity[rel]; ++a) {
        head << (a ? "," : "");
        const double r = std::uniform_real_distribution<double>(0, 1)(rng);
        if (r < 0.08) {
          head << pick(0, 2);
        } else if (n_ex > 0 && r < 0.45) {
          head << "E" << pick(0, n_ex - 1);
        } else {
          head << universals[pick(0, static_cast<int>(universals.size()) - 1)];
        }
      }
      head << ")";
    }
    t << "TGD m" << m + 1 << ": " << body.str() << " -> " << head.str() << ".\n";
  }

  const int n_fds = pick(0, 3);
  for (int f = 0; f < n_fds; ++f) {
    const int rel = pick(0, n_tgt - 1);
    const int arity = tgt_arity[rel];
    std::vector<int> pos(arity);
    for (int i = 0; i < arity; ++i) pos[i] = i + 1;
    std::shuffle(pos.begin(), pos.end(), rng);
    const int nl = chance(0.75) ? 1 : std::min(2, arity - 1);
    const int nr = pick(1, arity - nl);
    std::vector<int> lhs(pos.begin(), pos.begin() + nl), rhs(pos.begin() + nl, pos.begin() + nl + nr);
    std::sort(lhs.begin(), lhs.end());
    std::sort(rhs.begin(), rhs.end());
    t << "FD f" << f + 1 << ": T" << rel << "[";
    for (std::size_t i = 0; i < lhs.size(); ++i) t << (i ? "," : "") << lhs[i];
    t << "] -> [";
    for (std::size_t i = 0; i < rhs.size(); ++i) t << (i ? "," : "") << rhs[i];
    t << "].\n";
  }

  RandomScenario out{t.str(), parse_mapping(t.str()), {}};
  out.source = Instance(out.scenario.source);
  // Small domains make key agreements likely; a narrow domain on some
  // relations also makes constant clashes (chase failures) likely.
  const int domain = pick(2, 6);
  const int budget = pick(0, 50);
  for (int k = 0; k < budget; ++k) {
    const int rel = pick(0, n_src - 1);
    Tuple row;
    for (int a = 0; a < src_arity[rel]; ++a) row.push_back(Value::integer(pick(0, domain - 1)));
    out.source.insert(static_cast<std::uint32_t>(rel), std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Oracles

/// Brute-force isomorphism: try every bijection between the null sets.
inline bool brute_isomorphic(const Instance& a, const Instance& b) {
  auto nulls_of = [](const Instance& x) {
    std::set<std::uint64_t> s;
    for (const auto& f : x.facts())
      for (const auto& v : f.args)
        if (v.is_null()) s.insert(v.null_id());
    return std::vector<std::uint64_t>(s.begin(), s.end());
  };
  if (a.size() != b.size()) return false;
  const auto na = nulls_of(a);
  auto nb = nulls_of(b);
  if (na.size() != nb.size()) return false;
  std::sort(nb.begin(), nb.end());
  do {
    Instance img(a.schema());
    for (auto f : a.facts()) {
      for (auto& v : f.args)
        if (v.is_null()) v = Value::null(nb[std::lower_bound(na.begin(), na.end(), v.null_id()) - na.begin()]);
      img.insert(std::move(f));
    }
    if (img == b) return true;
  } while (std::next_permutation(nb.begin(), nb.end()));
  return false;
}

/// Interaction of two final assignment images, checked directly on the
/// materialized head atoms: some fd's key positions agree.
inline bool facts_interact(const Scenario& sc, std::uint32_t t1, const Tuple& img1, std::uint32_t t2,
                           const Tuple& img2) {
  const auto f1 = materialize(sc.tgds[t1], img1), f2 = materialize(sc.tgds[t2], img2);
  for (const auto& fd : sc.fds)
    for (const auto& x : f1)
      for (const auto& y : f2) {
        if (x.rel != fd.rel || y.rel != fd.rel) continue;
        bool same = true;
        for (const auto p : fd.lhs) same = same && x.args[p] == y.args[p];
        if (same) return true;
      }
  return false;
}

/// Pairs (member, outsider) of a recorded set partition that collide:
/// they interact in the final images of a complete successful chase.
inline std::size_t cross_set_collisions(const Scenario& sc, const Instance& source,
                                        const std::vector<std::vector<std::uint64_t>>& sets) {
  std::vector<Tuple> finals;
  ObliviousOptions o;
  o.order = StepOrder::TgdsFirst;
  o.final_images = &finals;
  const auto ref = oblivious_chase(sc, source, o);
  if (!ref.ok()) return 0;
  NullSource ns(1);
  const auto aset = initial_assignment_set(sc, source, ns);
  std::vector<std::size_t> set_of(aset.size(), SIZE_MAX);
  for (std::size_t s = 0; s < sets.size(); ++s)
    for (const auto id : sets[s]) set_of[id] = s;
  std::size_t bad = 0;
  for (std::uint64_t i = 0; i < aset.size(); ++i)
    for (std::uint64_t j = i + 1; j < aset.size(); ++j)
      if (set_of[i] != set_of[j] && facts_interact(sc, aset.all[i].tgd, finals[i], aset.all[j].tgd, finals[j])) ++bad;
  return bad;
}

}  // namespace testing_support
