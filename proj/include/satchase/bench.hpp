#pragma once

// Object-fusion scenario generator (OF, OF+, OF++) and the timing harness.
//
// Generated shape, per component g:
//   target relations T<g>_<r>(key, link, c1..cq), one fd per c column:
//     key -> link, c_i
//   tgds  S<t>(k, d0..d{h-1}) -> T<g>_<a mod R>(k, Y, d_a, .., d_a) for a < h
// where h is the head width of the family and Y is a shared existential.
// Keys drawn from a pool shared by every tgd of the component fuse under
// the fds; `fusion_rate` sets the pool size relative to the row count.

#include <cmath>
#include <ostream>

#include "satchase/chase.hpp"
#include "satchase/parser.hpp"

namespace satchase {

enum class Family { OF, OFPlus, OFPlusPlus };

inline std::string to_string(Family f) {
  switch (f) {
    case Family::OF:
      return "OF";
    case Family::OFPlus:
      return "OF+";
    case Family::OFPlusPlus:
      return "OF++";
  }
  return "?";
}

inline Family parse_family(std::string_view s) {
  if (s == "OF") return Family::OF;
  if (s == "OF+") return Family::OFPlus;
  if (s == "OF++") return Family::OFPlusPlus;
  throw Error("unknown scenario family '" + std::string(s) + "' (OF, OF+, OF++)");
}

inline std::uint32_t head_width(Family f) { return f == Family::OF ? 1 : f == Family::OFPlus ? 2 : 3; }

struct ScenarioSpec {
  Family family = Family::OF;
  std::uint32_t n_tgds = 30;
  std::uint32_t n_fds = 10;
  std::uint64_t tuples = 1000;  // per source relation
  std::uint32_t component_batches = 0;  // 0: min(n_fds, max(1, n_tgds / 3))
  std::uint64_t seed = 1;
  double fusion_rate = 0.10;

  std::uint32_t batches() const {
    return component_batches ? component_batches : std::min(n_fds, std::max<std::uint32_t>(1, n_tgds / 3));
  }

  void validate() const {
    if (n_tgds == 0 || n_fds == 0) throw Error("scenario spec needs at least one tgd and one fd");
    if (batches() > n_tgds) throw Error("more components than tgds");
    if (batches() > n_fds) throw Error("more components than fds: every component needs an fd");
    if (fusion_rate < 0 || fusion_rate > 1) throw Error("fusion rate must be in [0, 1]");
  }
};

struct GeneratedScenario {
  std::string mapping_text;
  Scenario scenario;
  Instance source;
};

namespace detail {

inline std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Deterministic in `spec`: equal specs give equal text and instances.
inline GeneratedScenario generate_scenario(const ScenarioSpec& spec) {
  spec.validate();
  const std::uint32_t groups = spec.batches();
  const std::uint32_t h = head_width(spec.family);

  std::vector<std::vector<std::uint32_t>> tgds_of(groups), fds_of(groups);
  for (std::uint32_t t = 0; t < spec.n_tgds; ++t) tgds_of[t % groups].push_back(t);
  for (std::uint32_t f = 0; f < spec.n_fds; ++f) fds_of[f % groups].push_back(f);

  // Relation layout: the group's fds are dealt over its R relations.
  struct Rel {
    std::string name;
    std::uint32_t columns = 0;
  };
  std::vector<std::vector<Rel>> rels(groups);
  std::ostringstream text;
  text << "# " << to_string(spec.family) << ": " << spec.n_tgds << " tgds, " << spec.n_fds << " fds, " << groups
       << " components\n";
  for (std::uint32_t t = 0; t < spec.n_tgds; ++t) {
    text << "SOURCE S" << t << "(k";
    for (std::uint32_t a = 0; a < h; ++a) text << ", d" << a;
    text << ").\n";
  }
  for (std::uint32_t g = 0; g < groups; ++g) {
    const auto r_count = std::min<std::uint32_t>(h, static_cast<std::uint32_t>(fds_of[g].size()));
    rels[g].resize(r_count);
    for (std::uint32_t j = 0; j < fds_of[g].size(); ++j) rels[g][j % r_count].columns++;
    for (std::uint32_t r = 0; r < r_count; ++r) {
      rels[g][r].name = "T" + std::to_string(g) + "_" + std::to_string(r);
      text << "TARGET " << rels[g][r].name << "(key, link";
      for (std::uint32_t c = 0; c < rels[g][r].columns; ++c) text << ", c" << c + 1;
      text << ").\n";
    }
  }
  for (std::uint32_t g = 0; g < groups; ++g)
    for (const auto t : tgds_of[g]) {
      text << "TGD m" << t + 1 << ": S" << t << "(k";
      for (std::uint32_t a = 0; a < h; ++a) text << ", d" << a;
      text << ") -> ";
      for (std::uint32_t a = 0; a < h; ++a) {
        const Rel& rel = rels[g][a % rels[g].size()];
        text << (a ? ", " : "") << rel.name << "(k, Y";
        for (std::uint32_t c = 0; c < rel.columns; ++c) text << ", d" << a;
        text << ")";
      }
      text << ".\n";
    }
  for (std::uint32_t g = 0; g < groups; ++g) {
    std::vector<std::uint32_t> next_col(rels[g].size(), 0);
    for (std::uint32_t j = 0; j < fds_of[g].size(); ++j) {
      const auto r = j % rels[g].size();
      text << "FD f" << fds_of[g][j] + 1 << ": " << rels[g][r].name << "[1] -> [2, " << 3 + next_col[r]++ << "].\n";
    }
  }

  GeneratedScenario out;
  out.mapping_text = text.str();
  out.scenario = parse_mapping(out.mapping_text);
  out.source = Instance(out.scenario.source);

  // Values in a d column depend only on (key, target relation), so fused
  // facts always agree on their constants and the chase never fails.
  const auto shared = static_cast<std::uint64_t>(std::ceil(static_cast<double>(spec.tuples) * spec.fusion_rate));
  const std::uint64_t salt = detail::splitmix(spec.seed);
  for (std::uint32_t g = 0; g < groups; ++g)
    for (const auto t : tgds_of[g]) {
      const auto rel = *out.scenario.source.find("S" + std::to_string(t));
      out.source.reserve(rel, spec.tuples);
      for (std::uint64_t i = 0; i < spec.tuples; ++i) {
        const std::uint64_t key = i < std::min(shared, spec.tuples) ? i : shared + t * spec.tuples + i;
        Tuple row{Value::integer(static_cast<std::int64_t>(key))};
        for (std::uint32_t a = 0; a < h; ++a) {
          const std::uint64_t r = a % rels[g].size();
          const auto d = detail::splitmix(salt ^ detail::splitmix(key * 131 + g * 7 + r)) % 1'000'000;
          row.push_back(Value::integer(static_cast<std::int64_t>(d)));
        }
        out.source.insert(rel, std::move(row));
      }
    }
  return out;
}

/// Writes `mapping.map` and `source/<S>.csv` under `directory`.
inline void write_scenario(const GeneratedScenario& gen, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  std::ofstream map(directory / "mapping.map", std::ios::binary | std::ios::trunc);
  map << gen.mapping_text;
  if (!map) throw Error("cannot write " + (directory / "mapping.map").string());
  serialize_solution(gen.source, directory / "source");
}

// ---------------------------------------------------------------------------
// Harness

enum class Engine { Oblivious, Classical, Interleaved };

inline std::string to_string(Engine e) {
  switch (e) {
    case Engine::Oblivious:
      return "oblivious";
    case Engine::Classical:
      return "classical";
    case Engine::Interleaved:
      return "interleaved";
  }
  return "?";
}

inline Engine parse_engine(std::string_view s) {
  if (s == "oblivious") return Engine::Oblivious;
  if (s == "classical") return Engine::Classical;
  if (s == "interleaved") return Engine::Interleaved;
  throw Error("unknown engine '" + std::string(s) + "' (oblivious, classical, interleaved)");
}

/// Runs one engine; parallel mode applies when `workers > 1` (interleaved only).
inline ChaseOutcome run_engine(Engine engine, const Scenario& sc, const Instance& source, unsigned workers = 1,
                               std::optional<Clock::time_point> deadline = std::nullopt, std::uint64_t seed = 0) {
  switch (engine) {
    case Engine::Oblivious: {
      ObliviousOptions o;
      o.seed = seed;
      o.deadline = deadline;
      return oblivious_chase(sc, source, o);
    }
    case Engine::Classical: {
      ClassicalOptions o;
      o.deadline = deadline;
      return classical_chase(sc, source, o);
    }
    case Engine::Interleaved: {
      InterleavedOptions o;
      o.parallel = workers > 1;
      o.workers = std::max(1u, workers);
      o.deadline = deadline;
      return interleaved_chase(sc, source, o);
    }
  }
  throw Error("unknown engine");
}

struct BenchRow {
  ScenarioSpec spec;
  Engine engine = Engine::Interleaved;
  unsigned workers = 1;
};

struct BenchOptions {
  std::chrono::milliseconds timeout{600'000};
  bool warmup = true;
};

inline constexpr const char* kBenchHeader =
    "family,n_tgds,n_fds,tuples,components_requested,seed,engine,workers,status,"
    "analysis_ms,assign_ms,chase_ms,assembly_ms,total_ms,assignments,saturation_sets,"
    "max_set_size,mean_set_size,egd_merges,mask_skips,components,peak_in_flight,solution_facts";

/// Runs every row in order, one engine invocation at a time, and writes one
/// CSV line per row. Before the first row a discarded warm-up run is made.
inline void run_benchmark(const std::vector<BenchRow>& config, std::ostream& out, const BenchOptions& opts = {}) {
  out << kBenchHeader << '\n';
  auto same = [](const ScenarioSpec& a, const ScenarioSpec& b) {
    return a.family == b.family && a.n_tgds == b.n_tgds && a.n_fds == b.n_fds && a.tuples == b.tuples &&
           a.component_batches == b.component_batches && a.seed == b.seed && a.fusion_rate == b.fusion_rate;
  };
  std::optional<ScenarioSpec> cached_spec;
  std::optional<GeneratedScenario> cached;
  bool warmed = !opts.warmup;
  for (const auto& row : config) {
    if (!cached_spec || !same(*cached_spec, row.spec)) {
      cached = generate_scenario(row.spec);
      cached_spec = row.spec;
    }
    const auto deadline = [&] { return Clock::now() + opts.timeout; };
    if (!warmed) {
      try {
        (void)run_engine(row.engine, cached->scenario, cached->source, row.workers, deadline());
      } catch (const ChaseTimeout&) {
      }
      warmed = true;
    }
    std::string status = "OK";
    ChaseStats s;
    try {
      auto outcome = run_engine(row.engine, cached->scenario, cached->source, row.workers, deadline());
      if (!outcome.ok()) status = "FAIL";
      s = outcome.stats;
    } catch (const ChaseTimeout&) {
      status = "TIMEOUT";
    }
    out << to_string(row.spec.family) << ',' << row.spec.n_tgds << ',' << row.spec.n_fds << ',' << row.spec.tuples
        << ',' << row.spec.batches() << ',' << row.spec.seed << ',' << to_string(row.engine) << ',' << row.workers << ','
        << status << ',';
    if (status == "TIMEOUT") {
      out << std::string(13, ',') << '\n';
      continue;
    }
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.3f,%.3f,%.3f,%.3f,%.3f,", s.analysis_ms, s.assign_ms, s.chase_ms,
                  s.assembly_ms, s.total_ms);
    out << buf << s.assignments << ',' << s.saturation_sets << ',' << s.max_set_size << ',';
    std::snprintf(buf, sizeof buf, "%.3f", s.mean_set_size);
    out << buf << ',' << s.egd_merges << ',' << s.mask_skips << ',' << s.components << ',' << s.peak_in_flight << ','
        << s.solution_facts << '\n';
  }
}

}  // namespace satchase
