// satchase: command-line front end.
//
//   satchase run      --mapping M --source DIR --out DIR [--engine E] [--parallel --workers N] ...
//   satchase analyze  --mapping M
//   satchase iso      A_DIR B_DIR
//   satchase gen      --family OF --tgds 30 --fds 10 --tuples 1000 --out DIR
//   satchase bench    --family OF --tuples 50000,100000 --engines interleaved --out stats.csv
//
// Exit codes: 0 success, 1 usage or I/O error, 2 chase failure. `iso`
// exits 1 when the instances are not isomorphic.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "satchase/satchase.hpp"

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;
using namespace satchase;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kChaseFailed = 2;

std::uint64_t seed_from_env(std::uint64_t fallback) {
  if (const char* s = std::getenv("SATCHASE_SEED"); s && *s) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw Error(std::string("SATCHASE_SEED is not an unsigned integer: ") + s);
    }
  }
  return fallback;
}

json stats_json(const ChaseStats& s) {
  json j;
  j["analysis_ms"] = s.analysis_ms;
  j["assign_ms"] = s.assign_ms;
  j["chase_ms"] = s.chase_ms;
  j["assembly_ms"] = s.assembly_ms;
  j["total_ms"] = s.total_ms;
  j["assignments"] = s.assignments;
  j["saturation_sets"] = s.saturation_sets;
  j["max_set_size"] = s.max_set_size;
  j["mean_set_size"] = s.mean_set_size;
  j["egd_merges"] = s.egd_merges;
  j["mask_skips"] = s.mask_skips;
  j["components"] = s.components;
  j["peak_in_flight"] = s.peak_in_flight;
  j["solution_facts"] = s.solution_facts;
  j["invariant_violations"] = s.invariant_violations;
  if (!s.first_violation.empty()) j["first_violation"] = s.first_violation;
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error("cannot write '" + path.string() + "'");
}

struct RunConfig {
  std::string mapping;
  std::string source;
  std::string out;
  std::string engine = "interleaved";
  bool parallel = false;
  unsigned workers = 0;  // 0: hardware concurrency when parallel, else 1
  std::string discovery = "masked";
  std::uint64_t seed = 0;
  std::string stats;
  std::string failure_report;
  bool dump_graph = false;
  bool debug_invariants = false;
};

int cmd_run(RunConfig cfg) {
  const Engine engine = parse_engine(cfg.engine);
  if (cfg.parallel && engine != Engine::Interleaved) throw CLI::ValidationError("--parallel", "requires --engine interleaved");
  if (cfg.discovery != "masked" && cfg.discovery != "naive")
    throw CLI::ValidationError("--discovery", "must be 'masked' or 'naive'");
  cfg.seed = seed_from_env(cfg.seed);
  const unsigned workers =
      cfg.parallel ? (cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency())) : 1;

  const Scenario sc = load_mapping(cfg.mapping);
  LoadOptions lo;
  lo.warn = [](const std::string& w) { std::cerr << "warning: " << w << '\n'; };
  const Instance source = load_instance(cfg.source, sc.source, lo);

  if (cfg.dump_graph) std::cout << dump_graph(sc, build_conflict_graph(sc));

  ChaseOutcome outcome;
  switch (engine) {
    case Engine::Oblivious: {
      ObliviousOptions o;
      o.seed = cfg.seed;
      outcome = oblivious_chase(sc, source, o);
      break;
    }
    case Engine::Classical:
      outcome = classical_chase(sc, source);
      break;
    case Engine::Interleaved: {
      InterleavedOptions o;
      o.parallel = cfg.parallel;
      o.workers = workers;
      o.discovery = cfg.discovery == "naive" ? Discovery::Naive : Discovery::Masked;
      o.check_invariants = cfg.debug_invariants;
      outcome = interleaved_chase(sc, source, o);
      break;
    }
  }

  const fs::path out_dir = cfg.out;
  json stats = stats_json(outcome.stats);
  stats["engine"] = cfg.engine;
  stats["parallel"] = cfg.parallel;
  stats["workers"] = workers;
  stats["discovery"] = cfg.discovery;
  stats["seed"] = cfg.seed;
  stats["status"] = outcome.ok() ? "success" : "failure";
  write_text(cfg.stats.empty() ? out_dir / "stats.json" : fs::path(cfg.stats), stats.dump(2) + "\n");

  if (!outcome.ok()) {
    const auto& f = *outcome.failure;
    json report;
    report["fd"] = f.fd;
    report["message"] = f.message;
    for (const auto& w : f.witnesses) report["witnesses"].push_back(format_fact(sc.target, w));
    write_text(cfg.failure_report.empty() ? out_dir / "failure.json" : fs::path(cfg.failure_report),
               report.dump(2) + "\n");
    std::cerr << "chase failed: " << f.message << '\n';
    return kChaseFailed;
  }
  serialize_solution(*outcome.solution, out_dir);
  if (cfg.debug_invariants && outcome.stats.invariant_violations) {
    std::cerr << "invariant violations: " << outcome.stats.invariant_violations << " (first: "
              << outcome.stats.first_violation << ")\n";
  }
  return kOk;
}

int cmd_analyze(const std::string& mapping) {
  const Scenario sc = load_mapping(mapping);
  for (const auto& tgd : sc.tgds) {
    std::cout << "tgd " << tgd.id << " mutable existentials: {";
    bool first = true;
    for (const auto& v : compute_mutable_existentials(tgd, sc.fds)) {
      std::cout << (first ? "" : ", ") << v;
      first = false;
    }
    std::cout << "}\n";
  }
  std::cout << dump_graph(sc, build_conflict_graph(sc));
  return kOk;
}

int cmd_iso(const std::string& a_dir, const std::string& b_dir) {
  const Schema sa = infer_schema(a_dir), sb = infer_schema(b_dir);
  if (!(sa == sb)) {
    std::cout << "different schemas\n";
    return 1;
  }
  LoadOptions lo;
  lo.allow_nulls = true;
  const Instance a = load_instance(a_dir, sa, lo), b = load_instance(b_dir, sb, lo);
  const bool iso = is_isomorphic(a, b);
  std::cout << (iso ? "isomorphic" : "not isomorphic") << '\n';
  return iso ? 0 : 1;
}

void add_spec_options(CLI::App* cmd, ScenarioSpec& spec, std::string& family) {
  cmd->add_option("--family", family, "OF, OF+ or OF++")->capture_default_str();
  cmd->add_option("--tgds", spec.n_tgds, "number of tgds")->capture_default_str();
  cmd->add_option("--fds", spec.n_fds, "number of fds")->capture_default_str();
  cmd->add_option("--components", spec.component_batches, "Conflict Graph components (0: tgds/3, at most fds)")
      ->capture_default_str();
  cmd->add_option("--seed", spec.seed, "generator seed")->capture_default_str();
  cmd->add_option("--fusion-rate", spec.fusion_rate, "share of keys common to all tgds of a component")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data exchange chase engines"};
  app.require_subcommand(1);

  RunConfig run;
  auto* run_cmd = app.add_subcommand("run", "chase a source instance with a mapping");
  run_cmd->add_option("--mapping", run.mapping, ".map file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--source", run.source, "directory of source CSV files")->required()->check(CLI::ExistingDirectory);
  run_cmd->add_option("--out", run.out, "output directory for solution CSVs and stats")->required();
  run_cmd->add_option("--engine", run.engine, "oblivious, classical or interleaved")->capture_default_str();
  run_cmd->add_flag("--parallel", run.parallel, "process Conflict Graph components concurrently");
  run_cmd->add_option("--workers", run.workers, "worker threads (default: hardware threads)")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--discovery", run.discovery, "masked or naive")->capture_default_str();
  run_cmd->add_option("--seed", run.seed, "step-order seed for the oblivious engine")->capture_default_str();
  run_cmd->add_option("--stats", run.stats, "stats JSON path (default: OUT/stats.json)");
  run_cmd->add_option("--failure-report", run.failure_report, "failure JSON path (default: OUT/failure.json)");
  run_cmd->add_flag("--dump-graph", run.dump_graph, "print the Conflict Graph");
  run_cmd->add_flag("--debug-invariants", run.debug_invariants, "check set invariants while chasing");

  std::string analyze_mapping;
  auto* analyze_cmd = app.add_subcommand("analyze", "print mutable existentials and the Conflict Graph");
  analyze_cmd->add_option("--mapping", analyze_mapping, ".map file")->required()->check(CLI::ExistingFile);

  std::string iso_a, iso_b;
  auto* iso_cmd = app.add_subcommand("iso", "check two instance directories for isomorphism");
  iso_cmd->add_option("A_DIR", iso_a)->required()->check(CLI::ExistingDirectory);
  iso_cmd->add_option("B_DIR", iso_b)->required()->check(CLI::ExistingDirectory);

  ScenarioSpec gen_spec;
  std::string gen_family = "OF", gen_out;
  auto* gen_cmd = app.add_subcommand("gen", "generate a scenario and source instance");
  add_spec_options(gen_cmd, gen_spec, gen_family);
  gen_cmd->add_option("--tuples", gen_spec.tuples, "rows per source relation")->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "output directory")->required();

  ScenarioSpec bench_spec;
  std::string bench_family = "OF", bench_out;
  std::vector<std::uint64_t> bench_tuples{50'000, 100'000, 200'000, 400'000};
  std::vector<std::string> bench_engines{"interleaved"};
  std::vector<unsigned> bench_workers{1};
  double timeout_s = 600;
  bool no_warmup = false;
  auto* bench_cmd = app.add_subcommand("bench", "time engines on generated scenarios, CSV out");
  add_spec_options(bench_cmd, bench_spec, bench_family);
  bench_cmd->add_option("--tuples", bench_tuples, "rows per source relation, one run each")->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--engines", bench_engines, "engines to run")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--workers", bench_workers, "worker counts (interleaved)")->delimiter(',')
      ->check(CLI::PositiveNumber)->capture_default_str();
  bench_cmd->add_option("--timeout", timeout_s, "per-run timeout in seconds")->capture_default_str();
  bench_cmd->add_flag("--no-warmup", no_warmup, "skip the discarded warm-up run");
  bench_cmd->add_option("--out", bench_out, "CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*analyze_cmd) return cmd_analyze(analyze_mapping);
    if (*iso_cmd) return cmd_iso(iso_a, iso_b);
    if (*gen_cmd) {
      gen_spec.family = parse_family(gen_family);
      gen_spec.seed = seed_from_env(gen_spec.seed);
      write_scenario(generate_scenario(gen_spec), gen_out);
      return kOk;
    }
    if (*bench_cmd) {
      bench_spec.family = parse_family(bench_family);
      bench_spec.seed = seed_from_env(bench_spec.seed);
      std::vector<BenchRow> rows;
      for (const auto n : bench_tuples)
        for (const auto& e : bench_engines)
          for (const auto w : bench_workers) {
            ScenarioSpec s = bench_spec;
            s.tuples = n;
            const Engine engine = parse_engine(e);
            if (engine != Engine::Interleaved && w != 1) continue;
            rows.push_back({s, engine, w});
          }
      BenchOptions bo;
      bo.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(timeout_s * 1000));
      bo.warmup = !no_warmup;
      if (bench_out.empty()) {
        run_benchmark(rows, std::cout, bo);
      } else {
        std::ostringstream csv;
        run_benchmark(rows, csv, bo);
        write_text(bench_out, csv.str());
      }
      return kOk;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
