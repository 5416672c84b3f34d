#pragma once

// Chase engines: the Oblivious Chase (randomized step order, used as the
// reference), the Classical DE Chase (all tgd steps, then fd steps), and
// the Interleaved Chase, which carves the assignment set into Saturation
// Sets, chases each one in isolation and flushes it to the solution.

#include <chrono>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include "satchase/analysis.hpp"
#include "satchase/egd.hpp"

namespace satchase {

/// The engine ran past its deadline.
class ChaseTimeout : public Error {
 public:
  ChaseTimeout() : Error("chase exceeded its deadline") {}
};

using Clock = std::chrono::steady_clock;

struct ChaseStats {
  double analysis_ms = 0;
  double assign_ms = 0;
  double chase_ms = 0;
  double assembly_ms = 0;
  double total_ms = 0;
  std::uint64_t assignments = 0;
  std::uint64_t saturation_sets = 0;
  std::uint64_t max_set_size = 0;
  double mean_set_size = 0;
  std::uint64_t egd_merges = 0;
  std::uint64_t mask_skips = 0;
  std::uint64_t components = 0;
  std::uint64_t peak_in_flight = 0;
  std::uint64_t solution_facts = 0;
  std::uint64_t invariant_violations = 0;
  std::string first_violation;
};

struct ChaseFailure {
  std::string fd;
  std::vector<Fact> witnesses;
  std::string message;
};

/// Either a solution or a failure; stats are filled either way.
struct ChaseOutcome {
  std::optional<Instance> solution;
  std::optional<ChaseFailure> failure;
  ChaseStats stats;
  std::optional<Instance> pre_solution;          // classical chase, on request
  std::vector<std::vector<std::uint64_t>> sets;  // interleaved chase, on request; sorted by first id

  bool ok() const { return solution.has_value(); }
};

namespace detail {

inline double ms_since(Clock::time_point t) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t).count();
}

inline ChaseFailure to_failure(const ChaseFail& e) { return {e.fd_id(), {e.left(), e.right()}, e.what()}; }

inline Instance assemble(const Schema& target, std::vector<std::vector<Fact>>& buffers) {
  Instance out(target);
  for (auto& buf : buffers)
    for (auto& f : buf) out.insert(std::move(f));
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Oblivious Chase

enum class StepOrder {
  Interleaved,  // tgd and fd steps mixed by a seeded RNG
  TgdsFirst,    // every tgd step, then fd steps
};

struct ObliviousOptions {
  std::uint64_t seed = 0;
  StepOrder order = StepOrder::Interleaved;
  std::optional<Clock::time_point> deadline;
  std::vector<Tuple>* final_images = nullptr;  // receives every assignment's final image
};

/// Reference chase over explicit assignment images: fires each tgd
/// assignment once and applies fd steps by global substitution, in an order
/// drawn from `opts.seed`. Between two nulls the surviving one is chosen at
/// random. Violations are found by a full rescan before every fd step.
inline ChaseOutcome oblivious_chase(const Scenario& sc, const Instance& source, const ObliviousOptions& opts = {}) {
  const auto t0 = Clock::now();
  ChaseOutcome out;
  NullSource nulls(1);
  const AssignmentSet aset = initial_assignment_set(sc, source, nulls);
  out.stats.assignments = aset.size();
  out.stats.assign_ms = detail::ms_since(t0);
  const auto t1 = Clock::now();

  std::mt19937_64 rng(opts.seed);
  std::vector<Tuple> images;
  images.reserve(aset.size());
  for (const auto& a : aset.all) images.push_back(a.image);

  std::vector<std::uint64_t> remaining(aset.size());
  for (std::uint64_t i = 0; i < remaining.size(); ++i) remaining[i] = i;
  std::shuffle(remaining.begin(), remaining.end(), rng);
  std::vector<std::uint64_t> fired;

  struct Violation {
    std::uint32_t fd;
    Fact left;
    Fact right;
  };
  auto find_violations = [&] {
    std::vector<Violation> found;
    for (std::uint32_t f = 0; f < sc.fds.size(); ++f) {
      const Fd& fd = sc.fds[f];
      std::unordered_map<Tuple, Fact, TupleHash> first;
      for (const auto id : fired) {
        for (auto& fact : materialize(sc.tgds[aset.all[id].tgd], images[id])) {
          if (fact.rel != fd.rel) continue;
          Tuple key;
          for (const auto p : fd.lhs) key.push_back(fact.args[p]);
          auto [it, inserted] = first.try_emplace(std::move(key), fact);
          if (inserted) continue;
          for (const auto p : fd.rhs)
            if (it->second.args[p] != fact.args[p]) {
              found.push_back({f, it->second, fact});
              break;
            }
        }
      }
    }
    return found;
  };
  auto substitute = [&](const Value& from, const Value& to) {
    for (const auto id : fired)
      for (auto& v : images[id])
        if (v == from) v = to;
  };

  std::bernoulli_distribution coin(0.5);
  std::uint64_t steps = 0;
  try {
    while (true) {
      if (opts.deadline && (++steps & 63) == 0 && Clock::now() > *opts.deadline) throw ChaseTimeout();
      const bool prefer_tgd = opts.order == StepOrder::TgdsFirst || coin(rng);
      if (!remaining.empty() && prefer_tgd) {
        fired.push_back(remaining.back());
        remaining.pop_back();
        continue;
      }
      auto violations = find_violations();
      if (violations.empty()) {
        if (remaining.empty()) break;
        fired.push_back(remaining.back());
        remaining.pop_back();
        continue;
      }
      const auto& v = violations[std::uniform_int_distribution<std::size_t>(0, violations.size() - 1)(rng)];
      const Fd& fd = sc.fds[v.fd];
      Tuple left = v.left.args, right = v.right.args;
      for (const auto p : fd.rhs) {
        const Value x = left[p], y = right[p];
        if (x == y) continue;
        if (x.is_constant() && y.is_constant())
          throw ChaseFail(fd.id, Fact{v.left.rel, left}, Fact{v.right.rel, right},
                          "fd " + fd.id + " equates constants " + x.to_string() + " and " + y.to_string());
        Value from, to;
        if (x.is_constant()) {
          from = y, to = x;
        } else if (y.is_constant()) {
          from = x, to = y;
        } else if (coin(rng)) {
          from = x, to = y;
        } else {
          from = y, to = x;
        }
        ++out.stats.egd_merges;
        substitute(from, to);
        for (auto& w : left)
          if (w == from) w = to;
        for (auto& w : right)
          if (w == from) w = to;
      }
    }
  } catch (const ChaseFail& e) {
    out.failure = detail::to_failure(e);
    out.stats.chase_ms = detail::ms_since(t1);
    out.stats.total_ms = detail::ms_since(t0);
    return out;
  }
  out.stats.chase_ms = detail::ms_since(t1);

  const auto t2 = Clock::now();
  Instance solution(sc.target);
  for (std::uint64_t id = 0; id < aset.size(); ++id)
    for (auto& f : materialize(sc.tgds[aset.all[id].tgd], images[id])) solution.insert(std::move(f));
  out.stats.solution_facts = solution.size();
  out.stats.peak_in_flight = aset.size();
  out.stats.saturation_sets = aset.size() ? 1 : 0;
  out.stats.max_set_size = aset.size();
  out.stats.mean_set_size = static_cast<double>(aset.size());
  out.solution = std::move(solution);
  if (opts.final_images) *opts.final_images = std::move(images);
  out.stats.assembly_ms = detail::ms_since(t2);
  out.stats.total_ms = detail::ms_since(t0);
  return out;
}

// ---------------------------------------------------------------------------
// Classical DE Chase

struct ClassicalOptions {
  bool keep_pre_solution = false;
  std::optional<Clock::time_point> deadline;
};

/// Materializes the whole pre-solution, then runs fd steps over all of it.
inline ChaseOutcome classical_chase(const Scenario& sc, const Instance& source, const ClassicalOptions& opts = {}) {
  const auto t0 = Clock::now();
  ChaseOutcome out;
  const FdPlan plan = FdPlan::build(sc);
  NullSource nulls(1);
  const AssignmentSet aset = initial_assignment_set(sc, source, nulls);
  out.stats.assignments = aset.size();
  out.stats.assign_ms = detail::ms_since(t0);

  const auto t1 = Clock::now();
  SetChaser chaser(sc, plan);
  for (const auto& a : aset.all) chaser.add(a);
  if (opts.keep_pre_solution) {
    Instance pre(sc.target);
    for (const auto& a : aset.all)
      for (auto& f : materialize(sc, a)) pre.insert(std::move(f));
    out.pre_solution = std::move(pre);
  }
  if (opts.deadline && Clock::now() > *opts.deadline) throw ChaseTimeout();
  try {
    chaser.apply_to_termination();
  } catch (const ChaseFail& e) {
    out.failure = detail::to_failure(e);
    out.stats.egd_merges = chaser.merges();
    out.stats.total_ms = detail::ms_since(t0);
    return out;
  }
  out.stats.chase_ms = detail::ms_since(t1);
  out.stats.egd_merges = chaser.merges();

  const auto t2 = Clock::now();
  std::vector<std::vector<Fact>> buffers(1);
  chaser.materialize_into(buffers[0]);
  out.solution = detail::assemble(sc.target, buffers);
  out.stats.solution_facts = out.solution->size();
  out.stats.saturation_sets = aset.size() ? 1 : 0;
  out.stats.max_set_size = aset.size();
  out.stats.mean_set_size = static_cast<double>(aset.size());
  out.stats.peak_in_flight = aset.size();
  out.stats.components = 1;
  out.stats.assembly_ms = detail::ms_since(t2);
  out.stats.total_ms = detail::ms_since(t0);
  return out;
}

// ---------------------------------------------------------------------------
// Interleaved Chase

enum class Discovery {
  Masked,  // conflict areas, masks and the Conflict Graph
  Naive,   // scan every available assignment with the direct overlap test
};

struct InterleavedOptions {
  bool parallel = false;
  unsigned workers = 1;
  Discovery discovery = Discovery::Masked;
  bool early_egds = true;         // debug: false defers fd steps to the end of each set
  bool mask_skip = true;          // debug: false disables the used-mask subsumption skip
  bool check_invariants = false;  // debug: confinement, quiescence, skip soundness, partition
  bool record_sets = false;
  std::optional<Clock::time_point> deadline;
};

/// Unpicked assignments per tgd, with lazily built hash indexes for mask
/// searches. Distinct tgds may be served by distinct threads concurrently.
class AssignmentPools {
 public:
  AssignmentPools(const Scenario& sc, const AssignmentSet& aset, const ConflictGraph& graph)
      : aset_(&aset), picked_(aset.size(), 0), pools_(sc.tgds.size()) {
    for (std::uint32_t t = 0; t < sc.tgds.size(); ++t) {
      pools_[t].ids = aset.by_tgd[t];
      for (const auto& area : graph.areas[t]) {
        AreaShape shape;
        for (const auto& term : area.terms) {
          if (!term.is_variable()) {
            shape.push_back({Cell::Constant, 0, term.value()});
          } else if (sc.tgds[t].is_universal(term.var())) {
            shape.push_back({Cell::Universal, term.var(), {}});
          } else {
            shape.push_back({Cell::Existential, term.var(), {}});
          }
        }
        pools_[t].shapes.push_back(std::move(shape));
      }
    }
  }

  bool picked(std::uint64_t id) const { return picked_[id] != 0; }
  void pick(std::uint64_t id) { picked_[id] = 1; }

  std::optional<std::uint64_t> lowest_available(std::uint32_t tgd) {
    auto& pool = pools_[tgd];
    while (pool.cursor < pool.ids.size() && picked_[pool.ids[pool.cursor]]) ++pool.cursor;
    if (pool.cursor == pool.ids.size()) return std::nullopt;
    return pool.ids[pool.cursor];
  }

  std::uint64_t available(std::uint32_t tgd) {
    std::uint64_t n = 0;
    for (const auto id : pools_[tgd].ids) n += picked_[id] ? 0 : 1;
    return n;
  }

  std::size_t pool_size(std::uint32_t tgd) const { return pools_[tgd].ids.size(); }
  const std::vector<std::uint64_t>& pool_ids(std::uint32_t tgd) const { return pools_[tgd].ids; }

  /// Picks and returns, in id order, every available assignment of `tgd`
  /// matching `mask` on its conflict area `area_index`.
  std::vector<std::uint64_t> take_matching(std::uint32_t tgd, std::size_t area_index, const ConflictMask& mask) {
    std::vector<std::uint64_t> out;
    visit_matching(tgd, area_index, mask, /*take=*/true, [&](std::uint64_t id) { out.push_back(id); });
    return out;
  }

  /// Number of available matches, without picking anything.
  std::uint64_t count_matching(std::uint32_t tgd, std::size_t area_index, const ConflictMask& mask) {
    std::uint64_t n = 0;
    visit_matching(tgd, area_index, mask, /*take=*/false, [&](std::uint64_t) { ++n; });
    return n;
  }

 private:
  enum class Cell { Universal, Constant, Existential };
  struct ShapeCell {
    Cell kind;
    std::uint32_t slot;
    Value constant;
  };
  using AreaShape = std::vector<ShapeCell>;
  using Bucket = std::vector<std::uint64_t>;

  struct Pool {
    std::vector<std::uint64_t> ids;
    std::size_t cursor = 0;
    std::vector<AreaShape> shapes;
    // (area index, constrained-position bitmask) -> key -> ids
    std::map<std::pair<std::size_t, std::uint64_t>, std::unordered_map<Tuple, Bucket, TupleHash>> indexes;
  };

  template <class F>
  void visit_matching(std::uint32_t tgd, std::size_t area_index, const ConflictMask& mask, bool take, F&& fn) {
    auto& pool = pools_[tgd];
    const AreaShape& shape = pool.shapes[area_index];
    std::uint64_t pattern = 0;
    Tuple key;
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (!mask.cells[i]) continue;
      switch (shape[i].kind) {
        case Cell::Constant:
          if (shape[i].constant != *mask.cells[i]) return;
          break;
        case Cell::Universal:
          pattern |= std::uint64_t{1} << i;
          key.push_back(*mask.cells[i]);
          break;
        case Cell::Existential:  // a fresh null in every pool assignment
          break;
      }
    }
    if (pattern == 0) {
      for (std::size_t k = pool.cursor; k < pool.ids.size(); ++k) {
        const auto id = pool.ids[k];
        if (picked_[id]) continue;
        if (take) picked_[id] = 1;
        fn(id);
      }
      return;
    }
    auto [it, fresh] = pool.indexes.try_emplace({area_index, pattern});
    auto& index = it->second;
    if (fresh) {
      for (std::size_t k = pool.cursor; k < pool.ids.size(); ++k) {
        const auto id = pool.ids[k];
        if (picked_[id]) continue;
        const Tuple& image = aset_->all[id].image;
        Tuple row;
        for (std::size_t i = 0; i < shape.size(); ++i)
          if (pattern >> i & 1) row.push_back(image[shape[i].slot]);
        index[std::move(row)].push_back(id);
      }
    }
    auto bt = index.find(key);
    if (bt == index.end()) return;
    for (const auto id : bt->second) {
      if (picked_[id]) continue;
      if (take) picked_[id] = 1;
      fn(id);
    }
    // Every entry of a bucket matches the mask, so a taken bucket is spent.
    if (take) index.erase(bt);
  }

  const AssignmentSet* aset_;
  std::vector<std::uint8_t> picked_;
  std::vector<Pool> pools_;
};

/// Shared, read-only inputs of the Interleaved Chase.
struct ChaseContext {
  const Scenario& scenario;
  const ConflictGraph& graph;
  const FdPlan& plan;
  const AssignmentSet& assignments;
};

/// Per-worker counters.
struct SetBuilderStats {
  std::uint64_t sets = 0;
  std::uint64_t members = 0;
  std::uint64_t max_set = 0;
  std::uint64_t mask_skips = 0;
  std::uint64_t violations = 0;
  std::string first_violation;
};

/// Builds one Saturation Set from a seed and chases it to fd-quiescence.
/// The resulting group stays in `chaser()` until `reset()`.
class SaturationSetBuilder {
 public:
  SaturationSetBuilder(const ChaseContext& ctx, AssignmentPools& pools, const InterleavedOptions& opts,
                       std::vector<std::uint32_t>* stamps = nullptr)
      : ctx_(ctx), pools_(pools), opts_(opts), chaser_(ctx.scenario, ctx.plan), stamps_(stamps) {
    if (opts_.check_invariants && stamps_) {
      chaser_.set_merge_hook([this](const Value& from, const Value& to) {
        check_confined(from);
        check_confined(to);
      });
    }
  }

  /// `seed` must still be available in its pool. Returns the member ids in
  /// insertion order. Throws ChaseFail.
  std::vector<std::uint64_t> build(std::uint64_t seed, std::uint32_t stamp) {
    stamp_ = stamp;
    members_.clear();
    frontier_.clear();
    used_masks_.clear();
    pools_.pick(seed);
    add(seed);
    while (!frontier_.empty()) {
      const auto member = frontier_.front();
      frontier_.pop_front();
      if (opts_.discovery == Discovery::Masked) {
        expand_masked(member);
      } else {
        expand_naive(member);
      }
    }
    if (!opts_.early_egds) chaser_.apply_to_termination();
    stats_.sets++;
    stats_.members += members_.size();
    stats_.max_set = std::max<std::uint64_t>(stats_.max_set, members_.size());
    if (opts_.check_invariants) check_quiescent();
    return members_;
  }

  SetChaser& chaser() { return chaser_; }
  void reset() { chaser_.clear(); }
  const SetBuilderStats& stats() const { return stats_; }

 private:
  void add(std::uint64_t id) {
    if (stamps_) (*stamps_)[id] = stamp_;
    members_.push_back(id);
    const auto member = chaser_.add(ctx_.assignments.all[id]);
    frontier_.push_back(member);
    if (opts_.early_egds) chaser_.apply_to_termination();
  }

  void expand_masked(std::uint32_t member) {
    const std::uint32_t tgd = chaser_.member(member).tgd;
    const auto& areas = ctx_.graph.areas[tgd];
    for (std::size_t ai = 0; ai < areas.size(); ++ai) {
      const ConflictArea& area = areas[ai];
      // Early egds may have bound nulls since the previous area.
      ConflictMask mask = mask_of(chaser_.resolved_image(member), area);
      if (opts_.mask_skip && used_subsumes(mask)) {
        ++stats_.mask_skips;
        if (opts_.check_invariants) check_skip(tgd, ai, mask);
        continue;
      }
      for (const auto id : pools_.take_matching(tgd, ai, mask)) add(id);
      for (const auto neighbour : ctx_.graph.adjacent[tgd]) {
        const auto& n_areas = ctx_.graph.areas[neighbour];
        for (std::size_t nj = 0; nj < n_areas.size(); ++nj) {
          if (n_areas[nj].fd != area.fd) continue;
          for (const auto id : pools_.take_matching(neighbour, nj, mask)) add(id);
        }
      }
      used_masks_.insert(std::move(mask));
    }
  }

  void expand_naive(std::uint32_t member) {
    const auto tgd = chaser_.member(member).tgd;
    const auto component = ctx_.graph.component_of[tgd];
    for (const auto other : ctx_.graph.components[component]) {
      for (const auto id : pools_.pool_ids(other)) {
        if (pools_.picked(id)) continue;
        const Tuple image = chaser_.resolved_image(member);
        if (!overlap(ctx_.scenario, ctx_.graph, tgd, image, other, ctx_.assignments.all[id].image)) continue;
        pools_.pick(id);
        add(id);
      }
    }
  }

  bool used_subsumes(const ConflictMask& mask) const {
    if (used_masks_.empty()) return false;
    std::vector<std::size_t> constants;
    for (std::size_t i = 0; i < mask.cells.size(); ++i)
      if (mask.cells[i]) constants.push_back(i);
    if (constants.size() > 12) {
      return std::any_of(used_masks_.begin(), used_masks_.end(),
                         [&](const ConflictMask& used) { return subsumes(used, mask); });
    }
    // Every subsuming mask is the mask with some constant cells widened.
    ConflictMask probe = mask;
    for (std::uint64_t drop = 0; drop < (std::uint64_t{1} << constants.size()); ++drop) {
      for (std::size_t k = 0; k < constants.size(); ++k)
        probe.cells[constants[k]] = (drop >> k & 1) ? std::nullopt : mask.cells[constants[k]];
      if (used_masks_.contains(probe)) return true;
    }
    return false;
  }

  void violation(std::string what) {
    if (stats_.violations++ == 0) stats_.first_violation = std::move(what);
  }

  void check_confined(const Value& v) {
    if (!v.is_null()) return;
    const auto owner = ctx_.assignments.owner_of(v.null_id());
    if (!owner || (*stamps_)[*owner] != stamp_)
      violation("null " + v.to_string() + " merged outside the Saturation Set that owns it");
  }

  void check_skip(std::uint32_t tgd, std::size_t area_index, const ConflictMask& mask) {
    std::uint64_t missed = pools_.count_matching(tgd, area_index, mask);
    const auto& area = ctx_.graph.areas[tgd][area_index];
    for (const auto neighbour : ctx_.graph.adjacent[tgd]) {
      const auto& n_areas = ctx_.graph.areas[neighbour];
      for (std::size_t nj = 0; nj < n_areas.size(); ++nj)
        if (n_areas[nj].fd == area.fd) missed += pools_.count_matching(neighbour, nj, mask);
    }
    if (missed) violation("a subsumed mask skipped " + std::to_string(missed) + " available matches");
  }

  void check_quiescent() {
    const auto& sc = ctx_.scenario;
    std::vector<Fact> facts;
    chaser_.materialize_into(facts);
    for (const auto& fd : sc.fds) {
      std::unordered_map<Tuple, const Fact*, TupleHash> seen;
      for (const auto& f : facts) {
        if (f.rel != fd.rel) continue;
        Tuple key;
        for (const auto p : fd.lhs) key.push_back(f.args[p]);
        auto [it, inserted] = seen.try_emplace(std::move(key), &f);
        if (inserted) continue;
        for (const auto p : fd.rhs)
          if (it->second->args[p] != f.args[p]) {
            violation("fd " + fd.id + " still applies after the set was chased");
            return;
          }
      }
    }
  }

  const ChaseContext& ctx_;
  AssignmentPools& pools_;
  const InterleavedOptions& opts_;
  SetChaser chaser_;
  std::vector<std::uint32_t>* stamps_;
  std::uint32_t stamp_ = 0;
  std::vector<std::uint64_t> members_;
  std::deque<std::uint32_t> frontier_;
  std::unordered_set<ConflictMask, ConflictMaskHash> used_masks_;
  SetBuilderStats stats_;
};

/// Builds and chases one Saturation Set from `seed` on a fresh builder and
/// returns its members in insertion order. The seed is picked from its pool.
inline std::vector<std::uint64_t> build_and_chase_saturation_set(const ChaseContext& ctx, AssignmentPools& pools,
                                                                 std::uint64_t seed,
                                                                 const InterleavedOptions& opts = {}) {
  SaturationSetBuilder builder(ctx, pools, opts);
  return builder.build(seed, 1);
}

/// Runs the Interleaved Chase. In parallel mode each Conflict Graph
/// component is processed entirely by one of `opts.workers` threads,
/// largest components first.
inline ChaseOutcome interleaved_chase(const Scenario& sc, const Instance& source, const InterleavedOptions& opts = {}) {
  if (opts.workers < 1) throw Error("workers must be >= 1");
  const auto t0 = Clock::now();
  ChaseOutcome out;
  const ConflictGraph graph = build_conflict_graph(sc);
  const FdPlan plan = FdPlan::build(sc);
  out.stats.analysis_ms = detail::ms_since(t0);
  out.stats.components = graph.components.size();

  const auto t1 = Clock::now();
  NullSource nulls(1);
  const unsigned workers = opts.parallel ? opts.workers : 1;
  const AssignmentSet aset = initial_assignment_set(sc, source, nulls, workers);
  AssignmentPools pools(sc, aset, graph);
  out.stats.assignments = aset.size();
  out.stats.assign_ms = detail::ms_since(t1);

  const auto t2 = Clock::now();
  const ChaseContext ctx{sc, graph, plan, aset};
  std::vector<std::uint32_t> order(graph.components.size());
  std::vector<std::uint64_t> weight(graph.components.size(), 0);
  for (std::uint32_t c = 0; c < order.size(); ++c) {
    order[c] = c;
    for (const auto t : graph.components[c]) weight[c] += pools.pool_size(t);
  }
  if (opts.parallel)
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return weight[a] > weight[b]; });

  std::vector<std::uint32_t> stamps(opts.check_invariants ? aset.size() : 0, 0);
  std::atomic<std::uint32_t> next_stamp{1};
  std::atomic<std::size_t> next_component{0};
  std::atomic<bool> failed{false};
  std::mutex failure_mutex;
  std::exception_ptr error;

  const unsigned nthreads = std::max<unsigned>(1, std::min<unsigned>(workers, static_cast<unsigned>(order.size())));
  std::vector<std::vector<Fact>> buffers(nthreads);
  std::vector<SetBuilderStats> worker_stats(nthreads);
  std::vector<std::uint64_t> worker_merges(nthreads, 0);
  std::vector<std::vector<std::vector<std::uint64_t>>> worker_sets(nthreads);

  auto run_worker = [&](unsigned w) {
    SaturationSetBuilder builder(ctx, pools, opts, opts.check_invariants ? &stamps : nullptr);
    try {
      for (std::size_t k; !failed.load() && (k = next_component.fetch_add(1)) < order.size();) {
        const auto& tgds = graph.components[order[k]];
        for (auto ti = tgds.begin(); ti != tgds.end() && !failed.load();) {
          const auto seed = pools.lowest_available(*ti);
          if (!seed) {
            ++ti;
            continue;
          }
          if (opts.deadline && Clock::now() > *opts.deadline) throw ChaseTimeout();
          auto members = builder.build(*seed, next_stamp.fetch_add(1));
          builder.chaser().materialize_into(buffers[w]);
          worker_merges[w] += builder.chaser().merges();
          if (opts.record_sets) {
            std::sort(members.begin(), members.end());
            worker_sets[w].push_back(std::move(members));
          }
          builder.reset();
        }
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failed.exchange(true)) error = std::current_exception();
    }
    worker_stats[w] = builder.stats();
  };

  if (nthreads == 1) {
    run_worker(0);
  } else {
    std::vector<std::jthread> threads;
    for (unsigned w = 0; w < nthreads; ++w) threads.emplace_back(run_worker, w);
  }

  for (unsigned w = 0; w < nthreads; ++w) {
    const auto& s = worker_stats[w];
    out.stats.saturation_sets += s.sets;
    out.stats.max_set_size = std::max(out.stats.max_set_size, s.max_set);
    out.stats.mask_skips += s.mask_skips;
    out.stats.egd_merges += worker_merges[w];
    out.stats.invariant_violations += s.violations;
    if (out.stats.first_violation.empty()) out.stats.first_violation = s.first_violation;
  }
  out.stats.peak_in_flight = out.stats.max_set_size;
  out.stats.chase_ms = detail::ms_since(t2);

  if (error) {
    try {
      std::rethrow_exception(error);
    } catch (const ChaseFail& e) {
      out.failure = detail::to_failure(e);
      out.stats.total_ms = detail::ms_since(t0);
      return out;
    }
  }

  std::uint64_t members = 0;
  for (const auto& s : worker_stats) members += s.members;
  out.stats.mean_set_size = out.stats.saturation_sets ? static_cast<double>(members) / out.stats.saturation_sets : 0;
  if (opts.check_invariants) {
    std::uint64_t unpicked = 0;
    for (std::uint64_t id = 0; id < aset.size(); ++id) unpicked += pools.picked(id) ? 0 : 1;
    if (members != aset.size() || unpicked) {
      ++out.stats.invariant_violations;
      if (out.stats.first_violation.empty())
        out.stats.first_violation = "Saturation Sets do not partition the assignment set";
    }
  }
  if (opts.record_sets) {
    for (auto& ws : worker_sets)
      for (auto& s : ws) out.sets.push_back(std::move(s));
    std::sort(out.sets.begin(), out.sets.end());
  }

  const auto t3 = Clock::now();
  out.solution = detail::assemble(sc.target, buffers);
  out.stats.solution_facts = out.solution->size();
  out.stats.assembly_ms = detail::ms_since(t3);
  out.stats.total_ms = detail::ms_since(t0);
  return out;
}

}  // namespace satchase
