#pragma once

// Full s-t tgd assignments: body evaluation over the source instance,
// extension with fresh nulls, and head materialization.

#include <atomic>
#include <thread>

#include "satchase/core.hpp"

namespace satchase {

/// A full assignment of one tgd. `image` is indexed by the tgd's variable
/// slots; universal slots never change after creation.
struct Assignment {
  std::uint64_t id = 0;
  std::uint32_t tgd = 0;
  Tuple image;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// A binding of a tgd's universal slots to constants.
using BodyAssignment = Tuple;

namespace detail {

// Greedy join order: start with the first atom, then repeatedly take the
// atom with the most already-bound variables (declaration order on ties).
inline std::vector<std::size_t> join_order(const StTgd& tgd) {
  std::vector<std::size_t> order;
  std::vector<bool> used(tgd.body.size(), false), bound(tgd.variables.size(), false);
  for (std::size_t step = 0; step < tgd.body.size(); ++step) {
    std::size_t best = tgd.body.size();
    int best_score = -1;
    for (std::size_t i = 0; i < tgd.body.size(); ++i) {
      if (used[i]) continue;
      int score = 0;
      for (const auto& t : tgd.body[i].args)
        if (!t.is_variable() || bound[t.var()]) ++score;
      if (step == 0) score = 0;
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    used[best] = true;
    order.push_back(best);
    for (const auto& t : tgd.body[best].args)
      if (t.is_variable()) bound[t.var()] = true;
  }
  return order;
}

}  // namespace detail

/// Every distinct binding of the universal slots under which the body holds
/// in `source`, sorted by value tuple.
inline std::vector<BodyAssignment> compute_body_assignments(const StTgd& tgd, const Instance& source) {
  const std::size_t nvars = tgd.num_universals;
  std::vector<Tuple> partial{Tuple(nvars)};
  std::vector<bool> bound(nvars, false);

  for (const std::size_t ai : detail::join_order(tgd)) {
    const Atom& atom = tgd.body[ai];
    const auto& table = source.table(atom.rel);

    // Positions probed through the hash index (constants and variables bound
    // by earlier atoms) versus positions that bind new variables.
    std::vector<std::size_t> key_pos;
    std::vector<std::pair<std::size_t, std::uint32_t>> bind_pos;
    std::vector<bool> binds_here(nvars, false);
    std::vector<std::pair<std::size_t, std::size_t>> repeat_eq;  // (pos, earlier pos) within this atom
    std::vector<int> first_pos(nvars, -1);
    for (std::size_t p = 0; p < atom.args.size(); ++p) {
      const Term& t = atom.args[p];
      if (!t.is_variable() || bound[t.var()]) {
        key_pos.push_back(p);
      } else if (first_pos[t.var()] >= 0) {
        repeat_eq.emplace_back(p, static_cast<std::size_t>(first_pos[t.var()]));
      } else {
        first_pos[t.var()] = static_cast<int>(p);
        bind_pos.emplace_back(p, t.var());
        binds_here[t.var()] = true;
      }
    }

    std::unordered_map<Tuple, std::vector<const Tuple*>, TupleHash> index;
    for (const auto& row : table) {
      bool ok = true;
      for (auto [p, q] : repeat_eq)
        if (row[p] != row[q]) ok = false;
      if (!ok) continue;
      Tuple key;
      key.reserve(key_pos.size());
      for (auto p : key_pos) key.push_back(row[p]);
      index[std::move(key)].push_back(&row);
    }

    std::vector<Tuple> next;
    Tuple probe(key_pos.size());
    for (const auto& b : partial) {
      for (std::size_t k = 0; k < key_pos.size(); ++k) {
        const Term& t = atom.args[key_pos[k]];
        probe[k] = t.is_variable() ? b[t.var()] : t.value();
      }
      auto it = index.find(probe);
      if (it == index.end()) continue;
      for (const Tuple* row : it->second) {
        Tuple ext = b;
        for (auto [p, v] : bind_pos) ext[v] = (*row)[p];
        next.push_back(std::move(ext));
      }
    }
    partial = std::move(next);
    for (std::size_t v = 0; v < nvars; ++v) bound[v] = bound[v] || binds_here[v];
    if (partial.empty()) break;
  }

  std::sort(partial.begin(), partial.end());
  partial.erase(std::unique(partial.begin(), partial.end()), partial.end());
  return partial;
}

/// The full assignment set of a scenario, grouped per tgd. Ids are dense
/// (`all[i].id == i`) and follow tgd declaration order, then body order.
struct AssignmentSet {
  std::vector<Assignment> all;
  std::vector<std::vector<std::uint64_t>> by_tgd;
  std::uint64_t first_null = 0;
  std::vector<std::uint64_t> null_owner;  // null id - first_null -> assignment id

  std::size_t size() const { return all.size(); }

  std::optional<std::uint64_t> owner_of(std::uint64_t null_id) const {
    if (null_id < first_null || null_id - first_null >= null_owner.size()) return std::nullopt;
    return null_owner[null_id - first_null];
  }
};

/// Computes the body assignments of every tgd (concurrently when
/// `workers > 1`) and extends each with pairwise-distinct fresh nulls.
inline AssignmentSet initial_assignment_set(const Scenario& sc, const Instance& source, NullSource& nulls,
                                            unsigned workers = 1) {
  std::vector<std::vector<BodyAssignment>> bodies(sc.tgds.size());
  if (workers <= 1 || sc.tgds.size() <= 1) {
    for (std::size_t t = 0; t < sc.tgds.size(); ++t) bodies[t] = compute_body_assignments(sc.tgds[t], source);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    const auto n = std::min<std::size_t>(workers, sc.tgds.size());
    for (std::size_t w = 0; w < n; ++w)
      pool.emplace_back([&] {
        for (std::size_t t; (t = next.fetch_add(1)) < sc.tgds.size();)
          bodies[t] = compute_body_assignments(sc.tgds[t], source);
      });
  }

  AssignmentSet out;
  out.by_tgd.resize(sc.tgds.size());
  std::size_t total = 0, total_nulls = 0;
  for (std::size_t t = 0; t < sc.tgds.size(); ++t) {
    total += bodies[t].size();
    total_nulls += bodies[t].size() * sc.tgds[t].num_existentials();
  }
  out.all.reserve(total);
  out.null_owner.reserve(total_nulls);
  out.first_null = nulls.reserve(total_nulls);
  std::uint64_t next_null = out.first_null;
  for (std::uint32_t t = 0; t < sc.tgds.size(); ++t) {
    const auto& tgd = sc.tgds[t];
    out.by_tgd[t].reserve(bodies[t].size());
    for (auto& body : bodies[t]) {
      Assignment a{out.all.size(), t, std::move(body)};
      a.image.reserve(tgd.variables.size());
      for (std::uint32_t e = 0; e < tgd.num_existentials(); ++e) {
        a.image.push_back(Value::null(next_null++));
        out.null_owner.push_back(a.id);
      }
      out.by_tgd[t].push_back(a.id);
      out.all.push_back(std::move(a));
    }
  }
  return out;
}

inline Value term_value(const Term& t, std::span<const Value> image) {
  return t.is_variable() ? image[t.var()] : t.value();
}

/// Head materialization of a full assignment image, deduplicated.
inline std::vector<Fact> materialize(const StTgd& tgd, std::span<const Value> image) {
  std::vector<Fact> out;
  out.reserve(tgd.head.size());
  for (const auto& atom : tgd.head) {
    Fact f{atom.rel, {}};
    f.args.reserve(atom.args.size());
    for (const auto& t : atom.args) f.args.push_back(term_value(t, image));
    if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(std::move(f));
  }
  return out;
}

inline std::vector<Fact> materialize(const Scenario& sc, const Assignment& a) { return materialize(sc.tgds[a.tgd], a.image); }

}  // namespace satchase
