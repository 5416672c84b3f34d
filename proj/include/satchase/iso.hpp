#pragma once

// Homomorphism and isomorphism between target instances. Constants map to
// themselves; nulls are renamed.

#include <queue>

#include "satchase/core.hpp"

namespace satchase {

/// Null id -> image value.
using NullMapping = std::unordered_map<std::uint64_t, Value>;

namespace detail {

struct FactRef {
  std::uint32_t rel;
  const Tuple* args;
};

// Facts of an instance split into groups connected through shared nulls.
// Ground facts are left out.
inline std::vector<std::vector<FactRef>> null_components(const Instance& inst) {
  std::vector<FactRef> facts;
  for (std::uint32_t r = 0; r < inst.relation_count(); ++r)
    for (const auto& row : inst.table(r))
      if (std::any_of(row.begin(), row.end(), [](const Value& v) { return v.is_null(); })) facts.push_back({r, &row});

  std::vector<std::size_t> parent(facts.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::unordered_map<std::uint64_t, std::size_t> first_seen;
  for (std::size_t i = 0; i < facts.size(); ++i)
    for (const auto& v : *facts[i].args) {
      if (!v.is_null()) continue;
      auto [it, fresh] = first_seen.try_emplace(v.null_id(), i);
      if (!fresh) parent[find(i)] = find(it->second);
    }

  std::unordered_map<std::size_t, std::size_t> slot;
  std::vector<std::vector<FactRef>> out;
  for (std::size_t i = 0; i < facts.size(); ++i) {
    auto [it, fresh] = slot.try_emplace(find(i), out.size());
    if (fresh) out.emplace_back();
    out[it->second].push_back(facts[i]);
  }
  return out;
}

// Color refinement on the fact/null incidence structure. The colour of a
// null depends only on the isomorphism type of its surroundings, so colours
// computed separately on two instances are comparable.
inline std::unordered_map<std::uint64_t, std::size_t> null_colors(const Instance& inst, int rounds = 3) {
  std::unordered_map<std::uint64_t, std::size_t> color;
  std::unordered_map<std::uint64_t, std::vector<std::pair<std::uint32_t, const Tuple*>>> occurs;
  for (std::uint32_t r = 0; r < inst.relation_count(); ++r)
    for (const auto& row : inst.table(r))
      for (const auto& v : row)
        if (v.is_null()) occurs[v.null_id()].push_back({r, &row});
  for (const auto& [n, _] : occurs) color[n] = 0x9e37;

  auto cell = [&](const Value& v, const std::unordered_map<std::uint64_t, std::size_t>& c) {
    return v.is_null() ? hash_mix(0xa11ce, c.at(v.null_id())) : v.hash();
  };
  for (int round = 0; round < rounds; ++round) {
    std::unordered_map<std::uint64_t, std::size_t> next;
    for (const auto& [n, occ] : occurs) {
      std::vector<std::size_t> sigs;
      for (const auto& [rel, row] : occ) {
        std::size_t h = rel;
        for (std::size_t p = 0; p < row->size(); ++p) {
          const Value& v = (*row)[p];
          h = hash_mix(h, (v.is_null() && v.null_id() == n) ? 0x5e1f : cell(v, color));
        }
        sigs.push_back(h);
      }
      std::sort(sigs.begin(), sigs.end());
      std::size_t h = color[n];
      for (auto s : sigs) h = hash_mix(h, s);
      next[n] = h;
    }
    color = std::move(next);
  }
  return color;
}

class HomSearch {
 public:
  HomSearch(const Instance& target, bool injective, const std::unordered_map<std::uint64_t, std::size_t>* from_colors,
            const std::unordered_map<std::uint64_t, std::size_t>* to_colors)
      : target_(target), injective_(injective), from_colors_(from_colors), to_colors_(to_colors) {
    rows_.resize(target.relation_count());
    index_.resize(target.relation_count());
    for (std::uint32_t r = 0; r < target.relation_count(); ++r) {
      for (const auto& row : target.table(r)) rows_[r].push_back(&row);
      index_[r].resize(target.schema().relation(r).arity());
      for (std::uint32_t i = 0; i < rows_[r].size(); ++i)
        for (std::size_t p = 0; p < rows_[r][i]->size(); ++p) index_[r][p][(*rows_[r][i])[p]].push_back(i);
    }
  }

  /// Extends the current mapping so that every fact of `facts` lands in the
  /// target. On failure the mapping is left unchanged.
  bool extend(const std::vector<FactRef>& facts) {
    order_ = order(facts);
    return solve(0);
  }

  NullMapping& mapping() { return map_; }

 private:
  // Greedy static order: repeatedly the fact with the most bound positions.
  std::vector<FactRef> order(const std::vector<FactRef>& facts) const {
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> by_null;
    std::vector<int> bound(facts.size(), 0);
    for (std::size_t i = 0; i < facts.size(); ++i)
      for (const auto& v : *facts[i].args) {
        if (v.is_null() && !map_.contains(v.null_id())) {
          by_null[v.null_id()].push_back(i);
        } else {
          ++bound[i];
        }
      }
    std::priority_queue<std::pair<int, std::size_t>> pq;
    for (std::size_t i = 0; i < facts.size(); ++i) pq.push({bound[i], facts.size() - i});
    std::vector<bool> placed(facts.size(), false);
    std::unordered_set<std::uint64_t> seen;
    std::vector<FactRef> out;
    while (!pq.empty()) {
      auto [score, key] = pq.top();
      pq.pop();
      const std::size_t i = facts.size() - key;
      if (placed[i] || score != bound[i]) continue;
      placed[i] = true;
      out.push_back(facts[i]);
      for (const auto& v : *facts[i].args) {
        if (!v.is_null() || map_.contains(v.null_id()) || !seen.insert(v.null_id()).second) continue;
        for (const auto j : by_null[v.null_id()])
          if (!placed[j]) pq.push({++bound[j], facts.size() - j});
      }
    }
    return out;
  }

  const std::vector<std::uint32_t>* candidates(const FactRef& f, std::vector<std::uint32_t>& all) const {
    const std::vector<std::uint32_t>* best = nullptr;
    static const std::vector<std::uint32_t> none;
    for (std::size_t p = 0; p < f.args->size(); ++p) {
      Value v = (*f.args)[p];
      if (v.is_null()) {
        auto it = map_.find(v.null_id());
        if (it == map_.end()) continue;
        v = it->second;
      }
      const auto& idx = index_[f.rel][p];
      auto it = idx.find(v);
      if (it == idx.end()) return &none;
      if (!best || it->second.size() < best->size()) best = &it->second;
    }
    if (best) return best;
    all.resize(rows_[f.rel].size());
    for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
    return &all;
  }

  bool solve(std::size_t k) {
    if (k == order_.size()) return true;
    const FactRef& f = order_[k];
    std::vector<std::uint32_t> all;
    const auto* cands = candidates(f, all);
    std::vector<std::uint64_t> assigned;
    for (const auto ci : *cands) {
      const Tuple& row = *rows_[f.rel][ci];
      bool ok = true;
      for (std::size_t p = 0; p < row.size() && ok; ++p) {
        const Value& v = (*f.args)[p];
        if (!v.is_null()) {
          ok = v == row[p];
          continue;
        }
        if (auto it = map_.find(v.null_id()); it != map_.end()) {
          ok = it->second == row[p];
          continue;
        }
        if (injective_) {
          if (!row[p].is_null() || used_.contains(row[p].null_id())) {
            ok = false;
            continue;
          }
          if (from_colors_ && from_colors_->at(v.null_id()) != to_colors_->at(row[p].null_id())) {
            ok = false;
            continue;
          }
          used_.insert(row[p].null_id());
        }
        map_.emplace(v.null_id(), row[p]);
        assigned.push_back(v.null_id());
      }
      if (ok && solve(k + 1)) return true;
      for (const auto n : assigned) {
        if (injective_) used_.erase(map_.at(n).null_id());
        map_.erase(n);
      }
      assigned.clear();
    }
    return false;
  }

  const Instance& target_;
  bool injective_;
  const std::unordered_map<std::uint64_t, std::size_t>* from_colors_;
  const std::unordered_map<std::uint64_t, std::size_t>* to_colors_;
  std::vector<std::vector<const Tuple*>> rows_;
  std::vector<std::vector<std::unordered_map<Value, std::vector<std::uint32_t>, ValueHash>>> index_;
  std::vector<FactRef> order_;
  NullMapping map_;
  std::unordered_set<std::uint64_t> used_;
};

inline bool same_relations(const Instance& a, const Instance& b) {
  if (a.relation_count() != b.relation_count()) return false;
  for (std::uint32_t r = 0; r < a.relation_count(); ++r)
    if (a.schema().relation(r).name != b.schema().relation(r).name ||
        a.schema().relation(r).arity() != b.schema().relation(r).arity())
      return false;
  return true;
}

inline bool ground_facts_included(const Instance& a, const Instance& b) {
  for (std::uint32_t r = 0; r < a.relation_count(); ++r)
    for (const auto& row : a.table(r))
      if (std::none_of(row.begin(), row.end(), [](const Value& v) { return v.is_null(); }) && !b.contains(r, row))
        return false;
  return true;
}

}  // namespace detail

/// A mapping h on the nulls of `a` with h(a) ⊆ b, if any. Nulls may map to
/// constants or nulls. Backtracks per null-connected group of facts, most
/// constrained fact first.
inline std::optional<NullMapping> find_homomorphism(const Instance& a, const Instance& b) {
  if (!detail::same_relations(a, b)) throw SchemaError("homomorphism between instances of different schemas");
  if (!detail::ground_facts_included(a, b)) return std::nullopt;
  detail::HomSearch search(b, false, nullptr, nullptr);
  for (const auto& comp : detail::null_components(a))
    if (!search.extend(comp)) return std::nullopt;
  return std::move(search.mapping());
}

/// A bijection between the nulls of `a` and `b` mapping a onto b, if any.
inline std::optional<NullMapping> find_isomorphism(const Instance& a, const Instance& b) {
  if (!detail::same_relations(a, b)) throw SchemaError("isomorphism between instances of different schemas");
  for (std::uint32_t r = 0; r < a.relation_count(); ++r)
    if (a.size(r) != b.size(r)) return std::nullopt;
  if (!detail::ground_facts_included(a, b)) return std::nullopt;

  const auto ca = detail::null_colors(a), cb = detail::null_colors(b);
  auto comps_a = detail::null_components(a), comps_b = detail::null_components(b);
  if (comps_a.size() != comps_b.size()) return std::nullopt;

  // Components must be matched one to one; bucket them by an invariant first.
  auto signature = [](const std::vector<detail::FactRef>& comp, const auto& colors) {
    std::vector<std::size_t> hs;
    for (const auto& f : comp) {
      std::size_t h = f.rel;
      for (const auto& v : *f.args) h = detail::hash_mix(h, v.is_null() ? detail::hash_mix(0xa11ce, colors.at(v.null_id())) : v.hash());
      hs.push_back(h);
    }
    std::sort(hs.begin(), hs.end());
    std::size_t h = hs.size();
    for (auto x : hs) h = detail::hash_mix(h, x);
    return h;
  };
  std::unordered_map<std::size_t, std::vector<std::size_t>> bucket_b;
  for (std::size_t i = 0; i < comps_b.size(); ++i) bucket_b[signature(comps_b[i], cb)].push_back(i);

  NullMapping result;
  for (const auto& comp : comps_a) {
    auto it = bucket_b.find(signature(comp, ca));
    if (it == bucket_b.end() || it->second.empty()) return std::nullopt;
    bool matched = false;
    for (std::size_t k = 0; k < it->second.size() && !matched; ++k) {
      const auto& other = comps_b[it->second[k]];
      if (other.size() != comp.size()) continue;
      Instance target(b.schema());
      for (const auto& f : other) target.insert(f.rel, *f.args);
      detail::HomSearch search(target, true, &ca, &cb);
      if (!search.extend(comp)) continue;
      // Isomorphism is an equivalence, so any isomorphic partner will do.
      for (auto& [n, v] : search.mapping()) result.emplace(n, v);
      it->second.erase(it->second.begin() + static_cast<std::ptrdiff_t>(k));
      matched = true;
    }
    if (!matched) return std::nullopt;
  }
  return result;
}

inline bool is_isomorphic(const Instance& a, const Instance& b) { return find_isomorphism(a, b).has_value(); }

/// Applies a null mapping to every fact of an instance.
inline Instance apply_mapping(const Instance& inst, const NullMapping& h) {
  Instance out(inst.schema());
  for (std::uint32_t r = 0; r < inst.relation_count(); ++r)
    for (Tuple row : inst.table(r)) {
      for (auto& v : row)
        if (v.is_null())
          if (auto it = h.find(v.null_id()); it != h.end()) v = it->second;
      out.insert(r, std::move(row));
    }
  return out;
}

}  // namespace satchase
