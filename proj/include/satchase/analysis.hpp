#pragma once

// Static analysis of the tgd/fd interplay: mutable existentials, conflict
// areas, the Conflict Graph and its components, conflict masks, and the
// direct overlap test between two assignments.

#include <set>
#include <sstream>

#include "satchase/assign.hpp"

namespace satchase {

namespace detail {

inline bool stable_term(const StTgd& tgd, const Term& t, const std::vector<bool>& is_mutable) {
  return !t.is_variable() || tgd.is_universal(t.var()) || is_mutable[t.var()];
}

}  // namespace detail

/// Variable slots of `tgd` that are mutable existentials: the least
/// fixpoint over (fd, head atom) pairs whose key terms are universals,
/// constants or mutable existentials (or that pair positionwise with another
/// head atom of the same relation), marking the existentials at rhs
/// positions.
inline std::vector<bool> mutable_existential_mask(const StTgd& tgd, std::span<const Fd> fds) {
  std::vector<bool> is_mutable(tgd.variables.size(), false);
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& fd : fds) {
      for (std::size_t r = 0; r < tgd.head.size(); ++r) {
        const Atom& atom = tgd.head[r];
        if (atom.rel != fd.rel) continue;
        bool qualifies = std::all_of(fd.lhs.begin(), fd.lhs.end(), [&](std::uint32_t p) {
          return detail::stable_term(tgd, atom.args[p], is_mutable);
        });
        for (std::size_t r2 = 0; !qualifies && r2 < tgd.head.size(); ++r2) {
          const Atom& other = tgd.head[r2];
          if (r2 == r || other.rel != fd.rel) continue;
          qualifies = std::all_of(fd.lhs.begin(), fd.lhs.end(), [&](std::uint32_t p) {
            const bool both_stable = detail::stable_term(tgd, atom.args[p], is_mutable) &&
                                     detail::stable_term(tgd, other.args[p], is_mutable);
            return both_stable || atom.args[p] == other.args[p];
          });
        }
        if (!qualifies) continue;
        for (const auto p : fd.rhs) {
          const Term& t = atom.args[p];
          if (t.is_variable() && tgd.is_existential(t.var()) && !is_mutable[t.var()]) {
            is_mutable[t.var()] = true;
            changed = true;
          }
        }
      }
    }
  }
  return is_mutable;
}

/// Names of the mutable existentials of `tgd`.
inline std::set<std::string> compute_mutable_existentials(const StTgd& tgd, std::span<const Fd> fds) {
  std::set<std::string> out;
  const auto mask = mutable_existential_mask(tgd, fds);
  for (std::uint32_t v = 0; v < mask.size(); ++v)
    if (mask[v]) out.insert(tgd.variables[v].name);
  return out;
}

/// The key terms of one fd-relation head atom of a tgd, when every one of
/// them is a universal, a constant or a mutable existential.
struct ConflictArea {
  std::uint32_t tgd = 0;
  std::uint32_t fd = 0;
  std::uint32_t atom = 0;
  std::vector<Term> terms;  // terms[i] sits at fd.lhs[i]

  friend bool operator==(const ConflictArea&, const ConflictArea&) = default;
};

inline std::vector<ConflictArea> compute_conflict_areas(std::uint32_t tgd_index, const StTgd& tgd,
                                                        std::span<const Fd> fds,
                                                        const std::vector<bool>& is_mutable) {
  std::vector<ConflictArea> out;
  for (std::uint32_t f = 0; f < fds.size(); ++f) {
    for (std::uint32_t a = 0; a < tgd.head.size(); ++a) {
      const Atom& atom = tgd.head[a];
      if (atom.rel != fds[f].rel) continue;
      ConflictArea area{tgd_index, f, a, {}};
      bool ok = true;
      for (const auto p : fds[f].lhs) {
        ok = ok && detail::stable_term(tgd, atom.args[p], is_mutable);
        area.terms.push_back(atom.args[p]);
      }
      if (ok) out.push_back(std::move(area));
    }
  }
  return out;
}

inline std::vector<ConflictArea> compute_conflict_areas(std::uint32_t tgd_index, const StTgd& tgd,
                                                        std::span<const Fd> fds) {
  return compute_conflict_areas(tgd_index, tgd, fds, mutable_existential_mask(tgd, fds));
}

/// One vertex per tgd adorned with its conflict areas; an edge for every
/// pair of tgds with a non-trivial conflict (self-loops included).
struct ConflictGraph {
  std::vector<std::vector<ConflictArea>> areas;     // per tgd
  std::vector<std::vector<bool>> mutable_vars;      // per tgd, per slot
  std::vector<std::vector<std::uint32_t>> adjacent;  // sorted, may contain self
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // u <= v
  std::vector<std::vector<std::uint32_t>> components;          // sorted, ordered by smallest member
  std::vector<std::uint32_t> component_of;

  std::size_t vertex_count() const { return areas.size(); }

  bool has_edge(std::uint32_t u, std::uint32_t v) const {
    return std::binary_search(adjacent[u].begin(), adjacent[u].end(), v);
  }
};

/// Connected components by iterative traversal; components are ordered by
/// their smallest vertex and each is sorted.
inline std::vector<std::vector<std::uint32_t>> connected_components(
    const std::vector<std::vector<std::uint32_t>>& adjacent) {
  const std::size_t n = adjacent.size();
  std::vector<bool> seen(n, false);
  std::vector<std::vector<std::uint32_t>> out;
  std::vector<std::uint32_t> stack;
  for (std::uint32_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    out.emplace_back();
    seen[s] = true;
    stack.push_back(s);
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      out.back().push_back(u);
      for (const auto v : adjacent[u])
        if (!seen[v]) {
          seen[v] = true;
          stack.push_back(v);
        }
    }
    std::sort(out.back().begin(), out.back().end());
  }
  return out;
}

inline ConflictGraph build_conflict_graph(const Scenario& sc) {
  ConflictGraph g;
  const auto n = static_cast<std::uint32_t>(sc.tgds.size());
  g.areas.resize(n);
  g.mutable_vars.resize(n);
  g.adjacent.resize(n);
  for (std::uint32_t t = 0; t < n; ++t) {
    g.mutable_vars[t] = mutable_existential_mask(sc.tgds[t], sc.fds);
    g.areas[t] = compute_conflict_areas(t, sc.tgds[t], sc.fds, g.mutable_vars[t]);
  }
  for (std::uint32_t u = 0; u < n; ++u) {
    for (std::uint32_t v = u; v < n; ++v) {
      bool conflict = false;
      for (std::size_t i = 0; i < g.areas[u].size() && !conflict; ++i)
        for (std::size_t j = (u == v ? i + 1 : 0); j < g.areas[v].size() && !conflict; ++j)
          conflict = g.areas[u][i].fd == g.areas[v][j].fd;
      if (!conflict) continue;
      g.edges.emplace_back(u, v);
      g.adjacent[u].push_back(v);
      if (u != v) g.adjacent[v].push_back(u);
    }
  }
  for (auto& adj : g.adjacent) std::sort(adj.begin(), adj.end());
  g.components = connected_components(g.adjacent);
  g.component_of.assign(n, 0);
  for (std::uint32_t c = 0; c < g.components.size(); ++c)
    for (const auto v : g.components[c]) g.component_of[v] = c;
  return g;
}

/// Deterministic listing of the graph: vertices with adornments, edges,
/// components.
inline std::string dump_graph(const Scenario& sc, const ConflictGraph& g) {
  std::ostringstream out;
  auto term = [&](const StTgd& tgd, const Term& t) {
    if (t.is_variable()) return tgd.variables[t.var()].name;
    return t.value().is_string() ? "\"" + std::string(t.value().as_string()) + "\"" : t.value().to_string();
  };
  for (std::uint32_t v = 0; v < g.vertex_count(); ++v) {
    const auto& tgd = sc.tgds[v];
    out << "vertex v" << v + 1 << " " << tgd.id << "\n";
    for (std::size_t i = 0; i < g.areas[v].size(); ++i) {
      const auto& a = g.areas[v][i];
      out << "  area ca" << v + 1 << "_" << i + 1 << " = <(";
      for (std::size_t k = 0; k < a.terms.size(); ++k) out << (k ? "," : "") << term(tgd, a.terms[k]);
      out << ")," << sc.fds[a.fd].id << "> atom " << a.atom + 1 << "\n";
    }
  }
  for (const auto& [u, v] : g.edges)
    out << "edge v" << u + 1 << " v" << v + 1 << (u == v ? " (self-loop)" : "") << "\n";
  for (std::size_t c = 0; c < g.components.size(); ++c) {
    out << "component " << c + 1 << ":";
    for (const auto v : g.components[c]) out << " v" << v + 1;
    out << "\n";
  }
  return out.str();
}

/// A conflict mask: constant cells or wildcards (`nullopt`).
struct ConflictMask {
  std::uint32_t fd = 0;
  std::vector<std::optional<Value>> cells;

  friend bool operator==(const ConflictMask&, const ConflictMask&) = default;
};

struct ConflictMaskHash {
  std::size_t operator()(const ConflictMask& m) const {
    std::size_t h = m.fd;
    for (const auto& c : m.cells) h = detail::hash_mix(h, c ? c->hash() : 0x51ed27ULL);
    return h;
  }
};

/// Mask of an (already resolved) assignment image on a conflict area.
inline ConflictMask mask_of(std::span<const Value> image, const ConflictArea& area) {
  ConflictMask m{area.fd, {}};
  m.cells.reserve(area.terms.size());
  for (const auto& t : area.terms) {
    const Value v = term_value(t, image);
    m.cells.push_back(v.is_constant() ? std::optional<Value>(v) : std::nullopt);
  }
  return m;
}

/// True iff every constant cell of `mask` equals the image's value on the
/// corresponding area term, or that value is a null.
inline bool matches(std::span<const Value> image, const ConflictMask& mask, const ConflictArea& area) {
  for (std::size_t i = 0; i < mask.cells.size(); ++i) {
    if (!mask.cells[i]) continue;
    const Value v = term_value(area.terms[i], image);
    if (v.is_constant() && v != *mask.cells[i]) return false;
  }
  return true;
}

/// `general` subsumes `specific`: cellwise wildcard or equal.
inline bool subsumes(const ConflictMask& general, const ConflictMask& specific) {
  if (general.fd != specific.fd || general.cells.size() != specific.cells.size()) return false;
  for (std::size_t i = 0; i < general.cells.size(); ++i)
    if (general.cells[i] && general.cells[i] != specific.cells[i]) return false;
  return true;
}

/// Direct overlap test between two distinct assignments (given by tgd and
/// current image), without going through conflict areas or masks.
inline bool overlap(const Scenario& sc, const ConflictGraph& g, std::uint32_t tgd1, std::span<const Value> img1,
                    std::uint32_t tgd2, std::span<const Value> img2) {
  const StTgd& m1 = sc.tgds[tgd1];
  const StTgd& m2 = sc.tgds[tgd2];
  for (const auto& fd : sc.fds) {
    for (const auto& r1 : m1.head) {
      if (r1.rel != fd.rel) continue;
      for (const auto& r2 : m2.head) {
        if (r2.rel != fd.rel) continue;
        bool ok = true;
        for (const auto p : fd.lhs) {
          const Term& v1 = r1.args[p];
          const Term& v2 = r2.args[p];
          if (!detail::stable_term(m1, v1, g.mutable_vars[tgd1]) || !detail::stable_term(m2, v2, g.mutable_vars[tgd2])) {
            ok = false;
            break;
          }
          const Value x = term_value(v1, img1), y = term_value(v2, img2);
          if (x.is_constant() && y.is_constant() && x != y) {
            ok = false;
            break;
          }
        }
        if (ok) return true;
      }
    }
  }
  return false;
}

/// Interaction test on current images: some fd-relation head atoms of the
/// two assignments agree on all key positions.
inline bool interact(const Scenario& sc, std::uint32_t tgd1, std::span<const Value> img1, std::uint32_t tgd2,
                     std::span<const Value> img2) {
  for (const auto& fd : sc.fds)
    for (const auto& r1 : sc.tgds[tgd1].head) {
      if (r1.rel != fd.rel) continue;
      for (const auto& r2 : sc.tgds[tgd2].head) {
        if (r2.rel != fd.rel) continue;
        bool equal = true;
        for (const auto p : fd.lhs)
          if (term_value(r1.args[p], img1) != term_value(r2.args[p], img2)) {
            equal = false;
            break;
          }
        if (equal) return true;
      }
    }
  return false;
}

}  // namespace satchase
