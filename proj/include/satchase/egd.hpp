#pragma once

// Fd application inside one group of assignments: equality classes over
// nulls, a key index over the group's fd-relevant head atoms, and a
// worklist that runs fd steps to quiescence.

#include <deque>

#include "satchase/assign.hpp"

namespace satchase {

/// Raised when an fd equates two distinct constants.
class ChaseFail : public Error {
 public:
  ChaseFail(std::string fd_id, Fact left, Fact right, std::string message)
      : Error(std::move(message)), fd_id_(std::move(fd_id)), left_(std::move(left)), right_(std::move(right)) {}

  const std::string& fd_id() const { return fd_id_; }
  const Fact& left() const { return left_; }
  const Fact& right() const { return right_; }

 private:
  std::string fd_id_;
  Fact left_;
  Fact right_;
};

enum class UnifyResult { Merged, NoOp, Fail };

/// Union-find over nulls where a class may be bound to one constant.
/// Between two nulls the smaller id becomes the representative.
class EqualityClasses {
 public:
  Value resolve(const Value& v) {
    if (!v.is_null()) return v;
    const auto root = find(v.null_id());
    if (auto it = constant_.find(root); it != constant_.end()) return it->second;
    return Value::null(root);
  }

  UnifyResult unify(const Value& a, const Value& b) {
    const Value ra = resolve(a), rb = resolve(b);
    if (ra == rb) return UnifyResult::NoOp;
    if (ra.is_constant() && rb.is_constant()) return UnifyResult::Fail;
    if (ra.is_constant()) {
      constant_.emplace(rb.null_id(), ra);
    } else if (rb.is_constant()) {
      constant_.emplace(ra.null_id(), rb);
    } else {
      const auto lo = std::min(ra.null_id(), rb.null_id()), hi = std::max(ra.null_id(), rb.null_id());
      parent_[hi] = lo;
    }
    return UnifyResult::Merged;
  }

  bool empty() const { return parent_.empty() && constant_.empty(); }

  void clear() {
    parent_.clear();
    constant_.clear();
  }

 private:
  std::uint64_t find(std::uint64_t n) {
    auto it = parent_.find(n);
    if (it == parent_.end()) return n;
    std::uint64_t root = it->second;
    for (auto jt = parent_.find(root); jt != parent_.end(); jt = parent_.find(root)) root = jt->second;
    // path compression
    while (true) {
      auto kt = parent_.find(n);
      if (kt == parent_.end() || kt->second == root) break;
      n = std::exchange(kt->second, root);
    }
    return root;
  }

  std::unordered_map<std::uint64_t, std::uint64_t> parent_;
  std::unordered_map<std::uint64_t, Value> constant_;
};

/// A value rewrite performed by an fd step: every occurrence of `from`
/// (a null class representative) now resolves to `to`.
struct Merge {
  Value from;
  Value to;
  std::string fd;

  friend bool operator==(const Merge&, const Merge&) = default;
};

/// Precomputed (fd, head atom) pairs per tgd: which head atoms of a tgd
/// carry the relation of which fd.
struct FdPlan {
  struct Slot {
    std::uint32_t fd;
    std::uint32_t atom;
  };
  std::vector<std::vector<Slot>> per_tgd;

  static FdPlan build(const Scenario& sc) {
    FdPlan plan;
    plan.per_tgd.resize(sc.tgds.size());
    for (std::uint32_t t = 0; t < sc.tgds.size(); ++t)
      for (std::uint32_t f = 0; f < sc.fds.size(); ++f)
        for (std::uint32_t a = 0; a < sc.tgds[t].head.size(); ++a)
          if (sc.tgds[t].head[a].rel == sc.fds[f].rel) plan.per_tgd[t].push_back({f, a});
    return plan;
  }
};

/// Equality classes plus key index for one group of assignments (a
/// Saturation Set under construction, or the whole assignment set for the
/// classical chase). Members are referenced by their position in the group.
///
/// Images are never rewritten eagerly; readers go through `resolve`.
class SetChaser {
 public:
  using MergeHook = std::function<void(const Value& from, const Value& to)>;

  SetChaser(const Scenario& sc, const FdPlan& plan) : sc_(&sc), plan_(&plan), index_(sc.fds.size()) {}

  void set_merge_hook(MergeHook hook) { hook_ = std::move(hook); }

  /// Adds an assignment and queues every fd step it enables. Fd steps run
  /// on the next `apply_to_termination` call.
  std::uint32_t add(const Assignment& a) {
    const auto member = static_cast<std::uint32_t>(members_.size());
    members_.push_back(&a);
    for (const auto& slot : plan_->per_tgd[a.tgd]) {
      const auto occ = static_cast<std::uint32_t>(occs_.size());
      occs_.push_back({member, slot.atom, slot.fd});
      key_occurrence(occ, /*register_uses=*/true);
    }
    return member;
  }

  /// Runs queued fd steps, and those they trigger transitively, until no fd
  /// applies within the group. Returns the merges performed.
  /// Throws ChaseFail on a constant clash.
  std::vector<Merge> apply_to_termination() {
    std::vector<Merge> log;
    while (!pending_.empty()) {
      const Pending p = pending_.front();
      pending_.pop_front();
      const Fd& fd = sc_->fds[occs_[p.a].fd];
      for (const auto pos : fd.rhs) {
        const Value va = classes_.resolve(arg(p.a, pos)), vb = classes_.resolve(arg(p.b, pos));
        if (va == vb) continue;
        if (va.is_constant() && vb.is_constant()) {
          Fact left = resolved_fact(p.a), right = resolved_fact(p.b);
          throw ChaseFail(fd.id, left, right,
                          "fd " + fd.id + " equates constants " + va.to_string() + " and " + vb.to_string() + " in " +
                              format_fact(sc_->target, left) + " and " + format_fact(sc_->target, right));
        }
        classes_.unify(va, vb);
        // The absorbed side is always a null representative: the one facing
        // a constant, or the larger id of two nulls.
        Value from;
        if (va.is_constant()) {
          from = vb;
        } else if (vb.is_constant()) {
          from = va;
        } else {
          from = va.null_id() > vb.null_id() ? va : vb;
        }
        const Value to = classes_.resolve(from);
        ++merges_;
        if (hook_) hook_(from, to);
        log.push_back({from, to, fd.id});
        rekey(from.null_id(), to);
      }
    }
    return log;
  }

  Value resolve(const Value& v) { return classes_.resolve(v); }

  Tuple resolved_image(std::uint32_t member) {
    Tuple out = members_[member]->image;
    for (auto& v : out) v = classes_.resolve(v);
    return out;
  }

  const Assignment& member(std::uint32_t i) const { return *members_[i]; }
  std::size_t size() const { return members_.size(); }
  bool quiescent() const { return pending_.empty(); }
  std::uint64_t merges() const { return merges_; }

  /// Resolved head materialization of every member, deduplicated per member.
  void materialize_into(std::vector<Fact>& out) {
    for (std::uint32_t m = 0; m < members_.size(); ++m) {
      auto facts = materialize(sc_->tgds[members_[m]->tgd], resolved_image(m));
      for (auto& f : facts) out.push_back(std::move(f));
    }
  }

  /// Drops all members and state; the chaser can be reused.
  void clear() {
    members_.clear();
    occs_.clear();
    pending_.clear();
    if (uses_.bucket_count() > 4096) {
      decltype(uses_)().swap(uses_);
    } else {
      uses_.clear();
    }
    for (auto& idx : index_) {
      if (idx.bucket_count() > 4096) {
        std::remove_reference_t<decltype(idx)>().swap(idx);
      } else {
        idx.clear();
      }
    }
    classes_.clear();
  }

 private:
  struct Occ {
    std::uint32_t member;
    std::uint32_t atom;
    std::uint32_t fd;
  };
  struct Pending {
    std::uint32_t a;
    std::uint32_t b;
  };

  Value arg(std::uint32_t occ, std::uint32_t pos) const {
    const Occ& o = occs_[occ];
    const Assignment& a = *members_[o.member];
    return term_value(sc_->tgds[a.tgd].head[o.atom].args[pos], a.image);
  }

  Fact resolved_fact(std::uint32_t occ) {
    const Occ& o = occs_[occ];
    const Atom& atom = sc_->tgds[members_[o.member]->tgd].head[o.atom];
    Fact f{atom.rel, {}};
    for (std::uint32_t p = 0; p < atom.args.size(); ++p) f.args.push_back(classes_.resolve(arg(occ, p)));
    return f;
  }

  void key_occurrence(std::uint32_t occ, bool register_uses) {
    const Fd& fd = sc_->fds[occs_[occ].fd];
    Tuple key;
    key.reserve(fd.lhs.size());
    for (const auto pos : fd.lhs) {
      key.push_back(classes_.resolve(arg(occ, pos)));
      if (register_uses && key.back().is_null()) uses_[key.back().null_id()].push_back(occ);
    }
    auto [it, inserted] = index_[occs_[occ].fd].try_emplace(std::move(key), occ);
    if (!inserted && it->second != occ) pending_.push_back({it->second, occ});
  }

  // Class `from` was absorbed into `to`: occurrences keyed on `from` get
  // their new key, and their use entries move to `to` when it is a null.
  void rekey(std::uint64_t from, const Value& to) {
    auto it = uses_.find(from);
    if (it == uses_.end()) return;
    std::vector<std::uint32_t> moved = std::move(it->second);
    uses_.erase(it);
    for (const auto occ : moved) key_occurrence(occ, false);
    if (to.is_null()) {
      auto& dst = uses_[to.null_id()];
      if (dst.size() < moved.size()) dst.swap(moved);
      dst.insert(dst.end(), moved.begin(), moved.end());
    }
  }

  const Scenario* sc_;
  const FdPlan* plan_;
  std::vector<const Assignment*> members_;
  std::vector<Occ> occs_;
  std::vector<std::unordered_map<Tuple, std::uint32_t, TupleHash>> index_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> uses_;
  std::deque<Pending> pending_;
  EqualityClasses classes_;
  MergeHook hook_;
  std::uint64_t merges_ = 0;
};

}  // namespace satchase
