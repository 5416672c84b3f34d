#pragma once

// Domain model: values, terms, atoms, facts, dependencies, schemas and
// instances of a data-exchange scenario.

#include <algorithm>
#include <atomic>
#include <compare>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace satchase {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A scenario or instance violates a schema-level invariant.
class SchemaError : public Error {
 public:
  using Error::Error;
};

namespace detail {

// Process-wide string interner. Ids are dense and stable for the lifetime
// of the process, so string constants compare by id for equality.
class SymbolTable {
 public:
  std::uint64_t intern(std::string_view s) {
    {
      std::shared_lock lock(mutex_);
      if (auto it = ids_.find(s); it != ids_.end()) return it->second;
    }
    std::unique_lock lock(mutex_);
    if (auto it = ids_.find(s); it != ids_.end()) return it->second;
    strings_.emplace_back(s);
    const auto id = static_cast<std::uint64_t>(strings_.size() - 1);
    ids_.emplace(std::string_view(strings_.back()), id);
    return id;
  }

  std::string_view lookup(std::uint64_t id) const {
    std::shared_lock lock(mutex_);
    return strings_[static_cast<std::size_t>(id)];
  }

 private:
  mutable std::shared_mutex mutex_;
  std::deque<std::string> strings_;
  std::unordered_map<std::string_view, std::uint64_t> ids_;
};

inline SymbolTable& symbols() {
  static SymbolTable table;
  return table;
}

inline std::size_t hash_mix(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

}  // namespace detail

enum class ValueKind : std::uint8_t { Int, String, Null };

/// A constant (integer or string) or a labelled null.
///
/// Integers and strings are distinct domains: `Value::integer(1)` never
/// equals `Value::string("1")`. Nulls print as `_:N<k>`.
class Value {
 public:
  Value() = default;

  static Value integer(std::int64_t v) { return Value(ValueKind::Int, static_cast<std::uint64_t>(v)); }
  static Value string(std::string_view s) { return Value(ValueKind::String, detail::symbols().intern(s)); }
  static Value null(std::uint64_t id) { return Value(ValueKind::Null, id); }

  ValueKind kind() const { return kind_; }
  bool is_constant() const { return kind_ != ValueKind::Null; }
  bool is_null() const { return kind_ == ValueKind::Null; }
  bool is_int() const { return kind_ == ValueKind::Int; }
  bool is_string() const { return kind_ == ValueKind::String; }

  std::int64_t as_int() const { return static_cast<std::int64_t>(bits_); }
  std::string_view as_string() const { return detail::symbols().lookup(bits_); }
  std::uint64_t null_id() const { return bits_; }
  std::uint64_t raw() const { return bits_; }

  std::string to_string() const {
    switch (kind_) {
      case ValueKind::Int: return std::to_string(as_int());
      case ValueKind::String: return std::string(as_string());
      case ValueKind::Null: return "_:N" + std::to_string(bits_);
    }
    return {};
  }

  friend bool operator==(const Value& a, const Value& b) { return a.kind_ == b.kind_ && a.bits_ == b.bits_; }

  // Total order: integers (numeric) < strings (bytewise) < nulls (by id).
  friend std::strong_ordering operator<=>(const Value& a, const Value& b) {
    if (a.kind_ != b.kind_) return a.kind_ <=> b.kind_;
    switch (a.kind_) {
      case ValueKind::Int: return a.as_int() <=> b.as_int();
      case ValueKind::Null: return a.bits_ <=> b.bits_;
      case ValueKind::String: {
        if (a.bits_ == b.bits_) return std::strong_ordering::equal;
        const int c = a.as_string().compare(b.as_string());
        return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
      }
    }
    return std::strong_ordering::equal;
  }

  std::size_t hash() const {
    return detail::hash_mix(static_cast<std::size_t>(kind_) * 0x100000001b3ULL, std::hash<std::uint64_t>{}(bits_));
  }

 private:
  Value(ValueKind kind, std::uint64_t bits) : kind_(kind), bits_(bits) {}

  ValueKind kind_ = ValueKind::Int;
  std::uint64_t bits_ = 0;
};

struct ValueHash {
  std::size_t operator()(const Value& v) const { return v.hash(); }
};

using Tuple = std::vector<Value>;

struct TupleHash {
  std::size_t operator()(std::span<const Value> t) const {
    std::size_t h = t.size();
    for (const auto& v : t) h = detail::hash_mix(h, v.hash());
    return h;
  }
  std::size_t operator()(const Tuple& t) const { return (*this)(std::span<const Value>(t)); }
};

/// Monotone source of fresh labelled nulls, safe for concurrent use.
class NullSource {
 public:
  explicit NullSource(std::uint64_t next = 0) : next_(next) {}

  Value fresh() { return Value::null(next_.fetch_add(1, std::memory_order_relaxed)); }

  /// Reserves `n` consecutive ids and returns the first.
  std::uint64_t reserve(std::uint64_t n) { return next_.fetch_add(n, std::memory_order_relaxed); }

  std::uint64_t peek() const { return next_.load(std::memory_order_relaxed); }

 private:
  std::atomic<std::uint64_t> next_;
};

enum class Quantifier : std::uint8_t { Universal, Existential };

struct Variable {
  std::string name;
  Quantifier quantifier = Quantifier::Universal;

  friend bool operator==(const Variable&, const Variable&) = default;
};

/// A term of a dependency: a constant, a null, or a variable slot of the
/// owning tgd.
class Term {
 public:
  enum class Kind : std::uint8_t { Constant, Null, Variable };

  Term() = default;
  static Term constant(Value v) { return Term(v, kNoVar); }
  static Term variable(std::uint32_t slot) { return Term(Value{}, slot); }

  Kind kind() const {
    if (var_ != kNoVar) return Kind::Variable;
    return value_.is_null() ? Kind::Null : Kind::Constant;
  }
  bool is_variable() const { return var_ != kNoVar; }
  std::uint32_t var() const { return var_; }
  const Value& value() const { return value_; }

  friend bool operator==(const Term&, const Term&) = default;

 private:
  static constexpr std::uint32_t kNoVar = std::numeric_limits<std::uint32_t>::max();
  Term(Value v, std::uint32_t var) : value_(v), var_(var) {}

  Value value_;
  std::uint32_t var_ = kNoVar;
};

struct Atom {
  std::string relation;
  std::uint32_t rel = 0;  // index into the owning schema
  std::vector<Term> args;

  friend bool operator==(const Atom&, const Atom&) = default;
};

struct Fact {
  std::uint32_t rel = 0;
  Tuple args;

  friend bool operator==(const Fact&, const Fact&) = default;
  friend auto operator<=>(const Fact&, const Fact&) = default;
};

struct RelationDecl {
  std::string name;
  std::vector<std::string> attributes;

  std::size_t arity() const { return attributes.size(); }
  friend bool operator==(const RelationDecl&, const RelationDecl&) = default;
};

class Schema {
 public:
  std::uint32_t add(RelationDecl decl) {
    if (decl.attributes.empty()) throw SchemaError("relation '" + decl.name + "' must have arity >= 1");
    if (index_.contains(decl.name)) throw SchemaError("duplicate relation '" + decl.name + "'");
    const auto id = static_cast<std::uint32_t>(relations_.size());
    index_.emplace(decl.name, id);
    relations_.push_back(std::move(decl));
    return id;
  }

  std::optional<std::uint32_t> find(std::string_view name) const {
    if (auto it = index_.find(std::string(name)); it != index_.end()) return it->second;
    return std::nullopt;
  }

  const RelationDecl& relation(std::uint32_t id) const { return relations_.at(id); }
  const std::vector<RelationDecl>& relations() const { return relations_; }
  std::size_t size() const { return relations_.size(); }

  friend bool operator==(const Schema& a, const Schema& b) { return a.relations_ == b.relations_; }

 private:
  std::vector<RelationDecl> relations_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// A source-to-target tgd. Variable slots are ordered universals first (by
/// first occurrence in the body), then existentials (by first occurrence in
/// the head).
struct StTgd {
  std::string id;
  std::vector<Atom> body;
  std::vector<Atom> head;
  std::vector<Variable> variables;
  std::uint32_t num_universals = 0;

  bool is_universal(std::uint32_t slot) const { return slot < num_universals; }
  bool is_existential(std::uint32_t slot) const { return slot >= num_universals; }
  std::uint32_t num_existentials() const { return static_cast<std::uint32_t>(variables.size()) - num_universals; }

  std::optional<std::uint32_t> slot_of(std::string_view name) const {
    for (std::uint32_t i = 0; i < variables.size(); ++i)
      if (variables[i].name == name) return i;
    return std::nullopt;
  }

  friend bool operator==(const StTgd&, const StTgd&) = default;
};

/// Functional dependency `relation.lhs -> relation.rhs` with 0-based positions.
struct Fd {
  std::string id;
  std::string relation;
  std::uint32_t rel = 0;
  std::vector<std::uint32_t> lhs;
  std::vector<std::uint32_t> rhs;

  friend bool operator==(const Fd&, const Fd&) = default;
};

/// Builds a normalized fd: positions sorted and deduplicated, positions on
/// both sides dropped from the rhs. Throws if either side ends up empty or
/// a position is out of range.
inline Fd make_fd(std::string id, const Schema& target, std::string_view relation, std::vector<std::uint32_t> lhs,
                  std::vector<std::uint32_t> rhs) {
  const auto rel = target.find(relation);
  if (!rel) throw SchemaError("fd '" + id + "' references unknown target relation '" + std::string(relation) + "'");
  const auto arity = target.relation(*rel).arity();
  auto norm = [&](std::vector<std::uint32_t>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    for (auto p : v)
      if (p >= arity) throw SchemaError("fd '" + id + "' position " + std::to_string(p + 1) + " out of range");
  };
  norm(lhs);
  norm(rhs);
  std::erase_if(rhs, [&](std::uint32_t p) { return std::binary_search(lhs.begin(), lhs.end(), p); });
  if (lhs.empty()) throw SchemaError("fd '" + id + "' has an empty left-hand side");
  if (rhs.empty()) throw SchemaError("fd '" + id + "' has an empty right-hand side after normalization");
  return Fd{std::move(id), std::string(relation), *rel, std::move(lhs), std::move(rhs)};
}

struct Scenario {
  Schema source;
  Schema target;
  std::vector<StTgd> tgds;
  std::vector<Fd> fds;

  friend bool operator==(const Scenario&, const Scenario&) = default;

  /// Checks every structural invariant; throws SchemaError on the first one
  /// violated.
  void validate() const {
    for (const auto& r : source.relations())
      if (target.find(r.name)) throw SchemaError("relation '" + r.name + "' declared in both source and target");
    std::unordered_set<std::string> ids;
    auto check_atom = [](const Schema& schema, const Atom& atom, const std::string& where) {
      const auto rel = schema.find(atom.relation);
      if (!rel) throw SchemaError(where + ": unknown relation '" + atom.relation + "'");
      if (*rel != atom.rel) throw SchemaError(where + ": stale relation index for '" + atom.relation + "'");
      if (schema.relation(*rel).arity() != atom.args.size())
        throw SchemaError(where + ": arity mismatch for '" + atom.relation + "'");
    };
    for (const auto& tgd : tgds) {
      if (!ids.insert(tgd.id).second) throw SchemaError("duplicate dependency id '" + tgd.id + "'");
      std::vector<bool> in_body(tgd.variables.size(), false), in_head(tgd.variables.size(), false);
      for (const auto& a : tgd.body) {
        check_atom(source, a, "tgd " + tgd.id);
        for (const auto& t : a.args) {
          if (t.kind() == Term::Kind::Null) throw SchemaError("tgd " + tgd.id + ": nulls are not allowed in dependencies");
          if (t.is_variable()) {
            if (!tgd.is_universal(t.var())) throw SchemaError("tgd " + tgd.id + ": existential in body");
            in_body[t.var()] = true;
          }
        }
      }
      for (const auto& a : tgd.head) {
        check_atom(target, a, "tgd " + tgd.id);
        for (const auto& t : a.args) {
          if (t.kind() == Term::Kind::Null) throw SchemaError("tgd " + tgd.id + ": nulls are not allowed in dependencies");
          if (t.is_variable()) in_head[t.var()] = true;
        }
      }
      if (tgd.body.empty() || tgd.head.empty()) throw SchemaError("tgd " + tgd.id + ": empty body or head");
      for (std::uint32_t v = 0; v < tgd.variables.size(); ++v) {
        const bool universal_tag = tgd.variables[v].quantifier == Quantifier::Universal;
        if (universal_tag != tgd.is_universal(v)) throw SchemaError("tgd " + tgd.id + ": variable slots out of order");
        if (tgd.is_universal(v) && !in_body[v]) throw SchemaError("tgd " + tgd.id + ": universal not bound in body");
        if (tgd.is_existential(v) && !in_head[v]) throw SchemaError("tgd " + tgd.id + ": unused existential");
      }
    }
    for (const auto& fd : fds) {
      if (!ids.insert(fd.id).second) throw SchemaError("duplicate dependency id '" + fd.id + "'");
      if (source.find(fd.relation)) throw SchemaError("fd " + fd.id + " is on source relation '" + fd.relation + "'");
      auto copy = make_fd(fd.id, target, fd.relation, fd.lhs, fd.rhs);
      if (copy != fd) throw SchemaError("fd " + fd.id + " is not normalized");
    }
  }
};

/// A set of facts over a schema; each relation is deduplicated.
class Instance {
 public:
  using Table = std::unordered_set<Tuple, TupleHash>;

  Instance() = default;
  explicit Instance(Schema schema) : schema_(std::move(schema)), tables_(schema_.size()) {}

  const Schema& schema() const { return schema_; }

  bool insert(std::uint32_t rel, Tuple args) {
    if (rel >= tables_.size()) throw SchemaError("fact for unknown relation index " + std::to_string(rel));
    if (args.size() != schema_.relation(rel).arity())
      throw SchemaError("arity mismatch inserting into '" + schema_.relation(rel).name + "'");
    return tables_[rel].insert(std::move(args)).second;
  }

  bool insert(std::string_view relation, Tuple args) {
    const auto rel = schema_.find(relation);
    if (!rel) throw SchemaError("fact for unknown relation '" + std::string(relation) + "'");
    return insert(*rel, std::move(args));
  }

  bool insert(Fact f) { return insert(f.rel, std::move(f.args)); }

  bool contains(std::uint32_t rel, const Tuple& args) const { return tables_.at(rel).contains(args); }

  const Table& table(std::uint32_t rel) const { return tables_.at(rel); }
  const Table& table(std::string_view relation) const {
    const auto rel = schema_.find(relation);
    if (!rel) throw SchemaError("unknown relation '" + std::string(relation) + "'");
    return tables_[*rel];
  }

  std::size_t size(std::uint32_t rel) const { return tables_.at(rel).size(); }
  std::size_t size(std::string_view relation) const { return table(relation).size(); }
  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& t : tables_) n += t.size();
    return n;
  }
  std::size_t relation_count() const { return tables_.size(); }

  std::vector<Tuple> sorted_rows(std::uint32_t rel) const {
    std::vector<Tuple> rows(tables_.at(rel).begin(), tables_.at(rel).end());
    std::sort(rows.begin(), rows.end());
    return rows;
  }

  std::vector<Fact> facts() const {
    std::vector<Fact> out;
    for (std::uint32_t r = 0; r < tables_.size(); ++r)
      for (const auto& row : tables_[r]) out.push_back(Fact{r, row});
    return out;
  }

  bool has_nulls() const {
    for (const auto& t : tables_)
      for (const auto& row : t)
        for (const auto& v : row)
          if (v.is_null()) return true;
    return false;
  }

  void reserve(std::uint32_t rel, std::size_t n) { tables_.at(rel).reserve(n); }

  friend bool operator==(const Instance& a, const Instance& b) {
    return a.schema_ == b.schema_ && a.tables_ == b.tables_;
  }

 private:
  Schema schema_;
  std::vector<Table> tables_;
};

inline std::string format_fact(const Schema& schema, const Fact& f) {
  std::string s = schema.relation(f.rel).name + "(";
  for (std::size_t i = 0; i < f.args.size(); ++i) {
    if (i) s += ",";
    s += f.args[i].to_string();
  }
  return s + ")";
}

}  // namespace satchase
