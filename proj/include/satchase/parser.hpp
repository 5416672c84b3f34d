#pragma once

// Mapping language (`.map`) and CSV instance I/O.
//
//   mapping   := { statement }
//   statement := ("SOURCE" | "TARGET") decl { "," decl } "."
//              | "TGD" ident ":" atoms "->" atoms "."
//              | "FD" ident ":" ident "[" ints "]" "->" "[" ints "]" "."
//   decl      := ident "(" ident { "," ident } ")"
//   atoms     := atom { ("," | "&") atom }
//   atom      := ident "(" term { "," term } ")"
//   term      := ident | integer | string
//
// Variables bound in a tgd body are universal; head variables that do not
// occur in the body are existential. Fd positions are 1-based. `#` and `%`
// start a comment that runs to the end of the line.

#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "satchase/core.hpp"

namespace satchase {

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t line, std::size_t col)
      : Error("line " + std::to_string(line) + ", col " + std::to_string(col) + ": " + msg), line_(line), col_(col) {}

  std::size_t line() const { return line_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t line_;
  std::size_t col_;
};

namespace detail {

enum class Tok { Ident, Int, String, LParen, RParen, LBrack, RBrack, Comma, Dot, Colon, Arrow, Amp, End };

struct Token {
  Tok kind;
  std::string text;
  std::size_t line;
  std::size_t col;
};

inline bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\''; }

inline std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0, line = 1, col = 1;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '#' || c == '%') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    const std::size_t l = line, cl = col;
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < src.size() && ident_char(src[j])) ++j;
      out.push_back({Tok::Ident, std::string(src.substr(i, j - i)), l, cl});
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '-' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i + 1;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      out.push_back({Tok::Int, std::string(src.substr(i, j - i)), l, cl});
      advance(j - i);
    } else if (c == '"') {
      std::string text;
      std::size_t j = i + 1;
      for (;; ++j) {
        if (j >= src.size()) throw ParseError("unterminated string literal", l, cl);
        if (src[j] == '\\' && j + 1 < src.size()) {
          text += src[++j];
        } else if (src[j] == '"') {
          break;
        } else {
          text += src[j];
        }
      }
      out.push_back({Tok::String, std::move(text), l, cl});
      advance(j + 1 - i);
    } else if (c == '-' && i + 1 < src.size() && src[i + 1] == '>') {
      out.push_back({Tok::Arrow, "->", l, cl});
      advance(2);
    } else {
      Tok k;
      switch (c) {
        case '(': k = Tok::LParen; break;
        case ')': k = Tok::RParen; break;
        case '[': k = Tok::LBrack; break;
        case ']': k = Tok::RBrack; break;
        case ',': k = Tok::Comma; break;
        case '.': k = Tok::Dot; break;
        case ':': k = Tok::Colon; break;
        case '&': k = Tok::Amp; break;
        default: throw ParseError(std::string("unexpected character '") + c + "'", l, cl);
      }
      out.push_back({k, std::string(1, c), l, cl});
      advance(1);
    }
  }
  out.push_back({Tok::End, "", line, col});
  return out;
}

class MappingParser {
 public:
  explicit MappingParser(std::string_view text) : toks_(tokenize(text)) {}

  Scenario parse() {
    Scenario sc;
    while (peek().kind != Tok::End) {
      const Token kw = expect(Tok::Ident, "statement keyword");
      if (kw.text == "SOURCE" || kw.text == "TARGET") {
        Schema& schema = kw.text == "SOURCE" ? sc.source : sc.target;
        do {
          parse_decl(schema, kw.text == "SOURCE" ? sc.target : sc.source);
        } while (accept(Tok::Comma));
        expect(Tok::Dot, "'.'");
      } else if (kw.text == "TGD") {
        parse_tgd(sc);
      } else if (kw.text == "FD") {
        parse_fd(sc);
      } else {
        throw ParseError("unknown statement '" + kw.text + "'", kw.line, kw.col);
      }
    }
    try {
      sc.validate();
    } catch (const SchemaError& e) {
      throw ParseError(e.what(), toks_.back().line, toks_.back().col);
    }
    return sc;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  Token next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool accept(Tok k) {
    if (peek().kind != k) return false;
    ++pos_;
    return true;
  }
  Token expect(Tok k, std::string_view what) {
    if (peek().kind != k) {
      const auto& t = peek();
      throw ParseError("expected " + std::string(what) + ", found '" + t.text + "'", t.line, t.col);
    }
    return next();
  }
  [[noreturn]] void fail(const Token& at, const std::string& msg) const { throw ParseError(msg, at.line, at.col); }

  void check_fresh_id(const Token& id) {
    if (!ids_.insert(id.text).second) fail(id, "duplicate dependency id '" + id.text + "'");
  }

  void parse_decl(Schema& schema, const Schema& other) {
    const Token name = expect(Tok::Ident, "relation name");
    expect(Tok::LParen, "'('");
    RelationDecl decl{name.text, {}};
    do {
      decl.attributes.push_back(expect(Tok::Ident, "attribute name").text);
    } while (accept(Tok::Comma));
    expect(Tok::RParen, "')'");
    if (schema.find(name.text) || other.find(name.text)) fail(name, "duplicate relation '" + name.text + "'");
    schema.add(std::move(decl));
  }

  struct RawAtom {
    Token name;
    std::vector<Token> args;
  };

  std::vector<RawAtom> parse_atoms() {
    std::vector<RawAtom> atoms;
    do {
      RawAtom a{expect(Tok::Ident, "relation name"), {}};
      expect(Tok::LParen, "'('");
      do {
        const Token& t = peek();
        if (t.kind != Tok::Ident && t.kind != Tok::Int && t.kind != Tok::String) fail(t, "expected term");
        a.args.push_back(next());
      } while (accept(Tok::Comma));
      expect(Tok::RParen, "')'");
      atoms.push_back(std::move(a));
    } while (accept(Tok::Comma) || accept(Tok::Amp));
    return atoms;
  }

  static Value literal(const Token& t) {
    if (t.kind == Tok::String) return Value::string(t.text);
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc{} || p != t.text.data() + t.text.size())
      throw ParseError("integer literal out of range", t.line, t.col);
    return Value::integer(v);
  }

  void parse_tgd(Scenario& sc) {
    const Token id = expect(Tok::Ident, "tgd id");
    check_fresh_id(id);
    expect(Tok::Colon, "':'");
    auto body = parse_atoms();
    expect(Tok::Arrow, "'->'");
    auto head = parse_atoms();
    expect(Tok::Dot, "'.'");

    StTgd tgd;
    tgd.id = id.text;
    std::map<std::string, std::uint32_t> slots;
    auto bind = [&](const std::vector<RawAtom>& atoms, Quantifier q) {
      for (const auto& a : atoms)
        for (const auto& t : a.args)
          if (t.kind == Tok::Ident && !slots.contains(t.text)) {
            slots.emplace(t.text, static_cast<std::uint32_t>(tgd.variables.size()));
            tgd.variables.push_back({t.text, q});
          }
    };
    bind(body, Quantifier::Universal);
    tgd.num_universals = static_cast<std::uint32_t>(tgd.variables.size());
    bind(head, Quantifier::Existential);

    auto build = [&](const std::vector<RawAtom>& atoms, const Schema& schema, const char* side) {
      std::vector<Atom> out;
      for (const auto& a : atoms) {
        const auto rel = schema.find(a.name.text);
        if (!rel) fail(a.name, std::string("unknown ") + side + " relation '" + a.name.text + "'");
        if (schema.relation(*rel).arity() != a.args.size())
          fail(a.name, "arity mismatch for '" + a.name.text + "': expected " +
                           std::to_string(schema.relation(*rel).arity()) + ", got " + std::to_string(a.args.size()));
        Atom atom{a.name.text, *rel, {}};
        for (const auto& t : a.args)
          atom.args.push_back(t.kind == Tok::Ident ? Term::variable(slots.at(t.text)) : Term::constant(literal(t)));
        out.push_back(std::move(atom));
      }
      return out;
    };
    tgd.body = build(body, sc.source, "source");
    tgd.head = build(head, sc.target, "target");
    sc.tgds.push_back(std::move(tgd));
  }

  std::vector<std::uint32_t> parse_positions() {
    expect(Tok::LBrack, "'['");
    std::vector<std::uint32_t> out;
    do {
      const Token t = expect(Tok::Int, "position");
      const auto v = literal(t).as_int();
      if (v < 1) fail(t, "fd positions are 1-based");
      out.push_back(static_cast<std::uint32_t>(v - 1));
    } while (accept(Tok::Comma));
    expect(Tok::RBrack, "']'");
    return out;
  }

  void parse_fd(Scenario& sc) {
    const Token id = expect(Tok::Ident, "fd id");
    check_fresh_id(id);
    expect(Tok::Colon, "':'");
    const Token rel = expect(Tok::Ident, "relation name");
    auto lhs = parse_positions();
    expect(Tok::Arrow, "'->'");
    auto rhs = parse_positions();
    expect(Tok::Dot, "'.'");
    if (sc.source.find(rel.text)) fail(rel, "fd '" + id.text + "' is declared on source relation '" + rel.text + "'");
    if (!sc.target.find(rel.text)) fail(rel, "unknown target relation '" + rel.text + "'");
    try {
      sc.fds.push_back(make_fd(id.text, sc.target, rel.text, std::move(lhs), std::move(rhs)));
    } catch (const SchemaError& e) {
      fail(rel, e.what());
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::unordered_set<std::string> ids_;
};

inline std::string quote_literal(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline Scenario parse_mapping(std::string_view text) { return detail::MappingParser(text).parse(); }

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Scenario load_mapping(const std::filesystem::path& path) { return parse_mapping(read_file(path)); }

inline std::string format_term(const StTgd& tgd, const Term& t) {
  if (t.is_variable()) return tgd.variables[t.var()].name;
  const auto& v = t.value();
  return v.is_string() ? detail::quote_literal(v.as_string()) : v.to_string();
}

inline std::string format_atom(const StTgd& tgd, const Atom& a) {
  std::string s = a.relation + "(";
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (i) s += ",";
    s += format_term(tgd, a.args[i]);
  }
  return s + ")";
}

/// Pretty-prints a scenario in the mapping language; `parse_mapping` of the
/// result yields an equal scenario.
inline std::string print_mapping(const Scenario& sc) {
  std::ostringstream out;
  auto decls = [&](const char* kw, const Schema& s) {
    for (const auto& r : s.relations()) {
      out << kw << ' ' << r.name << '(';
      for (std::size_t i = 0; i < r.attributes.size(); ++i) out << (i ? "," : "") << r.attributes[i];
      out << ").\n";
    }
  };
  decls("SOURCE", sc.source);
  decls("TARGET", sc.target);
  for (const auto& tgd : sc.tgds) {
    out << "TGD " << tgd.id << ": ";
    for (std::size_t i = 0; i < tgd.body.size(); ++i) out << (i ? ", " : "") << format_atom(tgd, tgd.body[i]);
    out << " -> ";
    for (std::size_t i = 0; i < tgd.head.size(); ++i) out << (i ? ", " : "") << format_atom(tgd, tgd.head[i]);
    out << ".\n";
  }
  for (const auto& fd : sc.fds) {
    out << "FD " << fd.id << ": " << fd.relation << '[';
    for (std::size_t i = 0; i < fd.lhs.size(); ++i) out << (i ? "," : "") << fd.lhs[i] + 1;
    out << "] -> [";
    for (std::size_t i = 0; i < fd.rhs.size(); ++i) out << (i ? "," : "") << fd.rhs[i] + 1;
    out << "].\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// CSV

namespace csv {

struct Cell {
  std::string text;
  bool quoted = false;
};

/// Splits RFC-4180 style text (comma separator, `"` quoting with `""`
/// escapes, LF or CRLF record ends) into records.
inline std::vector<std::vector<Cell>> parse(std::string_view text, const std::string& origin = "csv") {
  std::vector<std::vector<Cell>> rows;
  std::vector<Cell> row;
  Cell cell;
  bool in_quotes = false, any = false;
  std::size_t line = 1;
  auto end_cell = [&] {
    row.push_back(std::move(cell));
    cell = Cell{};
  };
  auto end_row = [&] {
    end_cell();
    rows.push_back(std::move(row));
    row.clear();
    any = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell.text += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        cell.text += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!cell.text.empty()) throw Error(origin + ":" + std::to_string(line) + ": stray quote inside cell");
        in_quotes = true;
        cell.quoted = true;
        any = true;
        break;
      case ',':
        end_cell();
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        if (any || !row.empty()) end_row();
        ++line;
        break;
      default:
        cell.text += c;
        any = true;
    }
  }
  if (in_quotes) throw Error(origin + ": unterminated quoted cell");
  if (any || !row.empty()) end_row();
  return rows;
}

inline bool looks_like_int(std::string_view s) {
  std::size_t i = (!s.empty() && s[0] == '-') ? 1 : 0;
  if (i >= s.size()) return false;
  for (; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

inline bool looks_like_null(std::string_view s) {
  if (s.size() < 4 || s.substr(0, 3) != "_:N") return false;
  for (std::size_t i = 3; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

/// Unquoted integer-looking cells are integers, unquoted `_:N<k>` cells are
/// nulls, everything else is a string.
inline Value to_value(const Cell& c) {
  if (!c.quoted) {
    if (looks_like_int(c.text)) {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(c.text.data(), c.text.data() + c.text.size(), v);
      if (ec == std::errc{} && p == c.text.data() + c.text.size()) return Value::integer(v);
    }
    if (looks_like_null(c.text)) return Value::null(std::stoull(c.text.substr(3)));
  }
  return Value::string(c.text);
}

inline std::string render(const Value& v) {
  if (!v.is_string()) return v.to_string();
  const auto s = v.as_string();
  const bool needs_quotes = s.empty() || looks_like_int(s) || looks_like_null(s) ||
                            s.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs_quotes) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace csv

struct LoadOptions {
  bool allow_nulls = false;  // source instances are constant-only
  std::function<void(const std::string&)> warn;
};

/// Loads `<relation>.csv` for every relation of `schema` from `directory`.
/// A missing file is an empty relation (reported through `warn`).
inline Instance load_instance(const std::filesystem::path& directory, const Schema& schema, const LoadOptions& opts = {}) {
  Instance inst(schema);
  for (std::uint32_t r = 0; r < schema.size(); ++r) {
    const auto& decl = schema.relation(r);
    const auto path = directory / (decl.name + ".csv");
    if (!std::filesystem::exists(path)) {
      if (opts.warn) opts.warn("no file for relation '" + decl.name + "' in " + directory.string() + "; treated as empty");
      continue;
    }
    const auto rows = csv::parse(read_file(path), path.string());
    if (rows.empty()) throw Error(path.string() + ": missing header row");
    if (rows[0].size() != decl.arity())
      throw Error(path.string() + ": header has " + std::to_string(rows[0].size()) + " columns, relation '" +
                  decl.name + "' has arity " + std::to_string(decl.arity()));
    inst.reserve(r, rows.size());
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].size() != decl.arity())
        throw Error(path.string() + ": row " + std::to_string(i + 1) + " has " + std::to_string(rows[i].size()) +
                    " columns, expected " + std::to_string(decl.arity()));
      Tuple t;
      t.reserve(rows[i].size());
      for (const auto& cell : rows[i]) {
        t.push_back(csv::to_value(cell));
        if (t.back().is_null() && !opts.allow_nulls)
          throw Error(path.string() + ": row " + std::to_string(i + 1) + ": null '" + cell.text +
                      "' in a constant-only instance");
      }
      inst.insert(r, std::move(t));
    }
  }
  return inst;
}

/// Builds a schema from the CSV files of a directory: one relation per
/// `<name>.csv`, attributes from the header row.
inline Schema infer_schema(const std::filesystem::path& directory) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(directory))
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  Schema schema;
  for (const auto& f : files) {
    const auto rows = csv::parse(read_file(f), f.string());
    if (rows.empty()) throw Error(f.string() + ": missing header row");
    RelationDecl decl{f.stem().string(), {}};
    for (const auto& c : rows[0]) decl.attributes.push_back(c.text);
    schema.add(std::move(decl));
  }
  return schema;
}

inline std::string to_csv(const Instance& inst, std::uint32_t rel) {
  const auto& decl = inst.schema().relation(rel);
  std::string out;
  for (std::size_t i = 0; i < decl.attributes.size(); ++i) {
    if (i) out += ',';
    out += csv::render(Value::string(decl.attributes[i]));
  }
  out += '\n';
  for (const auto& row : inst.sorted_rows(rel)) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += csv::render(row[i]);
    }
    out += '\n';
  }
  return out;
}

/// Writes one `<relation>.csv` per relation, rows sorted.
inline void serialize_solution(const Instance& inst, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  for (std::uint32_t r = 0; r < inst.relation_count(); ++r) {
    const auto path = directory / (inst.schema().relation(r).name + ".csv");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << to_csv(inst, r);
    if (!out) throw Error("write failed for '" + path.string() + "'");
  }
}

}  // namespace satchase
