// Core abstract syntax: paths, types, terms, values and member definitions,
// with locally nameless binding (free names + de Bruijn indices for binder
// slots), opening/closing, name substitution and path replacement.
//
// All nodes are immutable after construction and shared via shared_ptr, so
// every operation below is a pure function that builds fresh nodes.

#pragma once

#include <algorithm>
#include <cassert>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace pdot {

// ---------------------------------------------------------------------------
// Variables and paths

// A variable is either a free name or a de Bruijn index counting binders
// between the occurrence and the binder that introduces it.
struct Var {
  int bound = -1;    // >= 0 when this is a bound occurrence
  std::string name;  // meaningful only when bound < 0

  static Var free(std::string n) { return Var{-1, std::move(n)}; }
  static Var index(int k) { return Var{k, {}}; }
  bool is_bound() const { return bound >= 0; }
};

inline bool operator==(const Var& a, const Var& b) {
  if (a.is_bound() != b.is_bound()) return false;
  return a.is_bound() ? a.bound == b.bound : a.name == b.name;
}

// A path is a root variable followed by zero or more field selections.
struct Path {
  Var root;
  std::vector<std::string> fields;

  static Path var(std::string n) { return Path{Var::free(std::move(n)), {}}; }
  static Path idx(int k) { return Path{Var::index(k), {}}; }

  Path sel(const std::string& a) const {
    Path p = *this;
    p.fields.push_back(a);
    return p;
  }
};

inline bool operator==(const Path& a, const Path& b) {
  return a.root == b.root && a.fields == b.fields;
}
inline bool operator!=(const Path& a, const Path& b) { return !(a == b); }
inline bool operator<(const Path& a, const Path& b) {
  if (a.root.is_bound() != b.root.is_bound()) return b.root.is_bound();
  if (a.root.is_bound()) {
    if (a.root.bound != b.root.bound) return a.root.bound < b.root.bound;
  } else if (a.root.name != b.root.name) {
    return a.root.name < b.root.name;
  }
  return a.fields < b.fields;
}

// If q = p.b1...bn for a (possibly empty) suffix, rewrite the prefix p to r.
// This is the path case of the replacement operation.
inline std::optional<Path> replace_prefix(const Path& p, const Path& r,
                                          const Path& q) {
  if (!(q.root == p.root)) return std::nullopt;
  if (q.fields.size() < p.fields.size()) return std::nullopt;
  if (!std::equal(p.fields.begin(), p.fields.end(), q.fields.begin()))
    return std::nullopt;
  Path out = r;
  out.fields.insert(out.fields.end(), q.fields.begin() + p.fields.size(),
                    q.fields.end());
  return out;
}

inline bool has_prefix(const Path& p, const Path& q) {
  return replace_prefix(p, p, q).has_value();
}

// ---------------------------------------------------------------------------
// Types

struct Type;
using TypeRef = std::shared_ptr<const Type>;

enum class TypeKind {
  Top,      // top type
  Bot,      // bottom type
  Fld,      // field declaration {a: T}
  TypDecl,  // type member declaration {A: S..U}
  Sel,      // type projection p.A
  Sngl,     // singleton type p.type
  And,      // intersection
  Rec,      // recursive type mu(x) T, one bound self slot
  All,      // dependent function type all(x: S) T, one bound slot in T
};

struct Type {
  TypeKind kind;
  std::string label;   // Fld / TypDecl / Sel
  Path path;           // Sel / Sngl
  TypeRef lhs, rhs;    // And: both; TypDecl: lower/upper; Fld: rhs member;
                       // All: lhs param, rhs body; Rec: rhs body
  std::string binder;  // Rec / All name hint, ignored by equality

  static TypeRef top() { return mk({TypeKind::Top}); }
  static TypeRef bot() { return mk({TypeKind::Bot}); }
  static TypeRef fld(std::string a, TypeRef t) {
    return mk({TypeKind::Fld, std::move(a), {}, nullptr, std::move(t)});
  }
  static TypeRef typ(std::string A, TypeRef lo, TypeRef hi) {
    return mk({TypeKind::TypDecl, std::move(A), {}, std::move(lo), std::move(hi)});
  }
  static TypeRef sel(Path p, std::string A) {
    return mk({TypeKind::Sel, std::move(A), std::move(p)});
  }
  static TypeRef sngl(Path p) { return mk({TypeKind::Sngl, {}, std::move(p)}); }
  static TypeRef and_(TypeRef l, TypeRef r) {
    return mk({TypeKind::And, {}, {}, std::move(l), std::move(r)});
  }
  static TypeRef rec(std::string x, TypeRef body) {
    return mk({TypeKind::Rec, {}, {}, nullptr, std::move(body), std::move(x)});
  }
  static TypeRef all(std::string x, TypeRef param, TypeRef body) {
    return mk({TypeKind::All, {}, {}, std::move(param), std::move(body),
               std::move(x)});
  }

 private:
  static TypeRef mk(Type t) { return std::make_shared<const Type>(std::move(t)); }
};

// ---------------------------------------------------------------------------
// Terms, values and definitions

struct Term;
struct Value;
using TermRef = std::shared_ptr<const Term>;
using ValueRef = std::shared_ptr<const Value>;

// A stable term is a path or a value: the only legal field initializers.
struct Stable {
  bool is_path = true;
  Path path;
  ValueRef val;

  static Stable of_path(Path p) { return Stable{true, std::move(p), nullptr}; }
  static Stable of_value(ValueRef v);
};

struct Def {
  bool is_type = false;  // type member definition {A = T} vs field {a = s}
  std::string label;
  TypeRef type;  // type definition payload
  Stable init;   // field definition payload
  int line = 0, col = 0;

  static Def type_def(std::string A, TypeRef t) {
    return Def{true, std::move(A), std::move(t), {}};
  }
  static Def field_def(std::string a, Stable s) {
    return Def{false, std::move(a), nullptr, std::move(s)};
  }
};

using DefList = std::vector<Def>;

enum class TermKind { Stable, App, Let };

struct Term {
  TermKind kind;
  Stable stable;       // Stable
  Path fn, arg;        // App
  TermRef bound, body; // Let, body has one bound slot
  std::string binder;  // Let name hint
  int line = 0, col = 0;

  static TermRef path(Path p) {
    return mk({TermKind::Stable, Stable::of_path(std::move(p))});
  }
  static TermRef value(ValueRef v) {
    return mk({TermKind::Stable, Stable::of_value(std::move(v))});
  }
  static TermRef app(Path f, Path a) {
    return mk({TermKind::App, {}, std::move(f), std::move(a)});
  }
  static TermRef let(std::string x, TermRef t, TermRef u) {
    return mk({TermKind::Let, {}, {}, {}, std::move(t), std::move(u),
               std::move(x)});
  }

 private:
  static TermRef mk(Term t) { return std::make_shared<const Term>(std::move(t)); }
};

enum class ValueKind { Lambda, Object };

struct Value {
  ValueKind kind;
  TypeRef type;        // Lambda: parameter type; Object: self type (bound slot)
  TermRef body;        // Lambda body, one bound slot
  DefList defs;        // Object definitions, each with one bound self slot
  std::string binder;  // name hint for the bound variable
  int line = 0, col = 0;

  static ValueRef lambda(std::string x, TypeRef param, TermRef body) {
    return mk({ValueKind::Lambda, std::move(param), std::move(body), {},
               std::move(x)});
  }
  static ValueRef object(std::string x, TypeRef self_type, DefList defs) {
    return mk({ValueKind::Object, std::move(self_type), nullptr,
               std::move(defs), std::move(x)});
  }

 private:
  static ValueRef mk(Value v) { return std::make_shared<const Value>(std::move(v)); }
};

inline Stable Stable::of_value(ValueRef v) {
  return Stable{false, {}, std::move(v)};
}

// Rebuilt nodes keep the source position of the node they replace, so
// diagnostics survive opening and substitution.
template <class T>
std::shared_ptr<const T> keep_pos(std::shared_ptr<const T> fresh, const T& original) {
  auto* m = const_cast<T*>(fresh.get());
  m->line = original.line;
  m->col = original.col;
  return fresh;
}

// ---------------------------------------------------------------------------
// Structural equality and ordering (binder hints ignored: alpha-equivalence
// is plain equality in the locally nameless representation)

bool equal(const TypeRef& a, const TypeRef& b);
bool equal(const TermRef& a, const TermRef& b);
bool equal(const ValueRef& a, const ValueRef& b);

inline bool equal(const Stable& a, const Stable& b) {
  if (a.is_path != b.is_path) return false;
  return a.is_path ? a.path == b.path : equal(a.val, b.val);
}

inline bool equal(const Def& a, const Def& b) {
  if (a.is_type != b.is_type || a.label != b.label) return false;
  return a.is_type ? equal(a.type, b.type) : equal(a.init, b.init);
}

inline bool equal(const DefList& a, const DefList& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!equal(a[i], b[i])) return false;
  return true;
}

inline bool equal(const TypeRef& a, const TypeRef& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case TypeKind::Top:
    case TypeKind::Bot: return true;
    case TypeKind::Fld: return a->label == b->label && equal(a->rhs, b->rhs);
    case TypeKind::TypDecl:
      return a->label == b->label && equal(a->lhs, b->lhs) && equal(a->rhs, b->rhs);
    case TypeKind::Sel: return a->label == b->label && a->path == b->path;
    case TypeKind::Sngl: return a->path == b->path;
    case TypeKind::And: return equal(a->lhs, b->lhs) && equal(a->rhs, b->rhs);
    case TypeKind::Rec: return equal(a->rhs, b->rhs);
    case TypeKind::All: return equal(a->lhs, b->lhs) && equal(a->rhs, b->rhs);
  }
  return false;
}

inline bool equal(const ValueRef& a, const ValueRef& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  if (!equal(a->type, b->type)) return false;
  if (a->kind == ValueKind::Lambda) return equal(a->body, b->body);
  return equal(a->defs, b->defs);
}

inline bool equal(const TermRef& a, const TermRef& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case TermKind::Stable: return equal(a->stable, b->stable);
    case TermKind::App: return a->fn == b->fn && a->arg == b->arg;
    case TermKind::Let: return equal(a->bound, b->bound) && equal(a->body, b->body);
  }
  return false;
}

// Total order on types, used for canonical ordering of candidate sets.
int compare(const TypeRef& a, const TypeRef& b);

inline int compare(const Path& a, const Path& b) {
  if (a == b) return 0;
  return a < b ? -1 : 1;
}

inline int compare(const TypeRef& a, const TypeRef& b) {
  if (a == b) return 0;
  if (!a) return -1;
  if (!b) return 1;
  if (a->kind != b->kind)
    return static_cast<int>(a->kind) < static_cast<int>(b->kind) ? -1 : 1;
  auto chain = [](std::initializer_list<int> cs) {
    for (int c : cs)
      if (c != 0) return c;
    return 0;
  };
  int lab = a->label.compare(b->label);
  switch (a->kind) {
    case TypeKind::Top:
    case TypeKind::Bot: return 0;
    case TypeKind::Fld: return chain({lab, compare(a->rhs, b->rhs)});
    case TypeKind::TypDecl:
      return chain({lab, compare(a->lhs, b->lhs), compare(a->rhs, b->rhs)});
    case TypeKind::Sel: return chain({lab, compare(a->path, b->path)});
    case TypeKind::Sngl: return compare(a->path, b->path);
    case TypeKind::And:
    case TypeKind::All:
      return chain({compare(a->lhs, b->lhs), compare(a->rhs, b->rhs)});
    case TypeKind::Rec: return compare(a->rhs, b->rhs);
  }
  return 0;
}

struct TypeLess {
  bool operator()(const TypeRef& a, const TypeRef& b) const {
    return compare(a, b) < 0;
  }
};

// ---------------------------------------------------------------------------
// Opening: replace bound index k (at the right level) by a path.
//
// The bound occurrence may itself carry a field suffix, so opening x#0.a.b
// with p yields p.a.b.

namespace detail {

inline Path open_path(const Path& q, int k, const Path& p) {
  if (!q.root.is_bound() || q.root.bound != k) return q;
  Path out = p;
  out.fields.insert(out.fields.end(), q.fields.begin(), q.fields.end());
  return out;
}

TypeRef open_type(const TypeRef& t, int k, const Path& p);
TermRef open_term(const TermRef& t, int k, const Path& p);
ValueRef open_value(const ValueRef& v, int k, const Path& p);

inline Stable open_stable(const Stable& s, int k, const Path& p) {
  if (s.is_path) return Stable::of_path(open_path(s.path, k, p));
  return Stable::of_value(open_value(s.val, k, p));
}

inline DefList open_defs(const DefList& ds, int k, const Path& p) {
  DefList out;
  out.reserve(ds.size());
  for (const Def& d : ds) {
    Def nd = d.is_type ? Def::type_def(d.label, open_type(d.type, k, p))
                       : Def::field_def(d.label, open_stable(d.init, k, p));
    nd.line = d.line;
    nd.col = d.col;
    out.push_back(std::move(nd));
  }
  return out;
}

inline TypeRef open_type(const TypeRef& t, int k, const Path& p) {
  if (!t) return t;
  switch (t->kind) {
    case TypeKind::Top:
    case TypeKind::Bot: return t;
    case TypeKind::Fld: return Type::fld(t->label, open_type(t->rhs, k, p));
    case TypeKind::TypDecl:
      return Type::typ(t->label, open_type(t->lhs, k, p), open_type(t->rhs, k, p));
    case TypeKind::Sel: return Type::sel(open_path(t->path, k, p), t->label);
    case TypeKind::Sngl: return Type::sngl(open_path(t->path, k, p));
    case TypeKind::And:
      return Type::and_(open_type(t->lhs, k, p), open_type(t->rhs, k, p));
    case TypeKind::Rec: return Type::rec(t->binder, open_type(t->rhs, k + 1, p));
    case TypeKind::All:
      return Type::all(t->binder, open_type(t->lhs, k, p),
                       open_type(t->rhs, k + 1, p));
  }
  return t;
}

inline ValueRef open_value(const ValueRef& v, int k, const Path& p) {
  if (v->kind == ValueKind::Lambda)
    return keep_pos(Value::lambda(v->binder, open_type(v->type, k, p),
                                  open_term(v->body, k + 1, p)),
                    *v);
  return keep_pos(Value::object(v->binder, open_type(v->type, k + 1, p),
                                open_defs(v->defs, k + 1, p)),
                  *v);
}

inline TermRef open_term(const TermRef& t, int k, const Path& p) {
  switch (t->kind) {
    case TermKind::Stable:
      if (t->stable.is_path)
        return keep_pos(Term::path(open_path(t->stable.path, k, p)), *t);
      return keep_pos(Term::value(open_value(t->stable.val, k, p)), *t);
    case TermKind::App:
      return keep_pos(Term::app(open_path(t->fn, k, p), open_path(t->arg, k, p)),
                      *t);
    case TermKind::Let:
      return keep_pos(Term::let(t->binder, open_term(t->bound, k, p),
                                open_term(t->body, k + 1, p)),
                      *t);
  }
  return t;
}

}  // namespace detail

// Open the outermost bound slot of a binder body with a path.
inline TypeRef open_with_path(const TypeRef& body, const Path& p) {
  return detail::open_type(body, 0, p);
}
inline TermRef open_with_path(const TermRef& body, const Path& p) {
  return detail::open_term(body, 0, p);
}
inline DefList open_with_path(const DefList& body, const Path& p) {
  return detail::open_defs(body, 0, p);
}

// ---------------------------------------------------------------------------
// Closing: turn free occurrences of a name into bound index k. Inverse of
// opening with that name; the parser uses it to resolve binders.

namespace detail {

inline Path close_path(const Path& q, const std::string& x, int k) {
  if (q.root.is_bound() || q.root.name != x) return q;
  Path out = Path::idx(k);
  out.fields = q.fields;
  return out;
}

TypeRef close_type(const TypeRef& t, const std::string& x, int k);
TermRef close_term(const TermRef& t, const std::string& x, int k);

inline ValueRef close_value(const ValueRef& v, const std::string& x, int k) {
  if (v->kind == ValueKind::Lambda)
    return keep_pos(Value::lambda(v->binder, close_type(v->type, x, k),
                                  close_term(v->body, x, k + 1)),
                    *v);
  DefList ds;
  for (const Def& d : v->defs) {
    Def nd = d.is_type
                 ? Def::type_def(d.label, close_type(d.type, x, k + 1))
                 : (d.init.is_path
                        ? Def::field_def(d.label, Stable::of_path(close_path(
                                                      d.init.path, x, k + 1)))
                        : Def::field_def(d.label, Stable::of_value(close_value(
                                                      d.init.val, x, k + 1))));
    nd.line = d.line;
    nd.col = d.col;
    ds.push_back(std::move(nd));
  }
  return keep_pos(Value::object(v->binder, close_type(v->type, x, k + 1),
                                std::move(ds)),
                  *v);
}

inline TypeRef close_type(const TypeRef& t, const std::string& x, int k) {
  if (!t) return t;
  switch (t->kind) {
    case TypeKind::Top:
    case TypeKind::Bot: return t;
    case TypeKind::Fld: return Type::fld(t->label, close_type(t->rhs, x, k));
    case TypeKind::TypDecl:
      return Type::typ(t->label, close_type(t->lhs, x, k), close_type(t->rhs, x, k));
    case TypeKind::Sel: return Type::sel(close_path(t->path, x, k), t->label);
    case TypeKind::Sngl: return Type::sngl(close_path(t->path, x, k));
    case TypeKind::And:
      return Type::and_(close_type(t->lhs, x, k), close_type(t->rhs, x, k));
    case TypeKind::Rec: return Type::rec(t->binder, close_type(t->rhs, x, k + 1));
    case TypeKind::All:
      return Type::all(t->binder, close_type(t->lhs, x, k),
                       close_type(t->rhs, x, k + 1));
  }
  return t;
}

inline TermRef close_term(const TermRef& t, const std::string& x, int k) {
  switch (t->kind) {
    case TermKind::Stable:
      if (t->stable.is_path)
        return keep_pos(Term::path(close_path(t->stable.path, x, k)), *t);
      return keep_pos(Term::value(close_value(t->stable.val, x, k)), *t);
    case TermKind::App:
      return keep_pos(Term::app(close_path(t->fn, x, k), close_path(t->arg, x, k)),
                      *t);
    case TermKind::Let:
      return keep_pos(Term::let(t->binder, close_term(t->bound, x, k),
                                close_term(t->body, x, k + 1)),
                      *t);
  }
  return t;
}

}  // namespace detail

inline TypeRef close_over(const std::string& x, const TypeRef& t) {
  return detail::close_type(t, x, 0);
}
inline TermRef close_over(const std::string& x, const TermRef& t) {
  return detail::close_term(t, x, 0);
}

// ---------------------------------------------------------------------------
// Name substitution: rewrite every path rooted at free name x so that the
// root becomes p, keeping the field suffix. Used by Let-Path reduction and
// by Def-New's self replacement.

namespace detail {

inline Path subst_path(const Path& q, const std::string& x, const Path& p) {
  if (q.root.is_bound() || q.root.name != x) return q;
  Path out = p;
  out.fields.insert(out.fields.end(), q.fields.begin(), q.fields.end());
  return out;
}

}  // namespace detail

TypeRef subst_name(const std::string& x, const Path& p, const TypeRef& t);
TermRef subst_name(const std::string& x, const Path& p, const TermRef& t);
ValueRef subst_name(const std::string& x, const Path& p, const ValueRef& v);

inline Path subst_name(const std::string& x, const Path& p, const Path& q) {
  return detail::subst_path(q, x, p);
}

inline Stable subst_name(const std::string& x, const Path& p, const Stable& s) {
  if (s.is_path) return Stable::of_path(detail::subst_path(s.path, x, p));
  return Stable::of_value(subst_name(x, p, s.val));
}

inline DefList subst_name(const std::string& x, const Path& p, const DefList& ds) {
  DefList out;
  out.reserve(ds.size());
  for (const Def& d : ds) {
    Def nd = d.is_type ? Def::type_def(d.label, subst_name(x, p, d.type))
                       : Def::field_def(d.label, subst_name(x, p, d.init));
    nd.line = d.line;
    nd.col = d.col;
    out.push_back(std::move(nd));
  }
  return out;
}

inline TypeRef subst_name(const std::string& x, const Path& p, const TypeRef& t) {
  if (!t) return t;
  switch (t->kind) {
    case TypeKind::Top:
    case TypeKind::Bot: return t;
    case TypeKind::Fld: return Type::fld(t->label, subst_name(x, p, t->rhs));
    case TypeKind::TypDecl:
      return Type::typ(t->label, subst_name(x, p, t->lhs), subst_name(x, p, t->rhs));
    case TypeKind::Sel:
      return Type::sel(detail::subst_path(t->path, x, p), t->label);
    case TypeKind::Sngl: return Type::sngl(detail::subst_path(t->path, x, p));
    case TypeKind::And:
      return Type::and_(subst_name(x, p, t->lhs), subst_name(x, p, t->rhs));
    case TypeKind::Rec: return Type::rec(t->binder, subst_name(x, p, t->rhs));
    case TypeKind::All:
      return Type::all(t->binder, subst_name(x, p, t->lhs), subst_name(x, p, t->rhs));
  }
  return t;
}

inline ValueRef subst_name(const std::string& x, const Path& p, const ValueRef& v) {
  if (v->kind == ValueKind::Lambda)
    return keep_pos(Value::lambda(v->binder, subst_name(x, p, v->type),
                                  subst_name(x, p, v->body)),
                    *v);
  return keep_pos(Value::object(v->binder, subst_name(x, p, v->type),
                                subst_name(x, p, v->defs)),
                  *v);
}

inline TermRef subst_name(const std::string& x, const Path& p, const TermRef& t) {
  switch (t->kind) {
    case TermKind::Stable:
      if (t->stable.is_path)
        return keep_pos(Term::path(detail::subst_path(t->stable.path, x, p)), *t);
      return keep_pos(Term::value(subst_name(x, p, t->stable.val)), *t);
    case TermKind::App:
      return keep_pos(Term::app(detail::subst_path(t->fn, x, p),
                                detail::subst_path(t->arg, x, p)),
                      *t);
    case TermKind::Let:
      return keep_pos(Term::let(t->binder, subst_name(x, p, t->bound),
                                subst_name(x, p, t->body)),
                      *t);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Free names

namespace detail {

inline void free_names_path(const Path& p, std::set<std::string>& out) {
  if (!p.root.is_bound()) out.insert(p.root.name);
}

void free_names_type(const TypeRef& t, std::set<std::string>& out);
void free_names_term(const TermRef& t, std::set<std::string>& out);

inline void free_names_value(const ValueRef& v, std::set<std::string>& out) {
  free_names_type(v->type, out);
  if (v->kind == ValueKind::Lambda) {
    free_names_term(v->body, out);
    return;
  }
  for (const Def& d : v->defs) {
    if (d.is_type)
      free_names_type(d.type, out);
    else if (d.init.is_path)
      free_names_path(d.init.path, out);
    else
      free_names_value(d.init.val, out);
  }
}

inline void free_names_type(const TypeRef& t, std::set<std::string>& out) {
  if (!t) return;
  switch (t->kind) {
    case TypeKind::Top:
    case TypeKind::Bot: return;
    case TypeKind::Fld: free_names_type(t->rhs, out); return;
    case TypeKind::TypDecl:
      free_names_type(t->lhs, out);
      free_names_type(t->rhs, out);
      return;
    case TypeKind::Sel:
    case TypeKind::Sngl: free_names_path(t->path, out); return;
    case TypeKind::And:
      free_names_type(t->lhs, out);
      free_names_type(t->rhs, out);
      return;
    case TypeKind::Rec: free_names_type(t->rhs, out); return;
    case TypeKind::All:
      free_names_type(t->lhs, out);
      free_names_type(t->rhs, out);
      return;
  }
}

inline void free_names_term(const TermRef& t, std::set<std::string>& out) {
  switch (t->kind) {
    case TermKind::Stable:
      if (t->stable.is_path)
        free_names_path(t->stable.path, out);
      else
        free_names_value(t->stable.val, out);
      return;
    case TermKind::App:
      free_names_path(t->fn, out);
      free_names_path(t->arg, out);
      return;
    case TermKind::Let:
      free_names_term(t->bound, out);
      free_names_term(t->body, out);
      return;
  }
}

}  // namespace detail

inline std::set<std::string> free_names(const TypeRef& t) {
  std::set<std::string> out;
  detail::free_names_type(t, out);
  return out;
}
inline std::set<std::string> free_names(const TermRef& t) {
  std::set<std::string> out;
  detail::free_names_term(t, out);
  return out;
}
inline std::set<std::string> free_names(const ValueRef& v) {
  std::set<std::string> out;
  detail::free_names_value(v, out);
  return out;
}
inline std::set<std::string> free_names(const Path& p) {
  std::set<std::string> out;
  detail::free_names_path(p, out);
  return out;
}

inline bool mentions(const TypeRef& t, const std::string& x) {
  return free_names(t).count(x) > 0;
}

// All paths occurring in a type, in left-to-right traversal order. Bound
// roots are included; callers filter as needed.
inline void paths_in(const TypeRef& t, std::vector<Path>& out) {
  if (!t) return;
  switch (t->kind) {
    case TypeKind::Top:
    case TypeKind::Bot: return;
    case TypeKind::Fld: paths_in(t->rhs, out); return;
    case TypeKind::TypDecl:
      paths_in(t->lhs, out);
      paths_in(t->rhs, out);
      return;
    case TypeKind::Sel:
    case TypeKind::Sngl: out.push_back(t->path); return;
    case TypeKind::And:
    case TypeKind::All:
      paths_in(t->lhs, out);
      paths_in(t->rhs, out);
      return;
    case TypeKind::Rec: paths_in(t->rhs, out); return;
  }
}

// ---------------------------------------------------------------------------
// Replacement of a path prefix in types.
//
// repl_candidates(p, q, T) is the set of types obtained by rewriting exactly
// one p-prefixed path occurrence in T to its q-prefixed counterpart; the
// relation is nondeterministic, hence the set. repl_all rewrites every
// occurrence at once and equals iterating single replacements to a fixpoint.

namespace detail {

inline void repl_candidates_rec(
    const Path& p, const Path& q, const TypeRef& t,
    const std::function<TypeRef(TypeRef)>& rebuild,
    std::vector<TypeRef>& out) {
  if (!t) return;
  switch (t->kind) {
    case TypeKind::Top:
    case TypeKind::Bot: return;
    case TypeKind::Sel:
      if (auto r = replace_prefix(p, q, t->path))
        out.push_back(rebuild(Type::sel(*r, t->label)));
      return;
    case TypeKind::Sngl:
      if (auto r = replace_prefix(p, q, t->path))
        out.push_back(rebuild(Type::sngl(*r)));
      return;
    case TypeKind::Fld:
      repl_candidates_rec(p, q, t->rhs,
                          [&](TypeRef u) { return rebuild(Type::fld(t->label, u)); },
                          out);
      return;
    case TypeKind::TypDecl:
      repl_candidates_rec(p, q, t->lhs,
                          [&](TypeRef u) {
                            return rebuild(Type::typ(t->label, u, t->rhs));
                          },
                          out);
      repl_candidates_rec(p, q, t->rhs,
                          [&](TypeRef u) {
                            return rebuild(Type::typ(t->label, t->lhs, u));
                          },
                          out);
      return;
    case TypeKind::And:
      repl_candidates_rec(p, q, t->lhs,
                          [&](TypeRef u) { return rebuild(Type::and_(u, t->rhs)); },
                          out);
      repl_candidates_rec(p, q, t->rhs,
                          [&](TypeRef u) { return rebuild(Type::and_(t->lhs, u)); },
                          out);
      return;
    case TypeKind::Rec:
      repl_candidates_rec(p, q, t->rhs,
                          [&](TypeRef u) { return rebuild(Type::rec(t->binder, u)); },
                          out);
      return;
    case TypeKind::All:
      repl_candidates_rec(p, q, t->lhs,
                          [&](TypeRef u) {
                            return rebuild(Type::all(t->binder, u, t->rhs));
                          },
                          out);
      repl_candidates_rec(p, q, t->rhs,
                          [&](TypeRef u) {
                            return rebuild(Type::all(t->binder, t->lhs, u));
                          },
                          out);
      return;
  }
}

}  // namespace detail

inline std::set<TypeRef, TypeLess> repl_candidates(const Path& p, const Path& q,
                                                   const TypeRef& t) {
  std::vector<TypeRef> results;
  detail::repl_candidates_rec(p, q, t, [](TypeRef u) { return u; }, results);
  return {results.begin(), results.end()};
}

// Rewrites every p-prefixed path to its q-prefixed counterpart. Requires
// that p is not a proper prefix of q, otherwise the corresponding fixpoint
// of single replacements would not terminate.
inline TypeRef repl_all(const Path& p, const Path& q, const TypeRef& t) {
  assert(!(p != q && has_prefix(p, q)) && "repl_all: p must not prefix q");
  if (!t) return t;
  auto on_path = [&](const Path& r) {
    if (auto s = replace_prefix(p, q, r)) return *s;
    return r;
  };
  switch (t->kind) {
    case TypeKind::Top:
    case TypeKind::Bot: return t;
    case TypeKind::Fld: return Type::fld(t->label, repl_all(p, q, t->rhs));
    case TypeKind::TypDecl:
      return Type::typ(t->label, repl_all(p, q, t->lhs), repl_all(p, q, t->rhs));
    case TypeKind::Sel: return Type::sel(on_path(t->path), t->label);
    case TypeKind::Sngl: return Type::sngl(on_path(t->path));
    case TypeKind::And:
      return Type::and_(repl_all(p, q, t->lhs), repl_all(p, q, t->rhs));
    case TypeKind::Rec: return Type::rec(t->binder, repl_all(p, q, t->rhs));
    case TypeKind::All:
      return Type::all(t->binder, repl_all(p, q, t->lhs), repl_all(p, q, t->rhs));
  }
  return t;
}

}  // namespace pdot
