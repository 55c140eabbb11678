// Typing environments, judgment forms and derivation trees. Every Yes
// answer of the checker carries a derivation whose nodes name the declarative
// rules, so traces can be replayed against the rule forms independently.

#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pdot/syntax.hpp"

namespace pdot {

// ---------------------------------------------------------------------------
// Typing environment: ordered name -> type bindings, extended functionally.

struct Env;
using EnvRef = std::shared_ptr<const Env>;

struct Env {
  std::vector<std::pair<std::string, TypeRef>> items;

  static EnvRef empty() { return std::make_shared<const Env>(); }

  EnvRef extended(std::string name, TypeRef type) const {
    Env e = *this;
    e.items.emplace_back(std::move(name), std::move(type));
    return std::make_shared<const Env>(std::move(e));
  }

  const TypeRef* lookup(const std::string& name) const {
    for (size_t i = items.size(); i-- > 0;)
      if (items[i].first == name) return &items[i].second;
    return nullptr;
  }

  bool contains(const std::string& name) const { return lookup(name) != nullptr; }

  // Deterministic fresh name: the hint itself, then hint$1, hint$2, ...
  std::string fresh(const std::string& hint,
                    const std::set<std::string>& avoid = {}) const {
    std::string base = hint.empty() ? "x" : hint;
    if (!contains(base) && !avoid.count(base)) return base;
    for (int i = 1;; ++i) {
      std::string cand = base + "$" + std::to_string(i);
      if (!contains(cand) && !avoid.count(cand)) return cand;
    }
  }
};

inline bool equal(const EnvRef& a, const EnvRef& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->items.size() != b->items.size()) return false;
  for (size_t i = 0; i < a->items.size(); ++i) {
    if (a->items[i].first != b->items[i].first) return false;
    if (!equal(a->items[i].second, b->items[i].second)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Rules of the declarative system (term typing, definition typing,
// subtyping), plus the two auxiliary premise forms they mention.

enum class Rule {
  // term typing
  Var, AllI, AllE, ObjI, FldE, FldI, Let, SnglTrans, SnglE, RecI, RecE, AndI, Sub,
  // definition typing
  DefTyp, DefAll, DefNew, DefPath, AndDefI,
  // typeable paths
  Wf,
  // subtyping
  Top, Bot, Refl, Trans, And1Sub, And2Sub, SubAnd, FldSubFld, TypSubTyp,
  SubSel, SelSub, SnglPqSub, SnglQpSub, AllSubAll,
  // auxiliary premises
  TightBoundsOk, ReplStep,
};

inline const char* rule_name(Rule r) {
  switch (r) {
    case Rule::Var: return "Var";
    case Rule::AllI: return "All-I";
    case Rule::AllE: return "All-E";
    case Rule::ObjI: return "{}-I";
    case Rule::FldE: return "Fld-E";
    case Rule::FldI: return "Fld-I";
    case Rule::Let: return "Let";
    case Rule::SnglTrans: return "Sngl-Trans";
    case Rule::SnglE: return "Sngl-E";
    case Rule::RecI: return "Rec-I";
    case Rule::RecE: return "Rec-E";
    case Rule::AndI: return "&-I";
    case Rule::Sub: return "Sub";
    case Rule::DefTyp: return "Def-Typ";
    case Rule::DefAll: return "Def-All";
    case Rule::DefNew: return "Def-New";
    case Rule::DefPath: return "Def-Path";
    case Rule::AndDefI: return "AndDef-I";
    case Rule::Wf: return "Wf";
    case Rule::Top: return "Top";
    case Rule::Bot: return "Bot";
    case Rule::Refl: return "Refl";
    case Rule::Trans: return "Trans";
    case Rule::And1Sub: return "And1-<:";
    case Rule::And2Sub: return "And2-<:";
    case Rule::SubAnd: return "<:-And";
    case Rule::FldSubFld: return "Fld-<:-Fld";
    case Rule::TypSubTyp: return "Typ-<:-Typ";
    case Rule::SubSel: return "<:-Sel";
    case Rule::SelSub: return "Sel-<:";
    case Rule::SnglPqSub: return "Sngl-pq-<:";
    case Rule::SnglQpSub: return "Sngl-qp-<:";
    case Rule::AllSubAll: return "All-<:-All";
    case Rule::TightBoundsOk: return "tight-bounds";
    case Rule::ReplStep: return "repl";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Judgments. One struct covers all forms; `kind` says which fields matter.

struct Judgment {
  enum class Kind {
    Typing,       // env |- term : type
    Subtyping,    // env |- lhs <: rhs
    DefTyping,    // env ; path_a |- defs : type
    Typeable,     // env |- path_a
    TightBounds,  // tight_bounds(type)
    Replace,      // repl path_a path_b lhs = rhs
  };

  Kind kind;
  EnvRef env;
  TermRef term;
  TypeRef type;
  TypeRef lhs, rhs;
  Path path_a, path_b;
  DefList defs;

  static Judgment typing(EnvRef e, TermRef t, TypeRef ty) {
    Judgment j{Kind::Typing};
    j.env = std::move(e);
    j.term = std::move(t);
    j.type = std::move(ty);
    return j;
  }
  static Judgment path_typing(EnvRef e, const Path& p, TypeRef ty) {
    return typing(std::move(e), Term::path(p), std::move(ty));
  }
  static Judgment subtyping(EnvRef e, TypeRef s, TypeRef t) {
    Judgment j{Kind::Subtyping};
    j.env = std::move(e);
    j.lhs = std::move(s);
    j.rhs = std::move(t);
    return j;
  }
  static Judgment def_typing(EnvRef e, Path identity, DefList ds, TypeRef ty) {
    Judgment j{Kind::DefTyping};
    j.env = std::move(e);
    j.path_a = std::move(identity);
    j.defs = std::move(ds);
    j.type = std::move(ty);
    return j;
  }
  static Judgment typeable(EnvRef e, Path p) {
    Judgment j{Kind::Typeable};
    j.env = std::move(e);
    j.path_a = std::move(p);
    return j;
  }
  static Judgment tight(TypeRef t) {
    Judgment j{Kind::TightBounds};
    j.type = std::move(t);
    return j;
  }
  static Judgment replace(Path p, Path q, TypeRef from, TypeRef to) {
    Judgment j{Kind::Replace};
    j.path_a = std::move(p);
    j.path_b = std::move(q);
    j.lhs = std::move(from);
    j.rhs = std::move(to);
    return j;
  }
};

struct Derivation;
using DerivRef = std::shared_ptr<const Derivation>;

struct Derivation {
  Rule rule;
  Judgment conclusion;
  std::vector<DerivRef> premises;
};

inline DerivRef derive(Rule r, Judgment concl, std::vector<DerivRef> prems = {}) {
  return std::make_shared<const Derivation>(
      Derivation{r, std::move(concl), std::move(prems)});
}

inline size_t derivation_size(const DerivRef& d) {
  size_t n = 1;
  for (const auto& p : d->premises) n += derivation_size(p);
  return n;
}

// Collect the rule names used in a derivation, outermost first.
inline void rule_trace(const DerivRef& d, std::vector<std::string>& out) {
  out.push_back(rule_name(d->rule));
  for (const auto& p : d->premises) rule_trace(p, out);
}

}  // namespace pdot
