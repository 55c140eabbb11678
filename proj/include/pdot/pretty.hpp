// Rendering of core syntax back into the concrete grammar. Binder hints are
// freshened against both the free names of the subtree and every enclosing
// binder name, so the printed program re-parses to an alpha-equivalent tree.

#pragma once

#include <set>
#include <sstream>
#include <string>

#include "pdot/syntax.hpp"

namespace pdot {

namespace detail {

inline std::string pick_name(const std::string& hint,
                             const std::set<std::string>& avoid) {
  std::string base = hint.empty() ? "x" : hint;
  if (!avoid.count(base)) return base;
  for (int i = 1;; ++i) {
    std::string cand = base + std::to_string(i);
    if (!avoid.count(cand)) return cand;
  }
}

struct Printer {
  std::set<std::string> scope;

  std::string path(const Path& p) const {
    std::string out;
    if (p.root.is_bound())
      out = "#" + std::to_string(p.root.bound);  // not reachable from closed nodes
    else
      out = p.root.name;
    for (const auto& f : p.fields) out += "." + f;
    return out;
  }

  // Rec and All are greedy on the right, so they need parentheses anywhere
  // a delimiter does not already follow; atoms never do.
  static bool type_is_atom(const TypeRef& t) {
    switch (t->kind) {
      case TypeKind::Rec:
      case TypeKind::All:
      case TypeKind::And: return false;
      default: return true;
    }
  }

  std::string type(const TypeRef& t) {
    switch (t->kind) {
      case TypeKind::Top: return "Top";
      case TypeKind::Bot: return "Bot";
      case TypeKind::Fld: return "{" + t->label + ": " + type(t->rhs) + "}";
      case TypeKind::TypDecl:
        return "{type " + t->label + ": " + type(t->lhs) + " .. " +
               type(t->rhs) + "}";
      case TypeKind::Sel: return path(t->path) + "." + t->label;
      case TypeKind::Sngl: return path(t->path) + ".type";
      case TypeKind::And: {
        // Left-associated chains print flat; any other shape keeps parens.
        std::string l = t->lhs->kind == TypeKind::And || type_is_atom(t->lhs)
                            ? type(t->lhs)
                            : "(" + type(t->lhs) + ")";
        std::string r = type_is_atom(t->rhs) ? type(t->rhs)
                                             : "(" + type(t->rhs) + ")";
        return l + " /\\ " + r;
      }
      case TypeKind::Rec: {
        auto [name, body] = open_binder_type(t->binder, t->rhs);
        return "mu(" + name + ") " + body;
      }
      case TypeKind::All: {
        std::string param = type(t->lhs);
        auto [name, body] = open_binder_type(t->binder, t->rhs);
        return "all(" + name + ": " + param + ") " + body;
      }
    }
    return "?";
  }

  std::pair<std::string, std::string> open_binder_type(const std::string& hint,
                                                       const TypeRef& body) {
    std::set<std::string> avoid = free_names(body);
    avoid.insert(scope.begin(), scope.end());
    std::string name = pick_name(hint, avoid);
    Printer inner = *this;
    inner.scope.insert(name);
    return {name, inner.type(open_with_path(body, Path::var(name)))};
  }

  std::string stable(const Stable& s) {
    return s.is_path ? path(s.path) : value(s.val);
  }

  std::string value(const ValueRef& v) {
    std::set<std::string> avoid;
    if (v->kind == ValueKind::Lambda) {
      avoid = free_names(v->body);
      avoid.insert(scope.begin(), scope.end());
      std::string name = pick_name(v->binder, avoid);
      Printer inner = *this;
      inner.scope.insert(name);
      return "lam(" + name + ": " + type(v->type) + ") " +
             inner.term(open_with_path(v->body, Path::var(name)));
    }
    avoid = free_names(v->type);
    for (const Def& d : v->defs) {
      if (d.is_type) {
        auto fs = free_names(d.type);
        avoid.insert(fs.begin(), fs.end());
      } else if (d.init.is_path) {
        auto fs = free_names(d.init.path);
        avoid.insert(fs.begin(), fs.end());
      } else {
        auto fs = free_names(d.init.val);
        avoid.insert(fs.begin(), fs.end());
      }
    }
    avoid.insert(scope.begin(), scope.end());
    std::string name = pick_name(v->binder, avoid);
    Printer inner = *this;
    inner.scope.insert(name);
    Path self = Path::var(name);
    std::string out =
        "nu(" + name + ": " + inner.type(open_with_path(v->type, self)) + ") {";
    DefList ds = open_with_path(v->defs, self);
    for (size_t i = 0; i < ds.size(); ++i) {
      if (i) out += "; ";
      if (ds[i].is_type)
        out += ds[i].label + " = " + inner.type(ds[i].type);
      else
        out += ds[i].label + " = " + inner.stable(ds[i].init);
    }
    return out + "}";
  }

  std::string term(const TermRef& t) {
    switch (t->kind) {
      case TermKind::Stable: return stable(t->stable);
      case TermKind::App: return path(t->fn) + " " + path(t->arg);
      case TermKind::Let: {
        std::set<std::string> avoid = free_names(t->body);
        avoid.insert(scope.begin(), scope.end());
        std::string name = pick_name(t->binder, avoid);
        Printer inner = *this;
        inner.scope.insert(name);
        return "let " + name + " = " + term(t->bound) + " in " +
               inner.term(open_with_path(t->body, Path::var(name)));
      }
    }
    return "?";
  }
};

}  // namespace detail

inline std::string pretty(const Path& p) { return detail::Printer{}.path(p); }
inline std::string pretty(const TypeRef& t) { return detail::Printer{}.type(t); }
inline std::string pretty(const TermRef& t) { return detail::Printer{}.term(t); }
inline std::string pretty(const ValueRef& v) { return detail::Printer{}.value(v); }
inline std::string pretty(const Stable& s) { return detail::Printer{}.stable(s); }

}  // namespace pdot
