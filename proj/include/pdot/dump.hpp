// Deterministic JSON rendering of the core AST. One top-level object, node
// kind as a tag field, bound occurrences as {"bound": k}, free names as
// strings. The full schema is documented in docs/ast-schema.md.

#pragma once

#include <json.hpp>

#include "pdot/syntax.hpp"

namespace pdot {

namespace detail {

using json = nlohmann::json;

inline json dump_path(const Path& p) {
  json root = p.root.is_bound() ? json{{"bound", p.root.bound}} : json(p.root.name);
  return json{{"root", root}, {"fields", p.fields}};
}

json dump_type(const TypeRef& t);
json dump_term(const TermRef& t);
json dump_value(const ValueRef& v);

inline json dump_stable(const Stable& s) {
  if (s.is_path) return json{{"path", dump_path(s.path)}};
  return dump_value(s.val);
}

inline json dump_type(const TypeRef& t) {
  switch (t->kind) {
    case TypeKind::Top: return {{"type", "Top"}};
    case TypeKind::Bot: return {{"type", "Bot"}};
    case TypeKind::Fld:
      return {{"type", "Fld"}, {"label", t->label}, {"of", dump_type(t->rhs)}};
    case TypeKind::TypDecl:
      return {{"type", "TypDecl"},
              {"label", t->label},
              {"lower", dump_type(t->lhs)},
              {"upper", dump_type(t->rhs)}};
    case TypeKind::Sel:
      return {{"type", "Sel"}, {"path", dump_path(t->path)}, {"label", t->label}};
    case TypeKind::Sngl: return {{"type", "Sngl"}, {"path", dump_path(t->path)}};
    case TypeKind::And:
      return {{"type", "And"}, {"lhs", dump_type(t->lhs)}, {"rhs", dump_type(t->rhs)}};
    case TypeKind::Rec:
      return {{"type", "Rec"}, {"binder", t->binder}, {"body", dump_type(t->rhs)}};
    case TypeKind::All:
      return {{"type", "All"},
              {"binder", t->binder},
              {"param", dump_type(t->lhs)},
              {"body", dump_type(t->rhs)}};
  }
  return {};
}

inline json dump_value(const ValueRef& v) {
  if (v->kind == ValueKind::Lambda)
    return {{"value", "lambda"},
            {"binder", v->binder},
            {"param", dump_type(v->type)},
            {"body", dump_term(v->body)}};
  json defs = json::array();
  for (const Def& d : v->defs) {
    if (d.is_type)
      defs.push_back({{"def", "type"}, {"label", d.label}, {"rhs", dump_type(d.type)}});
    else
      defs.push_back(
          {{"def", "field"}, {"label", d.label}, {"rhs", dump_stable(d.init)}});
  }
  return {{"value", "object"},
          {"binder", v->binder},
          {"selfType", dump_type(v->type)},
          {"defs", defs}};
}

inline json dump_term(const TermRef& t) {
  switch (t->kind) {
    case TermKind::Stable: return dump_stable(t->stable);
    case TermKind::App:
      return {{"term", "app"}, {"fn", dump_path(t->fn)}, {"arg", dump_path(t->arg)}};
    case TermKind::Let:
      return {{"term", "let"},
              {"let", t->binder},
              {"bound", dump_term(t->bound)},
              {"body", dump_term(t->body)}};
  }
  return {};
}

}  // namespace detail

inline std::string dump_ast(const TermRef& t) { return detail::dump_term(t).dump(2); }
inline std::string dump_ast(const TypeRef& t) { return detail::dump_type(t).dump(2); }

}  // namespace pdot
