// The algorithmic type checker: inertness and well-formedness checks,
// elimination-style path typing, singleton-chain canonicalization,
// fuel-bounded subtyping and term/definition checking.
//
// The declarative system is not syntax directed and its decidability is an
// open problem, so this checker is sound but incomplete: every Yes carries
// a replayable derivation, while a No or Unknown makes no completeness claim.
// Unknown arises only when the fuel counter reaches zero.

#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pdot/judgment.hpp"
#include "pdot/pretty.hpp"
#include "pdot/syntax.hpp"

namespace pdot {

// ---------------------------------------------------------------------------
// Three-valued results

enum class Verdict { Yes, No, Unknown };

struct Judgement {
  Verdict verdict = Verdict::No;
  DerivRef evidence;    // set when Yes
  std::string rule;     // first failing rule, when No
  std::string message;  // human reason, when No / Unknown
  int line = 0, col = 0;

  bool yes() const { return verdict == Verdict::Yes; }
  bool no() const { return verdict == Verdict::No; }
  bool unknown() const { return verdict == Verdict::Unknown; }

  static Judgement ok(DerivRef d) { return {Verdict::Yes, std::move(d), {}, {}}; }
  static Judgement fail(std::string rule, std::string msg, int line = 0,
                        int col = 0) {
    return {Verdict::No, nullptr, std::move(rule), std::move(msg), line, col};
  }
  static Judgement out_of_fuel() {
    return {Verdict::Unknown, nullptr, {}, "fuel exhausted"};
  }
};

struct Candidate {
  TypeRef type;
  DerivRef deriv;  // proves env |- subject : type
};

struct SynthResult {
  Verdict verdict = Verdict::No;
  std::vector<Candidate> candidates;  // nonempty iff Yes, most informative first
  std::string rule;
  std::string message;
  int line = 0, col = 0;

  bool yes() const { return verdict == Verdict::Yes; }
  Judgement as_judgement() const {
    if (verdict == Verdict::Yes) return Judgement::ok(candidates.front().deriv);
    return {verdict, nullptr, rule, message, line, col};
  }
};

struct PathResolution {
  bool cyclic = false;
  Path canonical;           // meaningful when !cyclic
  std::vector<Path> cycle;  // nonempty when cyclic
};

// ---------------------------------------------------------------------------
// Syntactic classifications (Fig. "tight bounds" table and inert types)

inline bool tight_bounds(const TypeRef& t) {
  switch (t->kind) {
    case TypeKind::TypDecl: return equal(t->lhs, t->rhs);
    case TypeKind::Rec:
    case TypeKind::Fld: return tight_bounds(t->rhs);
    case TypeKind::And: return tight_bounds(t->lhs) && tight_bounds(t->rhs);
    default: return true;  // function types keep arbitrary bounds
  }
}

bool inert(const TypeRef& t);

// Record types: intersections of tight type declarations, singleton fields
// and fields at inert types, with pairwise distinct labels.
inline bool record_type_labels(const TypeRef& t,
                               std::set<std::pair<bool, std::string>>& seen) {
  switch (t->kind) {
    case TypeKind::TypDecl:
      if (!equal(t->lhs, t->rhs)) return false;
      return seen.insert({true, t->label}).second;
    case TypeKind::Fld:
      if (!seen.insert({false, t->label}).second) return false;
      return t->rhs->kind == TypeKind::Sngl || inert(t->rhs);
    case TypeKind::And:
      return record_type_labels(t->lhs, seen) && record_type_labels(t->rhs, seen);
    default: return false;
  }
}

inline bool record_type(const TypeRef& t) {
  std::set<std::pair<bool, std::string>> seen;
  return record_type_labels(t, seen);
}

inline bool inert(const TypeRef& t) {
  if (t->kind == TypeKind::All) return true;
  if (t->kind == TypeKind::Rec) return record_type(t->rhs);
  return false;
}

inline bool inert_env(const Env& env) {
  for (const auto& [name, type] : env.items)
    if (!inert(type)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// The checker

class Checker {
 public:
  explicit Checker(long fuel = kDefaultFuel) : fuel_(fuel) {}

  static constexpr long kDefaultFuel = 10000;

  // -- path machinery -------------------------------------------------------

  struct PathTypes {
    std::vector<Candidate> types;  // all types of the path, best first
    std::vector<Path> chain;       // alias chain, starting at the path itself
    bool cyclic = false;
    std::vector<Path> cycle;
    std::vector<Candidate> endpoint_closure;  // direct types of chain.back()
  };

  PathTypes path_types(const EnvRef& env, const Path& p) {
    PathTypes out;
    out.chain.push_back(p);
    std::vector<DerivRef> links;  // links[i]: chain[i] : chain[i+1].type
    for (;;) {
      const Path& cur = out.chain.back();
      PathInfo info = path_info(env, cur);
      if (!info.alias) {
        out.endpoint_closure = info.closure;
        break;
      }
      auto dup = std::find(out.chain.begin(), out.chain.end(), info.alias->first);
      if (dup != out.chain.end()) {
        out.cyclic = true;
        out.cycle.assign(dup, out.chain.end());
        links.push_back(info.alias->second);
        break;
      }
      links.push_back(info.alias->second);
      out.chain.push_back(info.alias->first);
    }
    // Types of p: the singleton for each chain successor, then the endpoint's
    // direct types, all transported back to p with Sngl-Trans.
    for (size_t i = 0; i < links.size(); ++i) {
      DerivRef d = links[i];  // chain[i] : chain[i+1].type (or cycle closure)
      for (size_t j = i; j-- > 0;) {
        d = derive(Rule::SnglTrans,
                   Judgment::path_typing(env, p_at(out, j), d->conclusion.type),
                   {links[j], d});
      }
      out.types.push_back({d->conclusion.type, d});
    }
    if (!out.cyclic) {
      for (const Candidate& c : out.endpoint_closure) {
        DerivRef d = c.deriv;
        for (size_t j = links.size(); j-- > 0;) {
          d = derive(Rule::SnglTrans,
                     Judgment::path_typing(env, p_at(out, j), c.type),
                     {links[j], d});
        }
        push_unique(out.types, {c.type, d});
      }
    }
    return out;
  }

  PathResolution canonical_path(const EnvRef& env, const Path& p) {
    PathTypes pt = path_types(env, p);
    if (pt.cyclic) return {true, p, pt.cycle};
    return {false, pt.chain.back(), {}};
  }

  // Bounds of type member A reachable from p, through the canonical alias.
  struct Bounds {
    TypeRef lower, upper;
    DerivRef typing;  // env |- p : {A: lower..upper}
  };

  std::optional<Bounds> member_bounds(const EnvRef& env, const Path& p,
                                      const std::string& A) {
    PathTypes pt = path_types(env, p);
    if (pt.cyclic) return std::nullopt;  // no selection on cyclic paths
    for (const Candidate& c : pt.types) {
      if (c.type->kind == TypeKind::TypDecl && c.type->label == A)
        return Bounds{c.type->lhs, c.type->rhs, c.deriv};
    }
    return std::nullopt;
  }

  // Nonempty precise typing, i.e. the Wf premise of Def-Path and Sngl-E.
  Judgement typeable(const EnvRef& env, const Path& p) {
    if (auto guard = enter_typeable(p); !guard)
      return Judgement::fail("Wf", "path " + pretty(p) + " has no type");
    PathTypes pt = path_types(env, p);
    leave_typeable(p);
    if (pt.types.empty())
      return Judgement::fail("Wf", "path " + pretty(p) + " has no type");
    return Judgement::ok(derive(Rule::Wf, Judgment::typeable(env, p),
                                {pt.types.front().deriv}));
  }

  // -- subtyping -------------------------------------------------------------

  Judgement subtype(const EnvRef& env, const TypeRef& S, const TypeRef& T) {
    if (!spend()) return Judgement::out_of_fuel();
    if (equal(S, T))
      return Judgement::ok(derive(Rule::Refl, Judgment::subtyping(env, S, T)));
    if (T->kind == TypeKind::Top)
      return Judgement::ok(derive(Rule::Top, Judgment::subtyping(env, S, T)));
    if (S->kind == TypeKind::Bot)
      return Judgement::ok(derive(Rule::Bot, Judgment::subtyping(env, S, T)));

    for (const auto& g : subtype_goals_)
      if (equal(g.first, S) && equal(g.second, T))
        return Judgement::fail("Trans", "cyclic subtyping goal " + pretty(S) +
                                            " <: " + pretty(T));
    subtype_goals_.emplace_back(S, T);
    Judgement r = subtype_routes(env, S, T);
    subtype_goals_.pop_back();
    return r;
  }

  // -- term typing -----------------------------------------------------------

  SynthResult synth(const EnvRef& env, const TermRef& t) {
    if (!spend()) return synth_fail(Verdict::Unknown, "", "fuel exhausted", t);
    switch (t->kind) {
      case TermKind::Stable:
        if (t->stable.is_path) return synth_path(env, t->stable.path, t);
        return synth_value(env, t->stable.val);
      case TermKind::App: return synth_app(env, t);
      case TermKind::Let: return synth_let(env, t);
    }
    return synth_fail(Verdict::No, "syntax", "unreachable term form", t);
  }

  Judgement check(const EnvRef& env, const TermRef& t, const TypeRef& T) {
    if (!spend()) return Judgement::out_of_fuel();
    switch (t->kind) {
      case TermKind::Stable:
        if (t->stable.is_path) return check_path(env, t->stable.path, T, t);
        if (t->stable.val->kind == ValueKind::Lambda &&
            T->kind == TypeKind::All)
          return check_lambda(env, t->stable.val, T);
        break;
      case TermKind::Let: {
        SynthResult sb = synth(env, t->bound);
        if (!sb.yes()) return sb.as_judgement();
        const Candidate& bnd = sb.candidates.front();
        std::set<std::string> avoid = free_names(t->body);
        auto ft = free_names(T);
        avoid.insert(ft.begin(), ft.end());
        auto fb = free_names(bnd.type);
        avoid.insert(fb.begin(), fb.end());
        std::string z = env->fresh(t->binder, avoid);
        EnvRef env2 = env->extended(z, bnd.type);
        TermRef body = open_with_path(t->body, Path::var(z));
        Judgement jb = check(env2, body, T);
        if (!jb.yes()) return jb;
        return Judgement::ok(derive(Rule::Let, Judgment::typing(env, t, T),
                                    {bnd.deriv, jb.evidence}));
      }
      default: break;
    }
    SynthResult s = synth(env, t);
    if (!s.yes()) return s.as_judgement();
    Judgement best;
    for (const Candidate& c : s.candidates) {
      if (equal(c.type, T)) return Judgement::ok(c.deriv);
      Judgement js = subtype(env, c.type, T);
      if (js.yes())
        return Judgement::ok(derive(Rule::Sub, Judgment::typing(env, t, T),
                                    {c.deriv, js.evidence}));
      if (js.unknown()) best = js;
    }
    if (best.unknown()) return best;
    return Judgement::fail(
        "Sub",
        "term has type " + pretty(s.candidates.front().type) +
            " which is not a subtype of " + pretty(T),
        t->line, t->col);
  }

  // -- definition typing -----------------------------------------------------

  // identity: the path that names the object being checked; defs and T are
  // already opened with it.
  Judgement check_defs(const EnvRef& env, const Path& identity,
                       const DefList& defs, const TypeRef& T) {
    std::vector<TypeRef> decls;
    flatten_and(T, decls);
    if (decls.size() != defs.size())
      return Judgement::fail(
          "AndDef-I", "object defines " + std::to_string(defs.size()) +
                          " member(s) but its self type declares " +
                          std::to_string(decls.size()));
    std::set<std::string> labels;
    std::vector<DerivRef> leaf;
    for (size_t i = 0; i < defs.size(); ++i) {
      Judgement j = check_def(env, identity, defs[i], decls[i]);
      if (!j.yes()) return j;
      if (!labels.insert(defs[i].label).second)
        return Judgement::fail("AndDef-I",
                               "duplicate member label '" + defs[i].label + "'",
                               defs[i].line, defs[i].col);
      leaf.push_back(j.evidence);
    }
    // Rebuild the AndDef-I spine mirroring T's (left-nested) And structure.
    DerivRef acc = leaf.empty() ? nullptr : leaf[0];
    DefList accd;
    if (!defs.empty()) accd.push_back(defs[0]);
    TypeRef acct = decls.empty() ? T : decls[0];
    for (size_t i = 1; i < leaf.size(); ++i) {
      accd.push_back(defs[i]);
      acct = Type::and_(acct, decls[i]);
      acc = derive(Rule::AndDefI,
                   Judgment::def_typing(env, identity, accd, acct),
                   {acc, leaf[i]});
    }
    if (!acc)
      return Judgement::fail("AndDef-I", "object has no members");
    return Judgement::ok(acc);
  }

  // -- whole programs ---------------------------------------------------------

  struct TypecheckResult {
    bool ok = false;
    TypeRef type;
    DerivRef derivation;
    std::vector<Candidate> candidates;
    std::string rule, message;
    int line = 0, col = 0;
    bool fuel_out = false;
  };

  TypecheckResult typecheck(const TermRef& program) {
    TypecheckResult out;
    auto fns = free_names(program);
    if (!fns.empty()) {
      out.rule = "scope";
      out.message = "program is not closed: free name '" + *fns.begin() + "'";
      return out;
    }
    SynthResult s = synth(Env::empty(), program);
    if (!s.yes()) {
      out.rule = s.rule;
      out.message = s.message;
      out.line = s.line;
      out.col = s.col;
      out.fuel_out = s.verdict == Verdict::Unknown;
      if (out.fuel_out && out.message.empty()) out.message = "fuel exhausted";
      return out;
    }
    out.ok = true;
    out.type = s.candidates.front().type;
    out.derivation = s.candidates.front().deriv;
    out.candidates = s.candidates;
    return out;
  }

  // Every path mentioned in the range types of the environment must itself
  // be typeable (Progress/Preservation precondition iii).
  Judgement wf_env(const EnvRef& env) {
    for (const auto& [name, type] : env->items) {
      Judgement j = wf_type(env, type);
      if (!j.yes()) {
        j.message += " (in the type of " + name + ")";
        return j;
      }
    }
    return Judgement::ok(nullptr);
  }

  Judgement wf_type(const EnvRef& env, const TypeRef& t) {
    switch (t->kind) {
      case TypeKind::Top:
      case TypeKind::Bot: return Judgement::ok(nullptr);
      case TypeKind::Fld: return wf_type(env, t->rhs);
      case TypeKind::TypDecl: {
        Judgement a = wf_type(env, t->lhs);
        if (!a.yes()) return a;
        return wf_type(env, t->rhs);
      }
      case TypeKind::And: {
        Judgement a = wf_type(env, t->lhs);
        if (!a.yes()) return a;
        return wf_type(env, t->rhs);
      }
      case TypeKind::Sel:
      case TypeKind::Sngl: {
        if (t->path.root.is_bound()) return Judgement::ok(nullptr);
        return typeable(env, t->path);
      }
      case TypeKind::Rec: {
        std::string z = env->fresh(t->binder, free_names(t->rhs));
        TypeRef opened = open_with_path(t->rhs, Path::var(z));
        return wf_type(env->extended(z, opened), opened);
      }
      case TypeKind::All: {
        Judgement a = wf_type(env, t->lhs);
        if (!a.yes()) return a;
        std::string z = env->fresh(t->binder, free_names(t->rhs));
        return wf_type(env->extended(z, t->lhs),
                       open_with_path(t->rhs, Path::var(z)));
      }
    }
    return Judgement::ok(nullptr);
  }

  long fuel_left() const { return fuel_; }
  bool fuel_exhausted() const { return exhausted_; }

 private:
  long fuel_;
  bool exhausted_ = false;
  std::vector<std::pair<TypeRef, TypeRef>> subtype_goals_;
  std::vector<Path> typeable_inflight_;
  std::vector<std::pair<Path, TypeRef>> path_goals_;
  std::vector<TypeRef> sel_inflight_;

  bool spend() {
    if (exhausted_) return false;
    if (fuel_ <= 0) {
      exhausted_ = true;
      return false;
    }
    --fuel_;
    return true;
  }

  static const Path& p_at(const PathTypes& pt, size_t j) {
    return pt.chain[j];
  }

  static void push_unique(std::vector<Candidate>& xs, Candidate c) {
    for (const auto& x : xs)
      if (equal(x.type, c.type)) return;
    xs.push_back(std::move(c));
  }

  static void flatten_and(const TypeRef& t, std::vector<TypeRef>& out) {
    if (t->kind == TypeKind::And) {
      flatten_and(t->lhs, out);
      out.push_back(t->rhs);
      return;
    }
    out.push_back(t);
  }

  struct TypeableGuard {
    explicit operator bool() const { return ok; }
    bool ok;
  };
  TypeableGuard enter_typeable(const Path& p) {
    for (const Path& q : typeable_inflight_)
      if (q == p) return {false};
    typeable_inflight_.push_back(p);
    return {true};
  }
  void leave_typeable(const Path& p) {
    if (!typeable_inflight_.empty() && typeable_inflight_.back() == p)
      typeable_inflight_.pop_back();
  }

  // ---- per-path closure: the elimination-style direct types ----

  struct PathInfo {
    std::vector<Candidate> closure;  // direct (non-alias) types
    std::optional<std::pair<Path, DerivRef>> alias;  // one-step alias of p
  };

  // Closes a set of typings of `subject` under recursion elimination,
  // intersection elimination and upper-bound expansion of type projections.
  void saturate(const EnvRef& env, const Path& subject,
                std::vector<Candidate>& acc) {
    for (size_t i = 0; i < acc.size(); ++i) {
      if (!spend()) return;
      Candidate c = acc[i];
      switch (c.type->kind) {
        case TypeKind::Rec: {
          TypeRef opened = open_with_path(c.type->rhs, subject);
          push_unique(acc, {opened, derive(Rule::RecE,
                                           Judgment::path_typing(env, subject, opened),
                                           {c.deriv})});
          break;
        }
        case TypeKind::And: {
          auto sub_part = [&](Rule axiom, const TypeRef& part) {
            DerivRef ax = derive(axiom, Judgment::subtyping(env, c.type, part));
            push_unique(acc, {part, derive(Rule::Sub,
                                           Judgment::path_typing(env, subject, part),
                                           {c.deriv, ax})});
          };
          sub_part(Rule::And1Sub, c.type->lhs);
          sub_part(Rule::And2Sub, c.type->rhs);
          break;
        }
        case TypeKind::Sel: {
          bool busy = false;
          for (const auto& s : sel_inflight_)
            if (equal(s, c.type)) busy = true;
          if (busy) break;
          sel_inflight_.push_back(c.type);
          auto mb = member_bounds(env, c.type->path, c.type->label);
          sel_inflight_.pop_back();
          if (!mb) break;
          DerivRef selsub = derive(
              Rule::SelSub, Judgment::subtyping(env, c.type, mb->upper),
              {mb->typing});
          push_unique(acc, {mb->upper,
                            derive(Rule::Sub,
                                   Judgment::path_typing(env, subject, mb->upper),
                                   {c.deriv, selsub})});
          break;
        }
        default: break;
      }
    }
  }

  // Walks the fields of p through the record structure of its root binding.
  // Hitting a singleton declaration part-way redirects the remaining suffix
  // to the alias (the Sngl-E closure).
  PathInfo path_info(const EnvRef& env, const Path& p) {
    PathInfo out;
    if (p.root.is_bound()) return out;
    const TypeRef* bound = env->lookup(p.root.name);
    if (!bound) return out;
    Path cur = Path::var(p.root.name);
    std::vector<Candidate> closure{
        {*bound, derive(Rule::Var, Judgment::path_typing(env, cur, *bound))}};
    saturate(env, cur, closure);
    for (size_t i = 0; i < p.fields.size(); ++i) {
      const std::string& f = p.fields[i];
      Path nxt = cur.sel(f);
      const Candidate* fld = nullptr;
      for (const Candidate& c : closure)
        if (c.type->kind == TypeKind::Fld && c.type->label == f) {
          fld = &c;
          break;
        }
      if (!fld) {
        // No field declaration; a singleton type for the prefix redirects
        // the whole remaining path to the alias.
        const Candidate* sng = nullptr;
        for (const Candidate& c : closure)
          if (c.type->kind == TypeKind::Sngl) {
            sng = &c;
            break;
          }
        if (!sng) return {};
        Path alias = sng->type->path;
        DerivRef d = sng->deriv;  // cur : alias.type
        Path lhs = cur;
        for (size_t j = i; j < p.fields.size(); ++j) {
          Path alias2 = alias.sel(p.fields[j]);
          Path lhs2 = lhs.sel(p.fields[j]);
          Judgement tj = typeable(env, alias2);
          if (!tj.yes()) return {};
          d = derive(Rule::SnglE,
                     Judgment::path_typing(env, lhs2, Type::sngl(alias2)),
                     {d, tj.evidence});
          alias = alias2;
          lhs = lhs2;
        }
        out.alias = {alias, d};
        return out;
      }
      Candidate via = *fld;  // copy out before the vector is cleared
      closure.clear();
      closure.push_back(
          {via.type->rhs,
           derive(Rule::FldE, Judgment::path_typing(env, nxt, via.type->rhs),
                  {via.deriv})});
      saturate(env, nxt, closure);
      cur = nxt;
    }
    out.closure = closure;
    for (const Candidate& c : closure)
      if (c.type->kind == TypeKind::Sngl) {
        out.alias = {c.type->path, c.deriv};
        break;
      }
    return out;
  }

  // ---- canonicalization evidence for the Sngl subtyping routes ----

  struct CanonStep {
    Path from, to;     // the replaced occurrence and its alias
    TypeRef before, after;
    DerivRef aliasing; // env |- from : to.type
    DerivRef typeable; // env |- to  (Wf)
  };

  // Rewrites every free-rooted path occurrence to its canonical
  // representative, one single-occurrence replacement at a time.
  TypeRef canonicalize_type(const EnvRef& env, const TypeRef& t,
                            std::vector<CanonStep>* steps) {
    TypeRef cur = t;
    for (int guard = 0; guard < 512; ++guard) {
      if (!spend()) break;
      std::vector<Path> occs;
      paths_in(cur, occs);
      bool changed = false;
      for (const Path& occ : occs) {
        if (occ.root.is_bound()) continue;
        PathTypes pt = path_types(env, occ);
        if (pt.chain.size() < 2) continue;
        Path target = pt.cyclic ? *std::min_element(pt.cycle.begin(), pt.cycle.end())
                                : pt.chain.back();
        if (occ == target) continue;
        const Path& next = pt.chain[1];
        Judgement tj = typeable(env, next);
        if (!tj.yes()) continue;
        TypeRef after = replace_one(cur, occ, next);
        if (!after || equal(after, cur)) continue;
        if (steps)
          steps->push_back({occ, next, cur, after, pt.types.front().deriv,
                            tj.evidence});
        cur = after;
        changed = true;
        break;
      }
      if (!changed) break;
    }
    return cur;
  }

  // Replace exactly the first occurrence equal to `occ` by `to`.
  static TypeRef replace_one(const TypeRef& t, const Path& occ, const Path& to) {
    bool done = false;
    return replace_one_rec(t, occ, to, done);
  }
  static TypeRef replace_one_rec(const TypeRef& t, const Path& occ,
                                 const Path& to, bool& done) {
    if (done || !t) return t;
    switch (t->kind) {
      case TypeKind::Top:
      case TypeKind::Bot: return t;
      case TypeKind::Sel:
        if (t->path == occ) {
          done = true;
          return Type::sel(to, t->label);
        }
        return t;
      case TypeKind::Sngl:
        if (t->path == occ) {
          done = true;
          return Type::sngl(to);
        }
        return t;
      case TypeKind::Fld: {
        TypeRef r = replace_one_rec(t->rhs, occ, to, done);
        return done ? Type::fld(t->label, r) : t;
      }
      case TypeKind::TypDecl: {
        TypeRef l = replace_one_rec(t->lhs, occ, to, done);
        if (done) return Type::typ(t->label, l, t->rhs);
        TypeRef r = replace_one_rec(t->rhs, occ, to, done);
        return done ? Type::typ(t->label, t->lhs, r) : t;
      }
      case TypeKind::And: {
        TypeRef l = replace_one_rec(t->lhs, occ, to, done);
        if (done) return Type::and_(l, t->rhs);
        TypeRef r = replace_one_rec(t->rhs, occ, to, done);
        return done ? Type::and_(t->lhs, r) : t;
      }
      case TypeKind::Rec: {
        TypeRef r = replace_one_rec(t->rhs, occ, to, done);
        return done ? Type::rec(t->binder, r) : t;
      }
      case TypeKind::All: {
        TypeRef l = replace_one_rec(t->lhs, occ, to, done);
        if (done) return Type::all(t->binder, l, t->rhs);
        TypeRef r = replace_one_rec(t->rhs, occ, to, done);
        return done ? Type::all(t->binder, t->lhs, r) : t;
      }
    }
    return t;
  }

  // ---- subtyping routes ----

  Judgement subtype_routes(const EnvRef& env, const TypeRef& S, const TypeRef& T) {
    bool saw_unknown = false;
    auto track = [&](const Judgement& j) { saw_unknown |= j.unknown(); };

    // Equivalent types: canonicalize path aliases on both sides and compare.
    {
      std::vector<CanonStep> ls, rs;
      TypeRef Sc = canonicalize_type(env, S, &ls);
      TypeRef Tc = canonicalize_type(env, T, &rs);
      if ((!ls.empty() || !rs.empty()) && equal(Sc, Tc)) {
        DerivRef d = canon_evidence(env, S, T, Sc, ls, rs);
        if (d) return Judgement::ok(d);
      }
    }

    if (T->kind == TypeKind::And) {
      Judgement a = subtype(env, S, T->lhs);
      track(a);
      if (a.yes()) {
        Judgement b = subtype(env, S, T->rhs);
        track(b);
        if (b.yes())
          return Judgement::ok(derive(Rule::SubAnd,
                                      Judgment::subtyping(env, S, T),
                                      {a.evidence, b.evidence}));
      }
    }

    if (S->kind == TypeKind::And) {
      auto via = [&](Rule axiom, const TypeRef& part) -> Judgement {
        Judgement inner = subtype(env, part, T);
        track(inner);
        if (!inner.yes()) return inner;
        if (equal(part, T))
          return Judgement::ok(derive(axiom, Judgment::subtyping(env, S, T)));
        DerivRef ax = derive(axiom, Judgment::subtyping(env, S, part));
        return Judgement::ok(derive(Rule::Trans, Judgment::subtyping(env, S, T),
                                    {ax, inner.evidence}));
      };
      Judgement a = via(Rule::And1Sub, S->lhs);
      if (a.yes()) return a;
      Judgement b = via(Rule::And2Sub, S->rhs);
      if (b.yes()) return b;
    }

    if (S->kind == TypeKind::Fld && T->kind == TypeKind::Fld &&
        S->label == T->label) {
      Judgement inner = subtype(env, S->rhs, T->rhs);
      track(inner);
      if (inner.yes())
        return Judgement::ok(derive(Rule::FldSubFld,
                                    Judgment::subtyping(env, S, T),
                                    {inner.evidence}));
    }

    if (S->kind == TypeKind::TypDecl && T->kind == TypeKind::TypDecl &&
        S->label == T->label) {
      Judgement lo = subtype(env, T->lhs, S->lhs);
      track(lo);
      if (lo.yes()) {
        Judgement hi = subtype(env, S->rhs, T->rhs);
        track(hi);
        if (hi.yes())
          return Judgement::ok(derive(Rule::TypSubTyp,
                                      Judgment::subtyping(env, S, T),
                                      {lo.evidence, hi.evidence}));
      }
    }

    if (S->kind == TypeKind::All && T->kind == TypeKind::All) {
      Judgement par = subtype(env, T->lhs, S->lhs);
      track(par);
      if (par.yes()) {
        std::set<std::string> avoid = free_names(S->rhs);
        auto f2 = free_names(T->rhs);
        avoid.insert(f2.begin(), f2.end());
        std::string z = env->fresh(T->binder.empty() ? S->binder : T->binder,
                                   avoid);
        EnvRef env2 = env->extended(z, T->lhs);
        Judgement body = subtype(env2, open_with_path(S->rhs, Path::var(z)),
                                 open_with_path(T->rhs, Path::var(z)));
        track(body);
        if (body.yes())
          return Judgement::ok(derive(Rule::AllSubAll,
                                      Judgment::subtyping(env, S, T),
                                      {par.evidence, body.evidence}));
      }
    }

    if (T->kind == TypeKind::Sel) {
      if (auto mb = member_bounds(env, T->path, T->label)) {
        Judgement inner = subtype(env, S, mb->lower);
        track(inner);
        if (inner.yes()) {
          DerivRef subsel = derive(Rule::SubSel,
                                   Judgment::subtyping(env, mb->lower, T),
                                   {mb->typing});
          if (equal(S, mb->lower)) return Judgement::ok(subsel);
          return Judgement::ok(derive(Rule::Trans, Judgment::subtyping(env, S, T),
                                      {inner.evidence, subsel}));
        }
      }
    }

    if (S->kind == TypeKind::Sel) {
      if (auto mb = member_bounds(env, S->path, S->label)) {
        Judgement inner = subtype(env, mb->upper, T);
        track(inner);
        if (inner.yes()) {
          DerivRef selsub = derive(Rule::SelSub,
                                   Judgment::subtyping(env, S, mb->upper),
                                   {mb->typing});
          if (equal(mb->upper, T)) return Judgement::ok(selsub);
          return Judgement::ok(derive(Rule::Trans, Judgment::subtyping(env, S, T),
                                      {selsub, inner.evidence}));
        }
      }
    }

    if (saw_unknown || exhausted_) return Judgement::out_of_fuel();
    return Judgement::fail("<:", "no subtyping rule applies to " + pretty(S) +
                                     " <: " + pretty(T));
  }

  // S <: Sc (forward Sngl-pq steps), Sc == Tc, Tc <: T reversed with Sngl-qp.
  DerivRef canon_evidence(const EnvRef& env, const TypeRef& S, const TypeRef& T,
                          const TypeRef& mid, const std::vector<CanonStep>& ls,
                          const std::vector<CanonStep>& rs) {
    DerivRef acc;  // S <: current
    TypeRef cur = S;
    auto chain_to = [&](DerivRef step, const TypeRef& to) {
      if (!acc) {
        acc = step;
      } else {
        acc = derive(Rule::Trans, Judgment::subtyping(env, S, to), {acc, step});
      }
      cur = to;
    };
    for (const CanonStep& st : ls) {
      DerivRef repl = derive(Rule::ReplStep,
                             Judgment::replace(st.from, st.to, st.before, st.after));
      DerivRef step = derive(Rule::SnglPqSub,
                             Judgment::subtyping(env, st.before, st.after),
                             {st.aliasing, st.typeable, repl});
      chain_to(step, st.after);
    }
    // Walk the T-side steps backwards: from Tc up to T with Sngl-qp.
    for (size_t i = rs.size(); i-- > 0;) {
      const CanonStep& st = rs[i];
      DerivRef repl = derive(Rule::ReplStep,
                             Judgment::replace(st.to, st.from, st.after, st.before));
      DerivRef step = derive(Rule::SnglQpSub,
                             Judgment::subtyping(env, st.after, st.before),
                             {st.aliasing, st.typeable, repl});
      chain_to(step, st.before);
    }
    if (!acc) return nullptr;
    (void)mid;
    return acc;
  }

  // ---- path checking with on-demand introduction rules ----

  Judgement check_path(const EnvRef& env, const Path& p, const TypeRef& T,
                       const TermRef& at) {
    for (const auto& g : path_goals_)
      if (g.first == p && equal(g.second, T))
        return Judgement::fail("Sub", "cyclic checking goal for " + pretty(p));
    path_goals_.emplace_back(p, T);
    Judgement r = check_path_routes(env, p, T, at);
    path_goals_.pop_back();
    return r;
  }

  Judgement check_path_routes(const EnvRef& env, const Path& p, const TypeRef& T,
                              const TermRef& at) {
    bool saw_unknown = false;
    PathTypes pt = path_types(env, p);
    if (pt.types.empty())
      return Judgement::fail("Var", "path " + pretty(p) + " has no type",
                             at ? at->line : 0, at ? at->col : 0);
    for (const Candidate& c : pt.types) {
      if (equal(c.type, T)) return Judgement::ok(c.deriv);
      Judgement js = subtype(env, c.type, T);
      saw_unknown |= js.unknown();
      if (js.yes())
        return Judgement::ok(derive(Rule::Sub,
                                    Judgment::path_typing(env, p, T),
                                    {c.deriv, js.evidence}));
    }
    switch (T->kind) {
      case TypeKind::And: {
        Judgement a = check_path(env, p, T->lhs, at);
        saw_unknown |= a.unknown();
        if (a.yes()) {
          Judgement b = check_path(env, p, T->rhs, at);
          saw_unknown |= b.unknown();
          if (b.yes())
            return Judgement::ok(derive(Rule::AndI,
                                        Judgment::path_typing(env, p, T),
                                        {a.evidence, b.evidence}));
        }
        break;
      }
      case TypeKind::Rec: {
        Judgement inner = check_path(env, p, open_with_path(T->rhs, p), at);
        saw_unknown |= inner.unknown();
        if (inner.yes())
          return Judgement::ok(derive(Rule::RecI,
                                      Judgment::path_typing(env, p, T),
                                      {inner.evidence}));
        break;
      }
      case TypeKind::Fld: {
        Judgement inner = check_path(env, p.sel(T->label), T->rhs, at);
        saw_unknown |= inner.unknown();
        if (inner.yes())
          return Judgement::ok(derive(Rule::FldI,
                                      Judgment::path_typing(env, p, T),
                                      {inner.evidence}));
        break;
      }
      case TypeKind::Sel: {
        if (auto mb = member_bounds(env, T->path, T->label)) {
          Judgement inner = check_path(env, p, mb->lower, at);
          saw_unknown |= inner.unknown();
          if (inner.yes()) {
            DerivRef subsel = derive(Rule::SubSel,
                                     Judgment::subtyping(env, mb->lower, T),
                                     {mb->typing});
            return Judgement::ok(derive(Rule::Sub,
                                        Judgment::path_typing(env, p, T),
                                        {inner.evidence, subsel}));
          }
        }
        break;
      }
      default: break;
    }
    if (saw_unknown || exhausted_) return Judgement::out_of_fuel();
    return Judgement::fail(
        "Sub",
        "path " + pretty(p) + " has type " + pretty(pt.types.front().type) +
            " which does not check against " + pretty(T),
        at ? at->line : 0, at ? at->col : 0);
  }

  // ---- synthesis per term form ----

  SynthResult synth_fail(Verdict v, std::string rule, std::string msg,
                         const TermRef& t) {
    SynthResult r;
    r.verdict = v;
    r.rule = std::move(rule);
    r.message = std::move(msg);
    if (t) {
      r.line = t->line;
      r.col = t->col;
    }
    return r;
  }

  SynthResult synth_path(const EnvRef& env, const Path& p, const TermRef& t) {
    PathTypes pt = path_types(env, p);
    if (pt.types.empty())
      return synth_fail(Verdict::No, "Var",
                        "path " + pretty(p) + " has no type", t);
    SynthResult r;
    r.verdict = Verdict::Yes;
    r.candidates = pt.types;
    return r;
  }

  SynthResult synth_value(const EnvRef& env, const ValueRef& v) {
    if (v->kind == ValueKind::Lambda) {
      std::set<std::string> avoid = free_names(v->body);
      auto f2 = free_names(v->type);
      avoid.insert(f2.begin(), f2.end());
      std::string z = env->fresh(v->binder, avoid);
      EnvRef env2 = env->extended(z, v->type);
      SynthResult body = synth(env2, open_with_path(v->body, Path::var(z)));
      if (!body.yes()) return body;
      const Candidate& c = body.candidates.front();
      TypeRef ty = Type::all(v->binder.empty() ? z : v->binder, v->type,
                             detail::close_type(c.type, z, 0));
      SynthResult r;
      r.verdict = Verdict::Yes;
      r.candidates.push_back(
          {ty, derive(Rule::AllI,
                      Judgment::typing(env, Term::value(v), ty), {c.deriv})});
      return r;
    }
    // Object: check the definitions against the declared self type under the
    // object's own fresh name.
    std::set<std::string> avoid = free_names(v);
    std::string z = env->fresh(v->binder, avoid);
    Path self = Path::var(z);
    TypeRef self_ty = open_with_path(v->type, self);
    EnvRef env2 = env->extended(z, self_ty);
    Judgement defs = check_defs(env2, self, open_with_path(v->defs, self), self_ty);
    if (!defs.yes()) {
      SynthResult r;
      r.verdict = defs.verdict;
      r.rule = defs.rule;
      r.message = defs.message;
      r.line = defs.line ? defs.line : v->line;
      r.col = defs.col ? defs.col : v->col;
      return r;
    }
    TypeRef ty = Type::rec(v->binder, v->type);
    SynthResult r;
    r.verdict = Verdict::Yes;
    r.candidates.push_back(
        {ty, derive(Rule::ObjI, Judgment::typing(env, Term::value(v), ty),
                    {defs.evidence})});
    return r;
  }

  SynthResult synth_app(const EnvRef& env, const TermRef& t) {
    PathTypes pt = path_types(env, t->fn);
    if (pt.types.empty())
      return synth_fail(Verdict::No, "All-E",
                        "function path " + pretty(t->fn) + " has no type", t);
    bool saw_unknown = false;
    for (const Candidate& c : pt.types) {
      if (c.type->kind != TypeKind::All) continue;
      Judgement arg = check(env, Term::path(t->arg), c.type->lhs);
      saw_unknown |= arg.unknown();
      if (!arg.yes()) continue;
      TypeRef res = open_with_path(c.type->rhs, t->arg);
      SynthResult r;
      r.verdict = Verdict::Yes;
      r.candidates.push_back(
          {res, derive(Rule::AllE, Judgment::typing(env, t, res),
                       {c.deriv, arg.evidence})});
      return r;
    }
    if (saw_unknown || exhausted_)
      return synth_fail(Verdict::Unknown, "", "fuel exhausted", t);
    return synth_fail(
        Verdict::No, "All-E",
        "cannot apply " + pretty(t->fn) +
            ": no function type among its synthesized types, or the argument " +
            pretty(t->arg) + " does not check against the parameter type",
        t);
  }

  SynthResult synth_let(const EnvRef& env, const TermRef& t) {
    SynthResult sb = synth(env, t->bound);
    if (!sb.yes()) return sb;
    const Candidate& bnd = sb.candidates.front();
    std::set<std::string> avoid = free_names(t->body);
    auto f2 = free_names(bnd.type);
    avoid.insert(f2.begin(), f2.end());
    std::string z = env->fresh(t->binder, avoid);
    EnvRef env2 = env->extended(z, bnd.type);
    SynthResult body = synth(env2, open_with_path(t->body, Path::var(z)));
    if (!body.yes()) {
      body.line = body.line ? body.line : t->line;
      body.col = body.col ? body.col : t->col;
      return body;
    }
    SynthResult r;
    for (const Candidate& c : body.candidates) {
      if (mentions(c.type, z)) continue;
      r.candidates.push_back(
          {c.type, derive(Rule::Let, Judgment::typing(env, t, c.type),
                          {bnd.deriv, c.deriv})});
    }
    if (r.candidates.empty())
      return synth_fail(
          Verdict::No, "Let",
          "the type of the let body mentions the bound variable '" + z +
              "' and the side condition x ∉ fv(U) fails; bind the result "
              "to a wider type first",
          t);
    r.verdict = Verdict::Yes;
    return r;
  }

  // check-mode lambda against a function type goal T = all(x: U) V: the body
  // is checked against V under the lambda's own parameter annotation, which
  // yields all(S, V) by All-I; when the goal parameter U is narrower, one
  // All-<:-All step with a reflexive body closes the gap.
  Judgement check_lambda(const EnvRef& env, const ValueRef& lam, const TypeRef& T) {
    const TypeRef& S = lam->type;   // annotation
    const TypeRef& U = T->lhs;      // goal parameter
    const TypeRef& V = T->rhs;      // goal body (one slot)
    std::set<std::string> avoid = free_names(lam->body);
    for (const TypeRef* ty : {&S, &U, &V}) {
      auto f = free_names(*ty);
      avoid.insert(f.begin(), f.end());
    }
    std::string z = env->fresh(lam->binder, avoid);
    EnvRef env2 = env->extended(z, S);
    Judgement jb = check(env2, open_with_path(lam->body, Path::var(z)),
                         open_with_path(V, Path::var(z)));
    if (jb.yes()) {
      TypeRef lam_ty = Type::all(lam->binder, S, V);
      DerivRef d1 = derive(Rule::AllI,
                           Judgment::typing(env, Term::value(lam), lam_ty),
                           {jb.evidence});
      if (equal(S, U)) return Judgement::ok(d1);
      Judgement par = subtype(env, U, S);
      if (par.yes()) {
        std::string z2 = env->fresh(lam->binder, avoid);
        TypeRef v2 = open_with_path(V, Path::var(z2));
        DerivRef refl = derive(Rule::Refl,
                               Judgment::subtyping(env->extended(z2, U), v2, v2));
        DerivRef allsub = derive(Rule::AllSubAll,
                                 Judgment::subtyping(env, lam_ty, T),
                                 {par.evidence, refl});
        return Judgement::ok(derive(Rule::Sub,
                                    Judgment::typing(env, Term::value(lam), T),
                                    {d1, allsub}));
      }
      if (par.unknown()) return Judgement::out_of_fuel();
    } else if (jb.unknown()) {
      return jb;
    }
    // Fallback: synthesize the body's own type and compare function types.
    SynthResult self = synth_value(env, lam);
    if (!self.yes()) return self.as_judgement();
    const Candidate& c = self.candidates.front();
    if (equal(c.type, T)) return Judgement::ok(c.deriv);
    Judgement js = subtype(env, c.type, T);
    if (!js.yes()) {
      if (js.unknown()) return js;
      if (jb.no() && !jb.message.empty()) return jb;
      return Judgement::fail("Sub",
                             "lambda has type " + pretty(c.type) +
                                 " which is not a subtype of the declared " +
                                 pretty(T),
                             lam->line, lam->col);
    }
    return Judgement::ok(derive(Rule::Sub,
                                Judgment::typing(env, Term::value(lam), T),
                                {c.deriv, js.evidence}));
  }

  // ---- definition typing ----

  Judgement check_def(const EnvRef& env, const Path& identity, const Def& d,
                      const TypeRef& decl) {
    if (d.is_type) {
      if (decl->kind != TypeKind::TypDecl || decl->label != d.label)
        return Judgement::fail("AndDef-I",
                               "type member '" + d.label +
                                   "' does not line up with declaration " +
                                   pretty(decl),
                               d.line, d.col);
      if (!equal(decl->lhs, d.type) || !equal(decl->rhs, d.type))
        return Judgement::fail(
            "Def-Typ",
            "type member {" + d.label + " = " + pretty(d.type) +
                "} must be declared with tight bounds {type " + d.label + ": " +
                pretty(d.type) + " .. " + pretty(d.type) + "}, not " +
                pretty(decl),
            d.line, d.col);
      return Judgement::ok(derive(
          Rule::DefTyp, Judgment::def_typing(env, identity, {d}, decl)));
    }
    if (decl->kind != TypeKind::Fld || decl->label != d.label)
      return Judgement::fail("AndDef-I",
                             "field '" + d.label +
                                 "' does not line up with declaration " +
                                 pretty(decl),
                             d.line, d.col);
    const TypeRef& want = decl->rhs;
    if (d.init.is_path) {
      // Def-Path: a field holding a path must be declared at exactly the
      // path's singleton type, and the path must be typeable.
      if (want->kind != TypeKind::Sngl || !(want->path == d.init.path))
        return Judgement::fail(
            "Def-Path",
            "field '" + d.label + "' is initialized with the path " +
                pretty(d.init.path) + " and must be declared with type " +
                pretty(d.init.path) + ".type, not " + pretty(want),
            d.line, d.col);
      Judgement tj = typeable(env, d.init.path);
      if (!tj.yes()) {
        tj.line = d.line;
        tj.col = d.col;
        tj.rule = "Def-Path";
        return tj;
      }
      return Judgement::ok(derive(Rule::DefPath,
                                  Judgment::def_typing(env, identity, {d}, decl),
                                  {tj.evidence}));
    }
    if (d.init.val->kind == ValueKind::Lambda) {
      if (want->kind != TypeKind::All)
        return Judgement::fail(
            "Def-All",
            "field '" + d.label +
                "' holds a lambda and must be declared at a function type, "
                "not " + pretty(want),
            d.line, d.col);
      Judgement j = check_lambda(env, d.init.val, want);
      if (!j.yes()) {
        if (j.no()) j.rule = "Def-All";
        if (j.line == 0) {
          j.line = d.line;
          j.col = d.col;
        }
        return j;
      }
      return Judgement::ok(derive(Rule::DefAll,
                                  Judgment::def_typing(env, identity, {d}, decl),
                                  {j.evidence}));
    }
    // Nested object: declared at its recursive type with tight bounds, body
    // re-checked under the extended identity path.
    const ValueRef& obj = d.init.val;
    if (want->kind != TypeKind::Rec)
      return Judgement::fail(
          "Def-New",
          "field '" + d.label +
              "' holds an object and must be declared at its recursive type "
              "mu(" + obj->binder + ") ..., not " + pretty(want),
          d.line, d.col);
    if (!equal(want->rhs, obj->type))
      return Judgement::fail(
          "Def-New",
          "field '" + d.label + "' is declared at " + pretty(want) +
              " but the object's self type is " +
              pretty(Type::rec(obj->binder, obj->type)),
          d.line, d.col);
    if (!tight_bounds(obj->type))
      return Judgement::fail(
          "Def-New",
          "the self type of the object in field '" + d.label +
              "' must have tight bounds on every reachable type member",
          d.line, d.col);
    Path nested = identity.sel(d.label);
    Judgement inner = check_defs(env, nested, open_with_path(obj->defs, nested),
                                 open_with_path(obj->type, nested));
    if (!inner.yes()) {
      if (inner.line == 0) {
        inner.line = d.line;
        inner.col = d.col;
      }
      return inner;
    }
    DerivRef tightd = derive(Rule::TightBoundsOk, Judgment::tight(obj->type));
    return Judgement::ok(derive(Rule::DefNew,
                                Judgment::def_typing(env, identity, {d}, decl),
                                {inner.evidence, tightd}));
  }
};

}  // namespace pdot
