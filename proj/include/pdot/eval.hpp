// Small-step operational semantics: value environments, path lookup with
// cycle and fuel accounting, the reduction relation, the extended relation
// that also steps normal-form paths by lookup, and run/trace drivers.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pdot/pretty.hpp"
#include "pdot/syntax.hpp"

namespace pdot {

// ---------------------------------------------------------------------------
// Store: ordered name -> value map, append-only along a run.

struct Store {
  std::vector<std::pair<std::string, ValueRef>> items;

  const ValueRef* lookup(const std::string& name) const {
    for (size_t i = items.size(); i-- > 0;)
      if (items[i].first == name) return &items[i].second;
    return nullptr;
  }

  bool contains(const std::string& name) const { return lookup(name) != nullptr; }

  // Deterministic fresh-name scheme: x, x$1, x$2, ... so traces are
  // reproducible byte for byte.
  std::string fresh(const std::string& hint) const {
    std::string base = hint.empty() ? "x" : hint;
    if (!contains(base)) return base;
    for (int i = 1;; ++i) {
      std::string cand = base + "$" + std::to_string(i);
      if (!contains(cand)) return cand;
    }
  }

  Store extended(std::string name, ValueRef v) const {
    Store s = *this;
    s.items.emplace_back(std::move(name), std::move(v));
    return s;
  }
};

struct Configuration {
  Store store;
  TermRef term;
};

// ---------------------------------------------------------------------------
// Path lookup (value-environment lookup of stable terms)

enum class LookupRule { Var, Val, Path };

inline const char* lookup_rule_name(LookupRule r) {
  switch (r) {
    case LookupRule::Var: return "Lookup-Step-Var";
    case LookupRule::Val: return "Lookup-Step-Val";
    case LookupRule::Path: return "Lookup-Step-Path";
  }
  return "?";
}

// One derived judgment gamma |- s ~> s', in evaluation order; Val and Path
// rules record their premise judgments before the conclusion.
struct LookupRow {
  LookupRule rule;
  Stable from, to;
};

// A single step of the lookup relation on a stable term. Rows for every
// judgment derived along the way (premises first) are appended to `rows`.
inline std::optional<Stable> lookup_step(const Store& store, const Stable& s,
                                         std::vector<LookupRow>* rows = nullptr) {
  if (!s.is_path) return std::nullopt;  // values are final
  const Path& p = s.path;
  if (p.root.is_bound()) return std::nullopt;
  if (p.fields.empty()) {
    const ValueRef* v = store.lookup(p.root.name);
    if (!v) return std::nullopt;
    Stable out = Stable::of_value(*v);
    if (rows) rows->push_back({LookupRule::Var, s, out});
    return out;
  }
  // p = prefix.a : step the prefix; an object prefix selects the member with
  // the self variable replaced by the prefix, a path prefix steps congruently.
  Path prefix = p;
  std::string label = prefix.fields.back();
  prefix.fields.pop_back();
  auto stepped = lookup_step(store, Stable::of_path(prefix), rows);
  if (!stepped) return std::nullopt;
  if (!stepped->is_path) {
    const ValueRef& v = stepped->val;
    if (v->kind != ValueKind::Object) return std::nullopt;  // selection on a lambda
    for (const Def& d : v->defs) {
      if (!d.is_type && d.label == label) {
        Stable out = open_with_path(DefList{d}, prefix)[0].init;
        if (rows) rows->push_back({LookupRule::Val, s, out});
        return out;
      }
    }
    return std::nullopt;  // missing member
  }
  Stable out = Stable::of_path(stepped->path.sel(label));
  if (rows) rows->push_back({LookupRule::Path, s, out});
  return out;
}

struct LookupOutcome {
  enum class Kind { Value, Cycle, Stuck, FuelOut };
  Kind kind = Kind::Stuck;
  ValueRef value;                // Kind::Value
  std::vector<Stable> cycle;     // Kind::Cycle: the revisited stable terms
  std::string reason;            // Kind::Stuck
  long steps = 0;                // top-level lookup steps taken
  std::vector<LookupRow> rows;   // every judgment derived, in order
};

// Reflexive-transitive closure of lookup_step with a visited set: reports the
// reached value, a repetition (the paper's relation would loop), a stuck
// lookup, or fuel exhaustion.
inline LookupOutcome lookup_star(const Store& store, Stable s, long fuel) {
  LookupOutcome out;
  std::vector<Stable> visited;
  for (;;) {
    if (!s.is_path) {
      out.kind = LookupOutcome::Kind::Value;
      out.value = s.val;
      return out;
    }
    for (const Stable& seen : visited)
      if (equal(seen, s)) {
        out.kind = LookupOutcome::Kind::Cycle;
        auto it = std::find_if(visited.begin(), visited.end(),
                               [&](const Stable& v) { return equal(v, s); });
        out.cycle.assign(it, visited.end());
        return out;
      }
    visited.push_back(s);
    if (out.steps >= fuel) {
      out.kind = LookupOutcome::Kind::FuelOut;
      return out;
    }
    auto nxt = lookup_step(store, s, &out.rows);
    if (!nxt) {
      out.kind = LookupOutcome::Kind::Stuck;
      out.reason = "no lookup rule applies to " + pretty(s);
      return out;
    }
    out.steps++;
    s = *nxt;
  }
}

// ---------------------------------------------------------------------------
// Reduction

enum class StepRule { Apply, LetPath, LetValue, Ctx };

inline const char* step_rule_name(StepRule r) {
  switch (r) {
    case StepRule::Apply: return "Apply";
    case StepRule::LetPath: return "Let-Path";
    case StepRule::LetValue: return "Let-Value";
    case StepRule::Ctx: return "Ctx";
  }
  return "?";
}

struct StepInfo {
  StepRule rule;          // outermost rule; Ctx wraps the inner rule
  StepRule inner;         // rule that actually fired (== rule unless Ctx)
  int ctx_depth = 0;      // number of Ctx wrappers
};

struct StepError {
  // Apply was reachable but lookup did not produce a lambda; the driver
  // distinguishes this "stuck" from a normal form.
  std::string reason;
  LookupOutcome lookup;
};

struct StepResult {
  std::optional<Configuration> next;
  std::optional<StepInfo> info;
  std::optional<StepError> error;  // stuck-at-Apply details
};

inline StepResult step(const Configuration& c, long lookup_fuel = 10000) {
  const TermRef& t = c.term;
  switch (t->kind) {
    case TermKind::Stable: return {};  // paths and values are normal form
    case TermKind::App: {
      LookupOutcome lo = lookup_star(c.store, Stable::of_path(t->fn), lookup_fuel);
      if (lo.kind != LookupOutcome::Kind::Value ||
          lo.value->kind != ValueKind::Lambda) {
        StepResult r;
        std::string why;
        switch (lo.kind) {
          case LookupOutcome::Kind::Value: why = "resolves to an object, not a lambda"; break;
          case LookupOutcome::Kind::Cycle: why = "lookup cycles"; break;
          case LookupOutcome::Kind::Stuck: why = "lookup is stuck: " + lo.reason; break;
          case LookupOutcome::Kind::FuelOut: why = "lookup ran out of fuel"; break;
        }
        r.error = StepError{"cannot apply " + pretty(t->fn) + ": " + why,
                            std::move(lo)};
        return r;
      }
      TermRef body = open_with_path(lo.value->body, t->arg);
      return {Configuration{c.store, body}, StepInfo{StepRule::Apply, StepRule::Apply, 0},
              std::nullopt};
    }
    case TermKind::Let: {
      const TermRef& bound = t->bound;
      if (bound->kind == TermKind::Stable) {
        if (bound->stable.is_path) {
          TermRef next = open_with_path(t->body, bound->stable.path);
          return {Configuration{c.store, next},
                  StepInfo{StepRule::LetPath, StepRule::LetPath, 0}, std::nullopt};
        }
        std::string x = c.store.fresh(t->binder);
        Store s2 = c.store.extended(x, bound->stable.val);
        TermRef next = open_with_path(t->body, Path::var(x));
        return {Configuration{std::move(s2), next},
                StepInfo{StepRule::LetValue, StepRule::LetValue, 0}, std::nullopt};
      }
      StepResult inner = step({c.store, bound}, lookup_fuel);
      if (!inner.next) return inner;  // normal form or stuck propagates
      TermRef next = Term::let(t->binder, inner.next->term, t->body);
      StepInfo info{StepRule::Ctx, inner.info->inner, inner.info->ctx_depth + 1};
      return {Configuration{inner.next->store, next}, info, std::nullopt};
    }
  }
  return {};
}

// Extended reduction: a reduction step when one applies, otherwise a single
// lookup step on a normal-form path; values are final.
struct ExtendedStep {
  std::optional<Configuration> next;
  bool by_lookup = false;
  std::optional<StepInfo> info;        // when a reduction rule fired
  std::optional<LookupRow> lookup_row; // when a lookup step fired
  std::optional<StepError> error;
};

inline ExtendedStep extended_step(const Configuration& c, long lookup_fuel = 10000) {
  StepResult r = step(c, lookup_fuel);
  if (r.next) return {r.next, false, r.info, std::nullopt, std::nullopt};
  if (r.error) return {std::nullopt, false, std::nullopt, std::nullopt, r.error};
  if (c.term->kind == TermKind::Stable && c.term->stable.is_path) {
    std::vector<LookupRow> rows;
    auto nxt = lookup_step(c.store, c.term->stable, &rows);
    if (nxt) {
      TermRef t2 = nxt->is_path ? Term::path(nxt->path) : Term::value(nxt->val);
      return {Configuration{c.store, t2}, true, std::nullopt,
              rows.empty() ? std::nullopt : std::optional<LookupRow>(rows.back()),
              std::nullopt};
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Run drivers

struct TraceEntry {
  Configuration config;  // configuration *after* the step
  StepInfo info;
};

struct RunOutcome {
  enum class Kind { Value, NormalPath, Diverged, Stuck };
  Kind kind = Kind::Stuck;
  Configuration final;           // last configuration reached
  long steps = 0;
  ValueRef value;                // Kind::Value
  Path path;                     // Kind::NormalPath
  LookupOutcome resolution;      // Kind::NormalPath: lookup of the final path
  std::string reason;            // Kind::Stuck
  std::vector<TraceEntry> trace; // filled by run(..., with_trace=true)
};

inline RunOutcome run(const TermRef& program, long fuel = 100000,
                      long lookup_fuel = 10000, bool with_trace = false) {
  RunOutcome out;
  Configuration c{Store{}, program};
  for (;;) {
    if (c.term->kind == TermKind::Stable) {
      out.final = c;
      if (c.term->stable.is_path) {
        out.kind = RunOutcome::Kind::NormalPath;
        out.path = c.term->stable.path;
        out.resolution = lookup_star(c.store, c.term->stable, lookup_fuel);
      } else {
        out.kind = RunOutcome::Kind::Value;
        out.value = c.term->stable.val;
      }
      return out;
    }
    if (out.steps >= fuel) {
      out.kind = RunOutcome::Kind::Diverged;
      out.final = c;
      return out;
    }
    StepResult r = step(c, lookup_fuel);
    if (!r.next) {
      out.kind = RunOutcome::Kind::Stuck;
      out.final = c;
      out.reason = r.error ? r.error->reason : "no reduction rule applies";
      return out;
    }
    out.steps++;
    c = *r.next;
    if (with_trace) out.trace.push_back({c, *r.info});
  }
}

// Stable one-line-per-step format for golden tests.
inline std::string trace_line(long step_no, const StepInfo& info,
                              const TermRef& term) {
  std::string rule = step_rule_name(info.inner);
  std::string out = std::to_string(step_no) + "  rule=" + rule;
  if (info.ctx_depth > 0) out += "(ctx^" + std::to_string(info.ctx_depth) + ")";
  out += "  term=" + pretty(term);
  return out;
}

inline std::string lookup_trace_line(long row_no, const LookupRow& row) {
  return std::to_string(row_no) + "  rule=" + lookup_rule_name(row.rule) +
         "  " + pretty(row.from) + " ~> " + pretty(row.to);
}

}  // namespace pdot
