// Dynamic metatheory harness: runs a typechecked program with tracing and
// asserts, at every step, the soundness-theorem ingredients that the type
// system promises — progress, per-step preservation under a typing
// environment reconstructed from the store, canonical forms at every Apply,
// store monotonicity, and inertness + well-formedness of the reconstructed
// environment.

#pragma once

#include <string>
#include <vector>

#include "pdot/eval.hpp"
#include "pdot/typing.hpp"

namespace pdot {

struct HarnessViolation {
  std::string kind;    // progress | preservation | canonical-forms | ...
  long step_no = 0;
  std::string detail;
};

struct HarnessReport {
  bool typechecked = false;
  std::string typecheck_error;
  TypeRef program_type;
  RunOutcome outcome;
  long steps_checked = 0;
  bool repeated_configuration = false;  // loop detected; later steps repeat
  std::vector<HarnessViolation> violations;

  bool passed() const { return typechecked && violations.empty(); }
};

namespace detail {

// Typing environment induced by a store: each value gets its synthesized
// ({}-I / All-I) type under the environment of the bindings before it.
struct EnvReconstructor {
  long fuel;
  EnvRef env = Env::empty();
  size_t covered = 0;
  std::string error;

  bool extend_to(const Store& store) {
    for (; covered < store.items.size(); ++covered) {
      const auto& [name, value] = store.items[covered];
      Checker chk(fuel);
      SynthResult s = chk.synth(env, Term::value(value));
      if (!s.yes()) {
        error = "store value " + name + " does not re-typecheck: " + s.message;
        return false;
      }
      env = env->extended(name, s.candidates.front().type);
    }
    return true;
  }
};

inline const Term* app_under_ctx(const TermRef& t, int depth) {
  const Term* cur = t.get();
  for (int i = 0; i < depth; ++i) {
    if (cur->kind != TermKind::Let) return nullptr;
    cur = cur->bound.get();
  }
  return cur->kind == TermKind::App ? cur : nullptr;
}

}  // namespace detail

inline HarnessReport harness_run(const TermRef& program, long step_fuel = 2000,
                                 long lookup_fuel = 10000,
                                 long check_fuel = Checker::kDefaultFuel) {
  HarnessReport rep;
  Checker top(check_fuel);
  auto tc = top.typecheck(program);
  if (!tc.ok) {
    rep.typecheck_error = tc.message.empty() ? tc.rule : tc.message;
    return rep;
  }
  rep.typechecked = true;
  rep.program_type = tc.type;

  auto violate = [&](std::string kind, long step_no, std::string detail) {
    rep.violations.push_back({std::move(kind), step_no, std::move(detail)});
  };

  detail::EnvReconstructor recon{check_fuel};
  // Checks one configuration: reconstructed env is inert and well-formed and
  // the term re-typechecks at a type compatible with the program type.
  auto check_config = [&](const Configuration& c, long step_no) {
    if (!recon.extend_to(c.store)) {
      violate("preservation", step_no, recon.error);
      return;
    }
    if (!inert_env(*recon.env)) {
      violate("inertness", step_no, "reconstructed environment is not inert");
      return;
    }
    {
      Checker chk(check_fuel);
      Judgement wf = chk.wf_env(recon.env);
      if (wf.no())
        violate("well-formedness", step_no, wf.message);
    }
    Checker chk(check_fuel);
    SynthResult s = chk.synth(recon.env, c.term);
    if (!s.yes()) {
      if (s.verdict == Verdict::No)
        violate("preservation", step_no,
                "term no longer typechecks: " + s.message);
      return;  // Unknown cannot contradict preservation
    }
    bool compatible = false, undecided = false;
    for (const Candidate& cand : s.candidates) {
      Checker sub(check_fuel);
      Judgement js = sub.subtype(recon.env, cand.type, rep.program_type);
      if (js.yes()) {
        compatible = true;
        break;
      }
      if (js.unknown()) undecided = true;
    }
    if (!compatible) {
      // Synthesis cannot enumerate introduction forms (Rec-I, Fld-I), so ask
      // the checker directly whether the term still has the program type.
      Checker direct(check_fuel);
      Judgement jc = direct.check(recon.env, c.term, rep.program_type);
      if (jc.yes())
        compatible = true;
      else if (jc.unknown())
        undecided = true;
    }
    if (!compatible && !undecided)
      violate("preservation", step_no,
              "term does not re-typecheck at the program type " +
                  pretty(rep.program_type));
  };

  Configuration cur{Store{}, program};
  check_config(cur, 0);
  std::vector<std::pair<size_t, TermRef>> seen;  // (store size, term)
  for (long n = 0; n < step_fuel; ++n) {
    if (cur.term->kind == TermKind::Stable) {
      rep.outcome.final = cur;
      rep.outcome.steps = rep.steps_checked;
      if (cur.term->stable.is_path) {
        rep.outcome.kind = RunOutcome::Kind::NormalPath;
        rep.outcome.path = cur.term->stable.path;
        rep.outcome.resolution =
            lookup_star(cur.store, cur.term->stable, lookup_fuel);
      } else {
        rep.outcome.kind = RunOutcome::Kind::Value;
        rep.outcome.value = cur.term->stable.val;
      }
      return rep;
    }
    for (const auto& [sz, t] : seen)
      if (sz == cur.store.items.size() && equal(t, cur.term)) {
        rep.repeated_configuration = true;
        rep.outcome.kind = RunOutcome::Kind::Diverged;
        rep.outcome.final = cur;
        rep.outcome.steps = rep.steps_checked;
        return rep;
      }
    seen.emplace_back(cur.store.items.size(), cur.term);

    StepResult r = step(cur, lookup_fuel);
    if (!r.next) {
      // A typechecked program must never be stuck (progress).
      violate("progress", n,
              r.error ? r.error->reason : "no reduction rule applies");
      rep.outcome.kind = RunOutcome::Kind::Stuck;
      rep.outcome.final = cur;
      rep.outcome.reason = r.error ? r.error->reason : "stuck";
      return rep;
    }
    // Canonical forms: whenever Apply fires on p, looking p up must yield a
    // lambda within the lookup fuel.
    if (r.info->inner == StepRule::Apply) {
      const Term* app = detail::app_under_ctx(cur.term, r.info->ctx_depth);
      if (!app) {
        violate("canonical-forms", n, "Apply fired but no application found");
      } else {
        LookupOutcome lo =
            lookup_star(cur.store, Stable::of_path(app->fn), lookup_fuel);
        if (lo.kind != LookupOutcome::Kind::Value ||
            lo.value->kind != ValueKind::Lambda)
          violate("canonical-forms", n,
                  "applied path " + pretty(app->fn) +
                      " does not look up to a lambda");
      }
    }
    // Store monotonicity: bindings only appended, never changed.
    if (r.next->store.items.size() < cur.store.items.size())
      violate("store-monotonicity", n, "store shrank");
    else
      for (size_t i = 0; i < cur.store.items.size(); ++i)
        if (cur.store.items[i].first != r.next->store.items[i].first ||
            cur.store.items[i].second != r.next->store.items[i].second) {
          violate("store-monotonicity", n, "existing binding changed");
          break;
        }

    cur = *r.next;
    rep.steps_checked++;
    check_config(cur, rep.steps_checked);
  }
  rep.outcome.kind = RunOutcome::Kind::Diverged;
  rep.outcome.final = cur;
  rep.outcome.steps = rep.steps_checked;
  return rep;
}

}  // namespace pdot
