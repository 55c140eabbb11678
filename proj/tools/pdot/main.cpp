// pdot: command-line front end. Subcommands: check, run, trace, typeof,
// lookup, harness, dump. Exit codes: 0 ok, 1 type error, 2 IO/usage,
// 3 diverged, 4 stuck.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pdot/dump.hpp"
#include "pdot/eval.hpp"
#include "pdot/harness.hpp"
#include "pdot/parser.hpp"
#include "pdot/pretty.hpp"
#include "pdot/typing.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pdot;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitTypeError = 1;
constexpr int kExitIo = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitStuck = 4;

struct Options {
  long fuel = Checker::kDefaultFuel;
  long run_fuel = 100000;
  long lookup_fuel = 10000;
  bool json_out = false;
  bool unsafe = false;
};

std::string clamp_render(const Diagnostic& d, const std::string& origin) {
  Diagnostic c = d;
  if (c.span.begin.line <= 0) c.span.begin = {1, 1};
  return render(c, origin);
}

json diag_json(const Diagnostic& d) {
  return json{{"severity", d.severity == Diagnostic::Severity::Error ? "error"
                                                                     : "warning"},
              {"message", d.message},
              {"rule", d.rule},
              {"line", d.span.begin.line > 0 ? d.span.begin.line : 1},
              {"col", d.span.begin.col > 0 ? d.span.begin.col : 1}};
}

void emit_diags(const std::vector<Diagnostic>& diags, const std::string& origin,
                bool as_json) {
  if (as_json) {
    json out = json::array();
    for (const auto& d : diags) out.push_back(diag_json(d));
    std::cout << out.dump(2) << "\n";
    return;
  }
  for (const auto& d : diags) std::cerr << clamp_render(d, origin) << "\n";
}

Diagnostic from_judgement_error(const std::string& rule, const std::string& msg,
                                int line, int col) {
  Diagnostic d;
  d.message = msg;
  d.rule = rule;
  d.span.begin = {line > 0 ? line : 1, col > 0 ? col : 1};
  d.span.end = d.span.begin;
  return d;
}

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Parses a file; on failure prints diagnostics and returns null.
TermRef load(const std::string& file, const Options& opt, int& exit_code) {
  auto text = read_file(file);
  if (!text) {
    std::cerr << "pdot: cannot read '" << file << "'\n";
    exit_code = kExitIo;
    return nullptr;
  }
  ParseResult pr = parse_program({*text, file});
  if (!pr.ok()) {
    emit_diags(pr.diagnostics, file, opt.json_out);
    exit_code = kExitTypeError;
    return nullptr;
  }
  return pr.term;
}

// Typechecks and reports; returns the result (caller inspects .ok).
Checker::TypecheckResult check_or_report(const TermRef& t, const std::string& file,
                                         const Options& opt) {
  Checker chk(opt.fuel);
  auto r = chk.typecheck(t);
  if (!r.ok) {
    std::string rule = r.fuel_out ? "fuel" : r.rule;
    emit_diags({from_judgement_error(rule, r.message, r.line, r.col)}, file,
               opt.json_out);
  }
  return r;
}

std::string outcome_word(RunOutcome::Kind k) {
  switch (k) {
    case RunOutcome::Kind::Value: return "value";
    case RunOutcome::Kind::NormalPath: return "normal-path";
    case RunOutcome::Kind::Diverged: return "diverged";
    case RunOutcome::Kind::Stuck: return "stuck";
  }
  return "?";
}

std::string lookup_word(LookupOutcome::Kind k) {
  switch (k) {
    case LookupOutcome::Kind::Value: return "value";
    case LookupOutcome::Kind::Cycle: return "cycle";
    case LookupOutcome::Kind::Stuck: return "stuck";
    case LookupOutcome::Kind::FuelOut: return "fuel-out";
  }
  return "?";
}

json lookup_json(const LookupOutcome& lo) {
  json j{{"outcome", lookup_word(lo.kind)}, {"steps", lo.steps}};
  if (lo.kind == LookupOutcome::Kind::Value) j["value"] = pretty(lo.value);
  if (lo.kind == LookupOutcome::Kind::Cycle) {
    json cyc = json::array();
    for (const auto& s : lo.cycle) cyc.push_back(pretty(s));
    j["cycle"] = cyc;
  }
  if (lo.kind == LookupOutcome::Kind::Stuck) j["reason"] = lo.reason;
  return j;
}

void print_lookup(const LookupOutcome& lo, bool with_rows) {
  if (with_rows) {
    long n = 1;
    for (const auto& row : lo.rows) std::cout << lookup_trace_line(n++, row) << "\n";
  }
  switch (lo.kind) {
    case LookupOutcome::Kind::Value:
      std::cout << "lookup: value " << pretty(lo.value) << " in " << lo.steps
                << " step(s)\n";
      break;
    case LookupOutcome::Kind::Cycle: {
      std::cout << "lookup: cycle {";
      for (size_t i = 0; i < lo.cycle.size(); ++i)
        std::cout << (i ? ", " : " ") << pretty(lo.cycle[i]);
      std::cout << " }\n";
      break;
    }
    case LookupOutcome::Kind::Stuck:
      std::cout << "lookup: stuck: " << lo.reason << "\n";
      break;
    case LookupOutcome::Kind::FuelOut:
      std::cout << "lookup: fuel exhausted after " << lo.steps << " step(s)\n";
      break;
  }
}

int run_exit_code(const RunOutcome& out) {
  switch (out.kind) {
    case RunOutcome::Kind::Value:
    case RunOutcome::Kind::NormalPath: return kExitOk;
    case RunOutcome::Kind::Diverged: return kExitDiverged;
    case RunOutcome::Kind::Stuck: return kExitStuck;
  }
  return kExitStuck;
}

int cmd_check(const std::string& file, const Options& opt) {
  int code = kExitOk;
  TermRef t = load(file, opt, code);
  if (!t) return code;
  auto r = check_or_report(t, file, opt);
  if (!r.ok) return kExitTypeError;
  if (opt.json_out) {
    json out{{"ok", true}, {"type", pretty(r.type)}};
    json cands = json::array();
    for (const auto& c : r.candidates) cands.push_back(pretty(c.type));
    out["types"] = cands;
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << pretty(r.type) << "\n";
  }
  return kExitOk;
}

int cmd_run_or_trace(const std::string& file, const Options& opt, bool trace_mode) {
  int code = kExitOk;
  TermRef t = load(file, opt, code);
  if (!t) return code;
  bool typechecked = false;
  if (!opt.unsafe) {
    auto r = check_or_report(t, file, opt);
    if (!r.ok) return kExitTypeError;
    typechecked = true;
  }
  RunOutcome out = run(t, opt.run_fuel, opt.lookup_fuel, trace_mode);
  if (trace_mode) {
    long n = 1;
    for (const auto& e : out.trace)
      std::cout << trace_line(n++, e.info, e.config.term) << "\n";
  }
  if (opt.json_out) {
    json j{{"outcome", outcome_word(out.kind)}, {"steps", out.steps}};
    switch (out.kind) {
      case RunOutcome::Kind::Value: j["value"] = pretty(out.value); break;
      case RunOutcome::Kind::NormalPath:
        j["path"] = pretty(out.path);
        j["resolution"] = lookup_json(out.resolution);
        break;
      case RunOutcome::Kind::Diverged: break;
      case RunOutcome::Kind::Stuck: j["reason"] = out.reason; break;
    }
    std::cout << j.dump(2) << "\n";
  } else {
    switch (out.kind) {
      case RunOutcome::Kind::Value:
        std::cout << "value after " << out.steps << " step(s): "
                  << pretty(out.value) << "\n";
        break;
      case RunOutcome::Kind::NormalPath:
        std::cout << "normal form after " << out.steps << " step(s): "
                  << pretty(out.path) << "\n";
        print_lookup(out.resolution, /*with_rows=*/trace_mode);
        break;
      case RunOutcome::Kind::Diverged:
        std::cout << "diverged: fuel of " << opt.run_fuel
                  << " step(s) exhausted\n";
        break;
      case RunOutcome::Kind::Stuck:
        std::cout << "stuck after " << out.steps << " step(s): " << out.reason
                  << "\n";
        if (typechecked)
          std::cout << "*** METATHEORY VIOLATION: a typechecked program is "
                       "stuck; this must never happen ***\n";
        break;
    }
  }
  return run_exit_code(out);
}

// Shared helper for typeof/lookup: run the program, hand back the final
// configuration and the parsed path expression.
int final_config_and_path(const std::string& file, const std::string& expr,
                          const Options& opt, Configuration& cfg, Path& path) {
  int code = kExitOk;
  TermRef t = load(file, opt, code);
  if (!t) return code;
  if (!opt.unsafe) {
    auto r = check_or_report(t, file, opt);
    if (!r.ok) return kExitTypeError;
  }
  PathParseResult pp = parse_path_expr(expr);
  if (!pp.path) {
    emit_diags(pp.diagnostics, "<path>", opt.json_out);
    return kExitIo;
  }
  RunOutcome out = run(t, opt.run_fuel, opt.lookup_fuel);
  if (out.kind == RunOutcome::Kind::Diverged || out.kind == RunOutcome::Kind::Stuck) {
    std::cerr << "pdot: program did not reach a normal form ("
              << outcome_word(out.kind) << ")\n";
    return run_exit_code(out);
  }
  if (!pp.path->root.is_bound() &&
      !out.final.store.contains(pp.path->root.name)) {
    std::cerr << "pdot: name '" << pp.path->root.name
              << "' is not bound in the final store\n";
    return kExitTypeError;
  }
  cfg = out.final;
  path = *pp.path;
  return kExitOk;
}

int cmd_typeof(const std::string& file, const std::string& expr,
               const Options& opt) {
  Configuration cfg;
  Path path;
  int code = final_config_and_path(file, expr, opt, cfg, path);
  if (code != kExitOk) return code;
  detail::EnvReconstructor recon{opt.fuel};
  if (!recon.extend_to(cfg.store)) {
    std::cerr << "pdot: " << recon.error << "\n";
    return kExitTypeError;
  }
  Checker chk(opt.fuel);
  SynthResult s = chk.synth(recon.env, Term::path(path));
  if (!s.yes()) {
    emit_diags({from_judgement_error(s.rule, s.message, 0, 0)}, file,
               opt.json_out);
    return kExitTypeError;
  }
  if (opt.json_out) {
    json types = json::array();
    for (const auto& c : s.candidates) types.push_back(pretty(c.type));
    std::cout << json{{"path", pretty(path)}, {"types", types}}.dump(2) << "\n";
  } else {
    for (const auto& c : s.candidates)
      std::cout << pretty(path) << " : " << pretty(c.type) << "\n";
  }
  return kExitOk;
}

int cmd_lookup(const std::string& file, const std::string& expr,
               const Options& opt) {
  Configuration cfg;
  Path path;
  int code = final_config_and_path(file, expr, opt, cfg, path);
  if (code != kExitOk) return code;
  LookupOutcome lo = lookup_star(cfg.store, Stable::of_path(path), opt.lookup_fuel);
  if (opt.json_out) {
    json j = lookup_json(lo);
    json rows = json::array();
    long n = 1;
    for (const auto& row : lo.rows) rows.push_back(lookup_trace_line(n++, row));
    j["rows"] = rows;
    std::cout << j.dump(2) << "\n";
  } else {
    print_lookup(lo, /*with_rows=*/true);
  }
  return lo.kind == LookupOutcome::Kind::Value ||
                 lo.kind == LookupOutcome::Kind::Cycle
             ? kExitOk
             : kExitTypeError;
}

int cmd_harness(const std::string& dir, const Options& opt) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    std::cerr << "pdot: '" << dir << "' is not a directory\n";
    return kExitIo;
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".pdot") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  bool all_ok = true;
  json matrix = json::array();
  for (const auto& f : files) {
    std::string name = f.filename().string();
    auto text = read_file(f.string());
    std::string status, note;
    if (!text) {
      status = "skip";
      note = "unreadable";
    } else {
      ParseResult pr = parse_program({*text, f.string()});
      if (!pr.ok()) {
        status = "skip";
        note = "does not parse: " +
               (pr.diagnostics.empty() ? "?" : pr.diagnostics[0].message);
      } else {
        HarnessReport rep = harness_run(pr.term, 2000, opt.lookup_fuel, opt.fuel);
        if (!rep.typechecked) {
          status = "skip";
          note = "does not typecheck: " + rep.typecheck_error;
        } else if (!rep.violations.empty()) {
          status = "FAIL";
          all_ok = false;
          note = rep.violations[0].kind + " at step " +
                 std::to_string(rep.violations[0].step_no) + ": " +
                 rep.violations[0].detail;
        } else {
          status = "pass";
          note = outcome_word(rep.outcome.kind) + " (" +
                 std::to_string(rep.steps_checked) + " step(s) checked" +
                 (rep.repeated_configuration ? ", loop detected" : "") + ")";
        }
      }
    }
    if (opt.json_out)
      matrix.push_back(json{{"file", name}, {"status", status}, {"note", note}});
    else
      std::cout << (status == "FAIL" ? "FAIL" : status) << "  " << name << "  "
                << note << "\n";
  }
  if (opt.json_out) std::cout << matrix.dump(2) << "\n";
  return all_ok ? kExitOk : kExitTypeError;
}

int cmd_dump(const std::string& file, const Options& opt) {
  int code = kExitOk;
  TermRef t = load(file, opt, code);
  if (!t) return code;
  std::cout << dump_ast(t) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pdot: typechecker and interpreter for a DOT calculus with "
               "fully path-dependent types"};
  app.require_subcommand(1);

  Options opt;
  if (const char* env_fuel = std::getenv("PDOT_FUEL")) {
    char* end = nullptr;
    long v = std::strtol(env_fuel, &end, 10);
    if (end && *end == '\0' && v > 0) opt.fuel = v;
  }

  std::string file, path_expr, dir;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--fuel", opt.run_fuel, "reduction step budget");
    sub->add_option("--check-fuel", opt.fuel, "typechecker rule budget");
    sub->add_option("--lookup-fuel", opt.lookup_fuel, "path lookup step budget");
    sub->add_flag("--json", opt.json_out, "machine-readable output");
    sub->add_flag("--unsafe", opt.unsafe, "skip typechecking before running");
  };

  CLI::App* check = app.add_subcommand("check", "typecheck a program");
  check->add_option("file", file)->required();
  add_common(check);

  CLI::App* runc = app.add_subcommand("run", "run a program to normal form");
  runc->add_option("file", file)->required();
  add_common(runc);

  CLI::App* trace = app.add_subcommand("trace", "run and print every step");
  trace->add_option("file", file)->required();
  add_common(trace);

  CLI::App* typeofc = app.add_subcommand("typeof", "types of a path in the final store");
  typeofc->add_option("file", file)->required();
  typeofc->add_option("path", path_expr)->required();
  add_common(typeofc);

  CLI::App* lookupc = app.add_subcommand("lookup", "look a path up in the final store");
  lookupc->add_option("file", file)->required();
  lookupc->add_option("path", path_expr)->required();
  add_common(lookupc);

  CLI::App* harnessc = app.add_subcommand(
      "harness", "run every program in a directory and assert the soundness "
                 "invariants along each trace");
  harnessc->add_option("dir", dir)->required();
  add_common(harnessc);

  CLI::App* dumpc = app.add_subcommand("dump", "print the AST as JSON");
  dumpc->add_option("file", file)->required();
  add_common(dumpc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitIo;
  }

  if (check->parsed()) return cmd_check(file, opt);
  if (runc->parsed()) return cmd_run_or_trace(file, opt, false);
  if (trace->parsed()) return cmd_run_or_trace(file, opt, true);
  if (typeofc->parsed()) return cmd_typeof(file, path_expr, opt);
  if (lookupc->parsed()) return cmd_lookup(file, path_expr, opt);
  if (harnessc->parsed()) return cmd_harness(dir, opt);
  if (dumpc->parsed()) return cmd_dump(file, opt);
  return kExitIo;
}
