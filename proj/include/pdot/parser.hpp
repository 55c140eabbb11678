// Concrete syntax: lexer, recursive-descent parser and the object-notation
// desugarer. Produces closed core terms with binders resolved to indices.
//
// Grammar summary (ASCII):
//   term  ::= 'let' id '=' term 'in' term | 'lam' '(' id ':' type ')' term
//           | object | path path? | '(' term ')'
//   object::= 'nu' '(' id ':' type ')' '{' defs '}'      core form
//           | 'nu' '(' id '=>' sugardefs ')'             inferred self type
//   defs  ::= def (';' def)* | empty
//   def   ::= Label '=' type | label '=' stable
//   sugардef additionally allows 'label : type = lambda' annotations
//   type  ::= prim ('/\' prim)*
//   prim  ::= 'Top' | 'Bot' | 'mu' '(' id ')' type | 'all' '(' id ':' type ')' type
//           | '{' 'type' Label ':' type '..' type '}' | '{' label ':' type '}'
//           | path '.type' | path '.' Label | '(' type ')'
// Labels starting with an uppercase letter are type labels; others are term
// labels. Comments run from '//' to end of line.

#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pdot/syntax.hpp"

namespace pdot {

struct SourcePos {
  int line = 1;
  int col = 1;
};

struct Span {
  SourcePos begin, end;
};

struct Diagnostic {
  enum class Severity { Error, Warning };
  Severity severity = Severity::Error;
  std::string message;
  Span span;
  std::string rule;  // violated rule name, when one applies
};

struct SourceProgram {
  std::string text;
  std::string origin = "<stdin>";
};

inline std::string render(const Diagnostic& d, const std::string& origin) {
  std::string sev = d.severity == Diagnostic::Severity::Error ? "error" : "warning";
  std::string head = origin + ":" + std::to_string(d.span.begin.line) + ":" +
                     std::to_string(d.span.begin.col) + ": " + sev + ": ";
  if (!d.rule.empty()) head += d.rule + ": ";
  return head + d.message;
}

namespace lex {

enum class Tok {
  Ident, KwLet, KwIn, KwNu, KwLam, KwMu, KwAll, KwType, KwTop, KwBot,
  LParen, RParen, LBrace, RBrace, Colon, Dot, DotDot, Semi, Eq, FatArrow,
  AndSym, End,
};

struct Token {
  Tok kind;
  std::string text;
  Span span;
};

inline bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
inline bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'' ||
         c == '$';
}

struct Lexer {
  const std::string& src;
  size_t pos = 0;
  SourcePos at;
  std::optional<Diagnostic> error;

  explicit Lexer(const std::string& s) : src(s) {}

  char peek() const { return pos < src.size() ? src[pos] : '\0'; }
  char peek2() const { return pos + 1 < src.size() ? src[pos + 1] : '\0'; }

  void advance() {
    if (pos >= src.size()) return;
    if (src[pos] == '\n') {
      at.line++;
      at.col = 1;
    } else {
      at.col++;
    }
    pos++;
  }

  void skip_trivia() {
    for (;;) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '/' && peek2() == '/') {
        while (peek() && peek() != '\n') advance();
      } else {
        break;
      }
    }
  }

  std::vector<Token> run() {
    std::vector<Token> out;
    static const std::map<std::string, Tok> keywords = {
        {"let", Tok::KwLet}, {"in", Tok::KwIn},   {"nu", Tok::KwNu},
        {"lam", Tok::KwLam}, {"mu", Tok::KwMu},   {"all", Tok::KwAll},
        {"type", Tok::KwType}, {"Top", Tok::KwTop}, {"Bot", Tok::KwBot},
    };
    for (;;) {
      skip_trivia();
      SourcePos start = at;
      char c = peek();
      if (!c) {
        out.push_back({Tok::End, "", {start, start}});
        return out;
      }
      auto emit = [&](Tok k, std::string text) {
        out.push_back({k, std::move(text), {start, at}});
      };
      if (ident_start(c)) {
        std::string word;
        while (ident_char(peek())) {
          word += peek();
          advance();
        }
        auto kw = keywords.find(word);
        emit(kw == keywords.end() ? Tok::Ident : kw->second, word);
        continue;
      }
      switch (c) {
        case '(': advance(); emit(Tok::LParen, "("); continue;
        case ')': advance(); emit(Tok::RParen, ")"); continue;
        case '{': advance(); emit(Tok::LBrace, "{"); continue;
        case '}': advance(); emit(Tok::RBrace, "}"); continue;
        case ':': advance(); emit(Tok::Colon, ":"); continue;
        case ';': advance(); emit(Tok::Semi, ";"); continue;
        case '.':
          advance();
          if (peek() == '.') {
            advance();
            emit(Tok::DotDot, "..");
          } else {
            emit(Tok::Dot, ".");
          }
          continue;
        case '=':
          advance();
          if (peek() == '>') {
            advance();
            emit(Tok::FatArrow, "=>");
          } else {
            emit(Tok::Eq, "=");
          }
          continue;
        case '/':
          advance();
          if (peek() == '\\') {
            advance();
            emit(Tok::AndSym, "/\\");
            continue;
          }
          error = Diagnostic{Diagnostic::Severity::Error,
                             "stray '/' (expected '/\\' or '//' comment)",
                             {start, at}};
          out.push_back({Tok::End, "", {start, at}});
          return out;
        default:
          error = Diagnostic{Diagnostic::Severity::Error,
                             std::string("unexpected character '") + c + "'",
                             {start, at}};
          out.push_back({Tok::End, "", {start, at}});
          return out;
      }
    }
  }
};

}  // namespace lex

inline bool is_type_label(const std::string& s) {
  return !s.empty() && std::isupper(static_cast<unsigned char>(s[0]));
}

namespace detail {

template <class T>
std::shared_ptr<const T> at_pos(std::shared_ptr<const T> n, const Span& sp) {
  auto* m = const_cast<T*>(n.get());
  m->line = sp.begin.line;
  m->col = sp.begin.col;
  return n;
}

// Raw (pre-desugaring) object member, as parsed from either object form.
struct RawDef {
  bool is_type = false;
  std::string label;
  Span span;
  TypeRef type;                 // type member payload
  std::optional<TypeRef> anno;  // sugar: declared lambda type
  std::optional<Stable> init;   // field payload (core or sugar)
};

struct Parser {
  std::vector<lex::Token> toks;
  size_t ix = 0;
  std::vector<std::string> scope;  // innermost binder last
  std::vector<Diagnostic> diags;
  bool allow_free = false;  // path expressions on the CLI leave roots free

  const lex::Token& cur() const { return toks[ix]; }
  const lex::Token& next() { return toks[ix++]; }
  bool at(lex::Tok k) const { return cur().kind == k; }

  bool fail(const std::string& msg, std::string rule = "syntax") {
    if (diags.empty())
      diags.push_back({Diagnostic::Severity::Error, msg, cur().span, std::move(rule)});
    return false;
  }

  bool expect(lex::Tok k, const std::string& what) {
    if (!at(k)) return fail("expected " + what);
    next();
    return true;
  }

  std::optional<std::string> ident(const std::string& what) {
    if (!at(lex::Tok::Ident)) {
      fail("expected " + what);
      return std::nullopt;
    }
    return next().text;
  }

  // Binders resolve to indices immediately; free roots are rejected unless
  // allow_free is set.
  std::optional<Var> resolve(const std::string& name, const Span& sp) {
    for (size_t i = scope.size(); i-- > 0;)
      if (scope[i] == name)
        return Var::index(static_cast<int>(scope.size() - 1 - i));
    if (allow_free) return Var::free(name);
    diags.push_back({Diagnostic::Severity::Error,
                     "unbound identifier '" + name + "'", sp, "scope"});
    return std::nullopt;
  }

  // path ::= id ('.' term-label)*; stops before '.type', '.' TypeLabel and '..'
  std::optional<Path> path() {
    Span sp = cur().span;
    auto root = ident("identifier");
    if (!root) return std::nullopt;
    auto var = resolve(*root, sp);
    if (!var) return std::nullopt;
    Path p{*var, {}};
    while (at(lex::Tok::Dot)) {
      const lex::Token& dot = cur();
      const lex::Token& after = toks[ix + 1];
      if (after.kind != lex::Tok::Ident || is_type_label(after.text)) break;
      (void)dot;
      next();
      p.fields.push_back(next().text);
    }
    return p;
  }

  // ---- types ----

  std::optional<TypeRef> type() {
    auto first = prim_type();
    if (!first) return std::nullopt;
    TypeRef acc = *first;
    while (at(lex::Tok::AndSym)) {
      next();
      auto rhs = prim_type();
      if (!rhs) return std::nullopt;
      acc = Type::and_(acc, *rhs);
    }
    return acc;
  }

  std::optional<TypeRef> prim_type() {
    switch (cur().kind) {
      case lex::Tok::KwTop: next(); return Type::top();
      case lex::Tok::KwBot: next(); return Type::bot();
      case lex::Tok::LParen: {
        next();
        auto t = type();
        if (!t || !expect(lex::Tok::RParen, "')'")) return std::nullopt;
        return t;
      }
      case lex::Tok::KwMu: {
        next();
        if (!expect(lex::Tok::LParen, "'('")) return std::nullopt;
        auto x = ident("binder name");
        if (!x || !expect(lex::Tok::RParen, "')'")) return std::nullopt;
        scope.push_back(*x);
        auto body = type();
        scope.pop_back();
        if (!body) return std::nullopt;
        return Type::rec(*x, *body);
      }
      case lex::Tok::KwAll: {
        next();
        if (!expect(lex::Tok::LParen, "'('")) return std::nullopt;
        auto x = ident("binder name");
        if (!x || !expect(lex::Tok::Colon, "':'")) return std::nullopt;
        auto param = type();
        if (!param || !expect(lex::Tok::RParen, "')'")) return std::nullopt;
        scope.push_back(*x);
        auto body = type();
        scope.pop_back();
        if (!body) return std::nullopt;
        return Type::all(*x, *param, *body);
      }
      case lex::Tok::LBrace: {
        next();
        if (at(lex::Tok::KwType)) {
          next();
          auto a = ident("type member label");
          if (!a) return std::nullopt;
          if (!is_type_label(*a))
            return fail("type member label must start uppercase: '" + *a + "'",
                        "labels"), std::nullopt;
          if (!expect(lex::Tok::Colon, "':'")) return std::nullopt;
          auto lo = type();
          if (!lo || !expect(lex::Tok::DotDot, "'..'")) return std::nullopt;
          auto hi = type();
          if (!hi || !expect(lex::Tok::RBrace, "'}'")) return std::nullopt;
          return Type::typ(*a, *lo, *hi);
        }
        auto a = ident("field label");
        if (!a) return std::nullopt;
        if (is_type_label(*a))
          return fail("field label must start lowercase: '" + *a +
                          "' (use '{type " + *a + ": ..}' for type members)",
                      "labels"), std::nullopt;
        if (!expect(lex::Tok::Colon, "':'")) return std::nullopt;
        auto t = type();
        if (!t || !expect(lex::Tok::RBrace, "'}'")) return std::nullopt;
        return Type::fld(*a, *t);
      }
      case lex::Tok::Ident: {
        auto p = path();
        if (!p) return std::nullopt;
        if (!at(lex::Tok::Dot))
          return fail("a path in type position must end in '.type' or a type "
                      "projection '.A'"),
                 std::nullopt;
        next();
        if (at(lex::Tok::KwType)) {
          next();
          return Type::sngl(*p);
        }
        auto lab = ident("type label after '.'");
        if (!lab) return std::nullopt;
        if (!is_type_label(*lab))
          return fail("expected '.type' or an uppercase type label after '.'"),
                 std::nullopt;
        return Type::sel(*p, *lab);
      }
      default: return fail("expected a type"), std::nullopt;
    }
  }

  // ---- definitions ----

  std::optional<std::vector<RawDef>> raw_defs(bool sugar) {
    std::vector<RawDef> out;
    if (sugar ? at(lex::Tok::RParen) : at(lex::Tok::RBrace)) return out;
    for (;;) {
      RawDef d;
      d.span = cur().span;
      auto lab = ident("member label");
      if (!lab) return std::nullopt;
      d.label = *lab;
      d.is_type = is_type_label(d.label);
      if (d.is_type) {
        if (!expect(lex::Tok::Eq, "'='")) return std::nullopt;
        auto t = type();
        if (!t) return std::nullopt;
        d.type = *t;
      } else if (sugar && at(lex::Tok::Colon)) {
        next();
        auto anno = type();
        if (!anno) return std::nullopt;
        d.anno = *anno;
        if (!expect(lex::Tok::Eq, "'='")) return std::nullopt;
        auto s = stable_init();
        if (!s) return std::nullopt;
        d.init = *s;
      } else {
        if (!expect(lex::Tok::Eq, "'='")) return std::nullopt;
        auto s = stable_init();
        if (!s) return std::nullopt;
        d.init = *s;
      }
      for (const RawDef& prev : out)
        if (prev.label == d.label && prev.is_type == d.is_type) {
          diags.push_back({Diagnostic::Severity::Error,
                           "duplicate definition label '" + d.label + "'",
                           d.span, "AndDef-I"});
          return std::nullopt;
        }
      out.push_back(std::move(d));
      if (at(lex::Tok::Semi)) {
        next();
        continue;
      }
      return out;
    }
  }

  std::optional<Stable> stable_init() {
    if (at(lex::Tok::KwLam) || at(lex::Tok::KwNu)) {
      auto v = value();
      if (!v) return std::nullopt;
      return Stable::of_value(*v);
    }
    auto p = path();
    if (!p) return std::nullopt;
    return Stable::of_path(*p);
  }

  // ---- values and terms ----

  std::optional<ValueRef> value() {
    if (at(lex::Tok::KwLam)) {
      Span lam_span = cur().span;
      next();
      if (!expect(lex::Tok::LParen, "'('")) return std::nullopt;
      auto x = ident("parameter name");
      if (!x || !expect(lex::Tok::Colon, "':'")) return std::nullopt;
      auto param = type();
      if (!param || !expect(lex::Tok::RParen, "')'")) return std::nullopt;
      scope.push_back(*x);
      auto body = term();
      scope.pop_back();
      if (!body) return std::nullopt;
      return at_pos(Value::lambda(*x, *param, *body), lam_span);
    }
    if (at(lex::Tok::KwNu)) {
      Span nu_span = cur().span;
      next();
      if (!expect(lex::Tok::LParen, "'('")) return std::nullopt;
      auto x = ident("self name");
      if (!x) return std::nullopt;
      if (at(lex::Tok::FatArrow)) {
        next();
        scope.push_back(*x);
        auto ds = raw_defs(/*sugar=*/true);
        scope.pop_back();
        if (!ds || !expect(lex::Tok::RParen, "')'")) return std::nullopt;
        return desugar_object(*x, *ds, nu_span);
      }
      if (!expect(lex::Tok::Colon, "':'")) return std::nullopt;
      scope.push_back(*x);
      auto self_type = type();
      if (!self_type) {
        scope.pop_back();
        return std::nullopt;
      }
      if (!expect(lex::Tok::RParen, "')'") || !expect(lex::Tok::LBrace, "'{'")) {
        scope.pop_back();
        return std::nullopt;
      }
      auto ds = raw_defs(/*sugar=*/false);
      scope.pop_back();
      if (!ds || !expect(lex::Tok::RBrace, "'}'")) return std::nullopt;
      DefList defs;
      for (RawDef& d : *ds) {
        Def nd = d.is_type ? Def::type_def(d.label, d.type)
                           : Def::field_def(d.label, *d.init);
        nd.line = d.span.begin.line;
        nd.col = d.span.begin.col;
        defs.push_back(std::move(nd));
      }
      return at_pos(Value::object(*x, *self_type, std::move(defs)), nu_span);
    }
    fail("expected a value");
    return std::nullopt;
  }

  // Self-type reconstruction for the inferred object form: type definitions
  // get tight bounds, path fields get singleton types, nested objects their
  // recursive type, and lambdas their declared arrow type.
  std::optional<ValueRef> desugar_object(const std::string& self,
                                         std::vector<RawDef>& ds, Span nu_span) {
    TypeRef self_type;
    DefList defs;
    for (RawDef& d : ds) {
      TypeRef decl;
      auto push = [&](Def nd) {
        nd.line = d.span.begin.line;
        nd.col = d.span.begin.col;
        defs.push_back(std::move(nd));
      };
      if (d.is_type) {
        decl = Type::typ(d.label, d.type, d.type);
        push(Def::type_def(d.label, d.type));
      } else if (d.init->is_path) {
        decl = Type::fld(d.label, Type::sngl(d.init->path));
        push(Def::field_def(d.label, *d.init));
      } else if (d.init->val->kind == ValueKind::Object) {
        decl = Type::fld(d.label,
                         Type::rec(d.init->val->binder, d.init->val->type));
        push(Def::field_def(d.label, *d.init));
      } else {  // lambda member
        if (!d.anno) {
          diags.push_back({Diagnostic::Severity::Error,
                           "lambda member '" + d.label +
                               "' needs a declared arrow type ('" + d.label +
                               " : all(..) .. = lam(..) ..')",
                           d.span, "sugar"});
          return std::nullopt;
        }
        if ((*d.anno)->kind != TypeKind::All) {
          diags.push_back({Diagnostic::Severity::Error,
                           "declared type of lambda member '" + d.label +
                               "' must be a function type",
                           d.span, "sugar"});
          return std::nullopt;
        }
        decl = Type::fld(d.label, *d.anno);
        push(Def::field_def(d.label, *d.init));
      }
      self_type = self_type ? Type::and_(self_type, decl) : decl;
    }
    if (!self_type) {
      diags.push_back({Diagnostic::Severity::Error,
                       "an inferred object needs at least one member", nu_span,
                       "sugar"});
      return std::nullopt;
    }
    return Value::object(self, self_type, std::move(defs));
  }

  std::optional<TermRef> term() {
    Span sp = cur().span;
    switch (cur().kind) {
      case lex::Tok::KwLet: {
        next();
        auto x = ident("binder name");
        if (!x || !expect(lex::Tok::Eq, "'='")) return std::nullopt;
        auto bound = term();
        if (!bound || !expect(lex::Tok::KwIn, "'in'")) return std::nullopt;
        scope.push_back(*x);
        auto body = term();
        scope.pop_back();
        if (!body) return std::nullopt;
        return at_pos(Term::let(*x, *bound, *body), sp);
      }
      case lex::Tok::KwLam:
      case lex::Tok::KwNu: {
        auto v = value();
        if (!v) return std::nullopt;
        return at_pos(Term::value(*v), sp);
      }
      case lex::Tok::LParen: {
        next();
        auto t = term();
        if (!t || !expect(lex::Tok::RParen, "')'")) return std::nullopt;
        return t;
      }
      case lex::Tok::Ident: {
        auto p = path();
        if (!p) return std::nullopt;
        if (at(lex::Tok::Ident)) {  // application: two juxtaposed paths
          auto q = path();
          if (!q) return std::nullopt;
          return at_pos(Term::app(*p, *q), sp);
        }
        return at_pos(Term::path(*p), sp);
      }
      default: return fail("expected a term"), std::nullopt;
    }
  }
};

}  // namespace detail

struct ParseResult {
  TermRef term;  // null on failure
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return term != nullptr; }
};

struct PathParseResult {
  std::optional<Path> path;
  std::vector<Diagnostic> diagnostics;
};

inline ParseResult parse_program(const SourceProgram& src) {
  lex::Lexer lexer(src.text);
  auto toks = lexer.run();
  if (lexer.error) return {nullptr, {*lexer.error}};
  detail::Parser p{std::move(toks)};
  auto t = p.term();
  if (t && !p.at(lex::Tok::End))
    p.fail("unexpected trailing input after program");
  if (!p.diags.empty() || !t) return {nullptr, std::move(p.diags)};
  return {*t, {}};
}

// Path expressions on the CLI use the surface grammar with free roots.
inline PathParseResult parse_path_expr(const std::string& text) {
  lex::Lexer lexer(text);
  auto toks = lexer.run();
  if (lexer.error) return {std::nullopt, {*lexer.error}};
  detail::Parser p{std::move(toks)};
  p.allow_free = true;
  auto pa = p.path();
  if (pa && !p.at(lex::Tok::End)) p.fail("unexpected trailing input after path");
  if (!p.diags.empty() || !pa) return {std::nullopt, std::move(p.diags)};
  return {*pa, {}};
}

}  // namespace pdot
