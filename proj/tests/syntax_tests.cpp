#include <catch2/catch_amalgamated.hpp>

#include "pdot/pretty.hpp"
#include "pdot/syntax.hpp"

using namespace pdot;

namespace {

Path p(const std::string& spec) {
  // tiny helper: "x.a.b" -> Path
  Path out = Path::var(spec.substr(0, spec.find('.')));
  size_t at = spec.find('.');
  while (at != std::string::npos) {
    size_t next = spec.find('.', at + 1);
    out.fields.push_back(spec.substr(at + 1, next == std::string::npos
                                                  ? std::string::npos
                                                  : next - at - 1));
    at = next;
  }
  return out;
}

}  // namespace

TEST_CASE("open replaces the bound slot with a path") {
  // body {a: #0.b.type} opened with x -> {a: x.b.type}
  TypeRef body = Type::fld("a", Type::sngl(Path::idx(0).sel("b")));
  TypeRef opened = open_with_path(body, Path::var("x"));
  CHECK(equal(opened, Type::fld("a", Type::sngl(p("x.b")))));
}

TEST_CASE("open on the body of a function type matches All-E instantiation") {
  // all-body (result type #0.A) opened with q -> q.A
  TypeRef body = Type::sel(Path::idx(0), "A");
  CHECK(equal(open_with_path(body, p("q")), Type::sel(p("q"), "A")));
}

TEST_CASE("open leaves slot-free bodies unchanged") {
  TypeRef body = Type::and_(Type::top(), Type::fld("a", Type::bot()));
  CHECK(equal(open_with_path(body, p("x")), body));
}

TEST_CASE("open under nested binders targets the right level") {
  // mu(y) {a: #1.type} has #1 pointing one binder out; opening the outer
  // slot with x reaches through the mu.
  TypeRef body = Type::rec("y", Type::fld("a", Type::sngl(Path::idx(1))));
  TypeRef opened = open_with_path(body, p("x"));
  CHECK(equal(opened, Type::rec("y", Type::fld("a", Type::sngl(p("x"))))));
}

TEST_CASE("subst rewrites roots and keeps suffixes") {
  // x -> y.b in x.c gives y.b.c
  CHECK(subst_name("x", p("y.b"), p("x.c")) == p("y.b.c"));
}

TEST_CASE("subst rewrites definition bodies like Def-New") {
  // y -> p.a in {b = y.b} gives {b = p.a.b}
  DefList defs{Def::field_def("b", Stable::of_path(p("y.b")))};
  DefList got = subst_name("y", p("p.a"), defs);
  REQUIRE(got.size() == 1);
  CHECK(got[0].init.path == p("p.a.b"));
}

TEST_CASE("subst is the identity on types without the name") {
  CHECK(equal(subst_name("x", p("p"), Type::top()), Type::top()));
  TypeRef t = Type::fld("a", Type::sngl(p("y.b")));
  CHECK(equal(subst_name("x", p("p"), t), t));
}

TEST_CASE("free_names excludes bound variables") {
  // all(z: Top) z.A  -- z is bound
  TypeRef t = Type::all("z", Type::top(), Type::sel(Path::idx(0), "A"));
  CHECK(free_names(t).empty());
}

TEST_CASE("free_names enumerates roots") {
  TypeRef t = Type::and_(Type::fld("a", Type::sngl(p("x.b"))),
                         Type::sel(p("y"), "A"));
  std::set<std::string> want{"x", "y"};
  CHECK(free_names(t) == want);
  CHECK(free_names(Type::bot()).empty());
}

TEST_CASE("replace_prefix rewrites prefixes only") {
  CHECK(*replace_prefix(p("p"), p("q"), p("p.b")) == p("q.b"));
  CHECK(*replace_prefix(p("x"), p("y"), p("x")) == p("y"));
  CHECK(!replace_prefix(p("x.a"), p("y"), p("x.b")).has_value());
}

TEST_CASE("repl_candidates finds every single-occurrence replacement") {
  SECTION("projection path with suffix") {
    auto got = repl_candidates(p("p"), p("q"), Type::sel(p("p.b"), "A"));
    REQUIRE(got.size() == 1);
    CHECK(equal(*got.begin(), Type::sel(p("q.b"), "A")));
  }
  SECTION("two occurrences give two results") {
    TypeRef t = Type::and_(Type::fld("a", Type::sngl(p("p"))),
                           Type::fld("b", Type::sngl(p("p"))));
    auto got = repl_candidates(p("p"), p("q"), t);
    REQUIRE(got.size() == 2);
    TypeRef first = Type::and_(Type::fld("a", Type::sngl(p("q"))),
                               Type::fld("b", Type::sngl(p("p"))));
    TypeRef second = Type::and_(Type::fld("a", Type::sngl(p("p"))),
                                Type::fld("b", Type::sngl(p("q"))));
    bool saw_first = false, saw_second = false;
    for (const auto& u : got) {
      saw_first |= equal(u, first);
      saw_second |= equal(u, second);
    }
    CHECK(saw_first);
    CHECK(saw_second);
  }
  SECTION("no occurrence, empty set") {
    CHECK(repl_candidates(p("p"), p("q"), Type::top()).empty());
  }
}

TEST_CASE("repl_all rewrites every occurrence") {
  TypeRef t = Type::and_(Type::fld("a", Type::sngl(p("p"))),
                         Type::fld("b", Type::sngl(p("p"))));
  TypeRef want = Type::and_(Type::fld("a", Type::sngl(p("q"))),
                            Type::fld("b", Type::sngl(p("q"))));
  CHECK(equal(repl_all(p("p"), p("q"), t), want));
  CHECK(equal(repl_all(p("p"), p("q"), Type::bot()), Type::bot()));

  // (x, y, all(z: x.A) x.B) -> all(z: y.A) y.B
  TypeRef f = Type::all("z", Type::sel(p("x"), "A"), Type::sel(p("x"), "B"));
  TypeRef fw = Type::all("z", Type::sel(p("y"), "A"), Type::sel(p("y"), "B"));
  CHECK(equal(repl_all(p("x"), p("y"), f), fw));
}

TEST_CASE("pretty prints the fixed grammar forms") {
  CHECK(pretty(Type::top()) == "Top");
  CHECK(pretty(Type::sngl(p("x.a"))) == "x.a.type");
  CHECK(pretty(Type::sel(p("x"), "A")) == "x.A");
  CHECK(pretty(Type::typ("A", Type::bot(), Type::top())) ==
        "{type A: Bot .. Top}");
}
