#include "generators.hpp"
#include "qdtl/parser.hpp"
#include "qdtl/printer.hpp"
#include "qdtl/syntax.hpp"

#include <doctest.h>

using namespace qdtl;

namespace {

Signature aircraft_signature() {
    Signature sig;
    sig.add_sort("A");
    sig.add_sort("C");
    sig.add_function({"x", {"A"}, kReal, false});
    sig.add_function({"n", {}, "A", false});
    sig.add_function({"w", {}, kReal, false});
    return sig;
}

FormulaPtr parse_with(const std::string& text, const Signature& sig) {
    ParseContext ctx;
    ctx.sig = sig;
    return parse_formula(text, ctx);
}

}  // namespace

TEST_SUITE("syntax") {

TEST_CASE("typing accepts indexed real comparisons") {
    auto sig = aircraft_signature();
    auto f = make_geq(make_app("x", {make_var("i", "A")}, kReal), make_lit(0));
    CHECK(well_typed(f, sig));
}

TEST_CASE("equality across disjoint sorts is ill-typed") {
    auto sig = aircraft_signature();
    auto f = make_eq(make_var("i", "A"), make_var("j", "C"));
    auto tc = check_types(f, sig);
    CHECK_FALSE(tc.ok());
    CHECK(tc.kind == TypeErrorKind::SortMismatch);
}

TEST_CASE("object sorts have no ordering") {
    auto sig = aircraft_signature();
    auto f = make_geq(make_var("i", "A"), make_var("j", "A"));
    auto tc = check_types(f, sig);
    CHECK(tc.kind == TypeErrorKind::SortMismatch);
    CHECK(tc.path == "formula");
}

TEST_CASE("unknown symbols are reported apart from sort mismatches, with a path") {
    auto sig = aircraft_signature();
    auto f = make_and(make_true(), make_geq(make_app("q", {}, kReal), make_lit(1)));
    auto tc = check_types(f, sig);
    CHECK(tc.kind == TypeErrorKind::UnknownSymbol);
    CHECK(tc.path == "formula.right.lhs");
}

TEST_CASE("differential symbols need a real-valued function") {
    auto sig = aircraft_signature();
    auto bad = make_ode("", "", {Clause{"n", {}, make_lit(1), false}}, nullptr);
    CHECK_FALSE(well_typed(bad, sig));
    auto good = make_ode("i", "A", {Clause{"x", {make_var("i", "A")}, make_lit(1), false}}, nullptr);
    CHECK(well_typed(good, sig));
}

TEST_CASE("assigned symbol may not occur in its own argument") {
    Signature sig;
    sig.add_sort("A");
    sig.add_function({"f", {"A"}, "A", false});
    auto p = make_assign("i", "A", {Clause{"f", {make_app("f", {make_var("i", "A")}, "A")}, make_var("i", "A"), false}});
    CHECK(check_types(p, sig).kind == TypeErrorKind::Malformed);
}

TEST_CASE("tests and domains are first order") {
    auto sig = aircraft_signature();
    auto inner = make_box(make_test(make_true()), make_true());
    CHECK(check_types(make_box(make_test(inner), make_true()), sig).kind == TypeErrorKind::Malformed);
}

TEST_CASE("derived connectives are eliminated") {
    auto a = make_geq(make_app("w", {}, kReal), make_lit(0));
    auto b = make_eq(make_app("w", {}, kReal), make_lit(1));
    CHECK(make_or(a, b)->kind == FormulaKind::Not);
    CHECK(make_implies(a, b)->left->kind == FormulaKind::And);
    auto leq = make_leq(make_lit(1), make_lit(2));
    CHECK(leq->kind == FormulaKind::Geq);
    CHECK(equal(leq->lhs, make_lit(2)));
    CHECK(make_lt(make_lit(1), make_lit(2))->left->kind == FormulaKind::Geq);
    CHECK(make_lit(-3)->kind == TermKind::Neg);
}

TEST_CASE("substitution replaces free occurrences") {
    auto f = parse_formula("x >= 0");
    auto g = substitute(f, "x", make_lit(5), true);
    CHECK(to_string(g) == "5 >= 0");
}

TEST_CASE("substitution renames bound variables to avoid capture") {
    auto f = make_forall("y", kReal, make_geq(make_var("x", kReal), make_var("y", kReal)));
    auto g = substitute(f, "x", make_var("y", kReal));
    REQUIRE(g->kind == FormulaKind::Forall);
    CHECK(g->var != "y");
    CHECK(equal(g->left->lhs, make_var("y", kReal)));
    CHECK(equal(g->left->rhs, make_var(g->var, kReal)));
}

TEST_CASE("substitution into a modality that writes the target is rejected") {
    auto f = parse_formula("[x := 1] x >= 0");
    CHECK_THROWS_AS(substitute(f, "x", make_lit(2), true), SubstitutionError);
    try {
        substitute(f, "x", make_lit(2), true);
    } catch (const SubstitutionError& e) {
        CHECK(std::string(e.what()).find("modality") != std::string::npos);
    }
}

TEST_CASE("substitution of a replacement whose symbols the modality writes is rejected") {
    auto f = parse_formula("forall r:R [y := 1] r >= 0");
    auto body = f->left;
    CHECK_THROWS_AS(substitute(body, "r", make_app("y", {}, kReal)), SubstitutionError);
    CHECK_NOTHROW(substitute(body, "r", make_app("z", {}, kReal)));
}

TEST_CASE("bound variable is not substituted") {
    auto f = make_forall("x", kReal, make_geq(make_var("x", kReal), make_lit(0)));
    CHECK(substitute(f, "x", make_lit(1)) == f);
}

TEST_CASE("conditional terms expand at their atom") {
    auto f = parse_formula("if p >= 0 then a else b fi >= 1");
    auto g = desugar_conditional(f);
    CHECK(to_string(g) == "(p >= 0 -> a >= 1) & (p < 0 -> b >= 1)");
    CHECK_FALSE(contains_ite(g));
    CHECK(equal(desugar_conditional(g), g));
}

TEST_CASE("formula without conditionals is unchanged") {
    auto f = parse_formula("a >= 1 & b = 2");
    CHECK(desugar_conditional(f) == f);
}

TEST_CASE("conditional under an assignment that changes its condition is rejected") {
    auto f = parse_formula("[a := if a >= 0 then 1 else 2 fi] a >= 1");
    CHECK_THROWS_AS(desugar_conditional(f), DesugarError);
    auto ok = parse_formula("[a := if b >= 0 then 1 else 2 fi] a >= 1");
    auto g = desugar_conditional(ok);
    CHECK(to_string(g) == "(b >= 0 -> [a := 1] a >= 1) & (b < 0 -> [a := 2] a >= 1)");
}

TEST_CASE("new desugars to object choice, freshness test and existence update") {
    auto sig = aircraft_signature();
    auto p = desugar_new(make_new("n", "A"), sig);
    auto n = make_app("n", {}, "A");
    auto expected = make_seq(make_assign("j", "A", {Clause{"n", {}, make_var("j", "A"), false}}),
                             make_seq(make_test(make_eq(make_app(kExistence, {n}, kReal), make_lit(0))),
                                      make_assign("", "", {Clause{kExistence, {n}, make_lit(1), false}})));
    CHECK(equal(p, expected));
    CHECK(well_typed(p, sig));
}

TEST_CASE("new over the reals is rejected") {
    auto sig = aircraft_signature();
    CHECK_THROWS_AS(desugar_new(make_new("w", kReal), sig), DesugarError);
}

TEST_CASE("program without new is unchanged") {
    auto sig = aircraft_signature();
    auto p = make_test(make_true());
    CHECK(desugar_new(p, sig) == p);
}

TEST_CASE("injectivity accepts the bound variable vector and single positions") {
    auto i = make_var("i", "A");
    auto ok = make_assign("i", "A", {Clause{"x", {i}, make_lit(1), false}});
    CHECK(is_injective(*ok));
    auto clock = make_assign("i", "A", {Clause{"w", {}, make_lit(0), false}});
    CHECK(is_injective(*clock));
    auto collapse = make_assign("i", "A", {Clause{"w", {}, make_app("x", {i}, kReal), false}});
    CHECK_FALSE(is_injective(*collapse));
    CHECK(injectivity_diagnostic(*collapse).find("depending on i") != std::string::npos);
    auto shifted = make_assign("i", "A", {Clause{"x", {make_app("n", {}, "A")}, make_lit(1), false}});
    CHECK_FALSE(is_injective(*shifted));
}

TEST_CASE("enabledness of programs") {
    CHECK(always_enabled(parse_program("x := 1; y' = 1")));
    CHECK_FALSE(always_enabled(parse_program("x' = 1 & x <= 1")));
    CHECK(always_enabled(parse_program("(x' = 1 & x <= 1) ++ x := 0")));
    CHECK(always_enabled(parse_program("(?false)*")));
}

TEST_CASE("typing is stable under admissible substitution") {
    auto sig = testing::fuzz_signature();
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        testing::Gen gen(seed);
        testing::Gen::Scope scope = {{"r", kReal}};
        auto f = gen.formula(scope, 3);
        REQUIRE(well_typed(f, sig));
        auto replacement = gen.term({}, 2);
        try {
            auto g = substitute(f, "r", replacement);
            CHECK(well_typed(g, sig));
            ++checked;
        } catch (const SubstitutionError&) {
        }
    }
    CHECK(checked > 200);
}

}  // TEST_SUITE
