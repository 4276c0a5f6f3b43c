#include "properties.hpp"
#include "qdtl/oracle.hpp"
#include "qdtl/parser.hpp"
#include "qdtl/poly.hpp"
#include "qdtl/printer.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <random>

using namespace qdtl;

namespace {

Polynomial norm(const std::string& text) { return normalize(parse_term(text)); }

LinearConstraint geq(const std::string& text) { return {norm(text), Relation::Geq}; }

std::string solver_path() {
    if (const char* p = std::getenv("QDTL_SOLVER")) return p;
    for (const char* dir : {"/usr/local/bin", "/usr/bin"}) {
        const auto z3 = std::filesystem::path(dir) / "z3";
        if (std::filesystem::exists(z3)) return z3.string();
    }
    return "";
}

// Quantifier-free formulas over a, b, c with small polynomial atoms.
class ArithGen {
public:
    explicit ArithGen(std::uint64_t seed) : rng_(seed) {}

    TermPtr term(int depth) {
        std::uniform_int_distribution<int> d(0, 6);
        if (depth == 0) {
            const int k = d(rng_);
            if (k < 3) return make_var(std::string(1, char('a' + k)), kReal);
            return make_lit(k - 4);
        }
        switch (d(rng_)) {
            case 0: return make_add(term(depth - 1), term(depth - 1));
            case 1: return make_sub(term(depth - 1), term(depth - 1));
            case 2: return make_mul(term(depth - 1), term(depth - 1));
            case 3: return make_pow(term(depth - 1), 2);
            default: return term(0);
        }
    }

    FormulaPtr formula(int depth) {
        std::uniform_int_distribution<int> d(0, 7);
        if (depth == 0) {
            switch (d(rng_) % 3) {
                case 0: return make_geq(term(2), term(1));
                case 1: return make_eq(term(1), term(1));
                default: return make_gt(term(2), term(1));
            }
        }
        switch (d(rng_)) {
            case 0: return make_not(formula(depth - 1));
            case 1: return make_and(formula(depth - 1), formula(depth - 1));
            case 2: return make_or(formula(depth - 1), formula(depth - 1));
            case 3: return make_implies(formula(depth - 1), formula(depth - 1));
            case 4: {
                auto f = formula(depth - 1);
                return make_or(f, make_not(f));
            }
            case 5: return make_implies(make_and(formula(0), formula(0)), formula(0));
            default: return formula(0);
        }
    }

private:
    std::mt19937_64 rng_;
};

// Atoms are normalized once per node; the cache keeps nodes alive so addresses stay unique.
bool eval(const FormulaPtr& f, const std::map<std::string, double>& at) {
    static std::map<const Formula*, std::pair<FormulaPtr, Polynomial>> cache;
    auto diff = [&]() -> const Polynomial& {
        auto it = cache.find(f.get());
        if (it == cache.end())
            it = cache.emplace(f.get(), std::make_pair(f, normalize(f->lhs) - normalize(f->rhs))).first;
        return it->second.second;
    };
    switch (f->kind) {
        case FormulaKind::True: return true;
        case FormulaKind::False: return false;
        case FormulaKind::Eq: return diff().evaluate(at) == 0.0;
        case FormulaKind::Geq: return diff().evaluate(at) >= 0.0;
        case FormulaKind::Not: return !eval(f->left, at);
        case FormulaKind::And: return eval(f->left, at) && eval(f->right, at);
        default: throw std::logic_error("unexpected formula");
    }
}

}  // namespace

TEST_SUITE("poly") {

TEST_CASE("rotational cross terms cancel") {
    CHECK(norm("2*(x1(i) - x1(j))*(-omega*(x2(i) - x2(j))) + 2*(x2(i) - x2(j))*omega*(x1(i) - x1(j))").is_zero());
}

TEST_CASE("binomial identity") { CHECK(norm("(a + b)^2 - a^2 - 2*a*b - b^2").is_zero()); }

TEST_CASE("tangential derivative identity") {
    CHECK(norm("-omega*d2(i) - (-omega*d2(j)) - (-omega*(d2(i) - d2(j)))").is_zero());
}

TEST_CASE("canonical form is independent of input order") {
    CHECK(norm("b*a + 1/2 - a*b*1 + c") == norm("c + 0.5"));
    CHECK(norm("(a - b)^3").to_string() == norm("a^3 - 3*a^2*b + 3*a*b^2 - b^3").to_string());
    CHECK(norm("2*a - 3").to_string() == "2*a - 3");
}

TEST_CASE("conditionals are not polynomials") {
    CHECK_THROWS_AS(normalize(parse_term("if a >= 0 then a else b fi")), UnsupportedTerm);
}

TEST_CASE("to_term round trips through normalize") {
    AtomTable atoms;
    auto p = normalize(parse_term("(x(i) - 2*y)^2 - 1/3"), &atoms);
    CHECK(normalize(to_term(p, atoms)) == p);
}

TEST_CASE("normalize is a ring homomorphism on generated term pairs") {
    const auto st = testing::ring_homomorphism(1000);
    CAPTURE(st.first_mismatch);
    CHECK(st.pairs == 1000);
    CHECK(st.mismatches == 0);
}

TEST_CASE("Fourier-Motzkin on a bounded variable leaves nothing") {
    auto out = fourier_motzkin({geq("x"), geq("-x + 1")}, "x");
    CHECK(out.empty());
}

TEST_CASE("Fourier-Motzkin combines lower and upper bounds") {
    auto out = fourier_motzkin({geq("x - a"), geq("b - x")}, "x");
    REQUIRE(out.size() == 1);
    CHECK(out[0].rel == Relation::Geq);
    CHECK(out[0].poly == norm("b - a"));
}

TEST_CASE("Fourier-Motzkin keeps strictness") {
    auto out = fourier_motzkin({{norm("x - a"), Relation::Gt}, geq("b - x")}, "x");
    REQUIRE(out.size() == 1);
    CHECK(out[0].rel == Relation::Gt);
}

TEST_CASE("Fourier-Motzkin eliminates through an equality") {
    auto out = fourier_motzkin({{norm("x - 2*a"), Relation::Eq}, geq("x - b")}, "x");
    REQUIRE(out.size() == 1);
    CHECK(out[0].poly == norm("2*a - b"));
}

TEST_CASE("nonlinear occurrences are rejected") {
    CHECK_THROWS_AS(fourier_motzkin({geq("x^2 - a")}, "x"), UnsupportedTerm);
    CHECK_THROWS_AS(fourier_motzkin({geq("a*x")}, "x"), UnsupportedTerm);
    CHECK_NOTHROW(fourier_motzkin({geq("x - a*b")}, "x"));
}

TEST_CASE("Fourier-Motzkin agrees with the grid oracle") {
    const auto st = testing::fm_against_grid(500, 2024);
    CAPTURE(st.first_mismatch);
    CHECK(st.systems == 500);
    CHECK(st.mismatches == 0);
    CHECK(st.bad_models == 0);
    CHECK(st.feasible > 50);
    CHECK(st.feasible < 450);
}

TEST_CASE("oracle closes the rotational identity") {
    auto r = decide_universal(parse_formula("2*a*(-omega*b) + 2*b*omega*a >= 0"));
    CHECK(r.verdict == Verdict::Valid);
    CHECK(r.method == OracleMethod::Identity);
}

TEST_CASE("oracle uses the sign heuristic on squares") {
    auto r = decide_universal(parse_formula("forall x:R x^2 >= -1"));
    CHECK(r.verdict == Verdict::Valid);
    CHECK(r.method == OracleMethod::Sign);
    auto s = decide_universal(parse_formula("a >= 0 -> a*b^2 + 3 > 0"));
    CHECK(s.verdict == Verdict::Valid);
}

TEST_CASE("linear real quantifier elimination") {
    auto body = parse_formula("exists x:R (x >= a & -x >= -b)")->left;
    auto residue = eliminate_exists("x", body);
    CHECK(decide_universal(make_iff(residue, parse_formula("a <= b"))).verdict == Verdict::Valid);
    auto r = decide_universal(parse_formula("forall a:R forall b:R (a <= b -> exists x:R (x >= a & x <= b))"));
    CHECK(r.verdict == Verdict::Valid);
}

TEST_CASE("false constants are invalid with an empty witness") {
    auto r = decide_universal(parse_formula("0 >= 1"));
    CHECK(r.verdict == Verdict::Invalid);
    CHECK(r.witness.empty());
}

TEST_CASE("invalid verdicts come with a checked witness") {
    auto f = parse_formula("a >= 0 & b > a -> 2*a >= b");
    auto r = decide_universal(f);
    REQUIRE(r.verdict == Verdict::Invalid);
    std::map<std::string, double> at;
    for (const auto& [k, v] : r.witness) at[k] = to_double(v);
    CHECK_FALSE(eval(f, at));
}

TEST_CASE("transitivity closes by Fourier-Motzkin") {
    auto r = decide_universal(parse_formula("a >= b & b > c -> a > c"));
    CHECK(r.verdict == Verdict::Valid);
    CHECK(r.method == OracleMethod::FourierMotzkin);
}

TEST_CASE("indexed equalities substitute under object instantiation") {
    ParseContext ctx;
    ctx.infer = true;
    ctx.sig.add_sort("A");
    ctx.sig.add_function({"x1", {"A"}, kReal, false});
    ctx.sig.add_function({"x2", {"A"}, kReal, false});
    ctx.sig.add_function({"d1", {"A"}, kReal, false});
    ctx.sig.add_function({"d2", {"A"}, kReal, false});
    auto f = parse_formula(
        "(forall i:A forall j:A (d1(i) - d1(j) = -omega*(x2(i) - x2(j)) & d2(i) - d2(j) = omega*(x1(i) - x1(j)))) -> "
        "forall i:A forall j:A 2*(x1(i) - x1(j))*(d1(i) - d1(j)) + 2*(x2(i) - x2(j))*(d2(i) - d2(j)) >= 0",
        ctx);
    auto r = decide_universal(f);
    CHECK(r.verdict == Verdict::Valid);
    CHECK(r.method == OracleMethod::Substitution);
    auto g = parse_formula("forall i:A forall j:A 2*(x1(i) - x1(j))*(d1(i) - d1(j)) >= 0", ctx);
    CHECK(decide_universal(g).verdict != Verdict::Valid);
}

TEST_CASE("object equalities merge indexed atoms") {
    ParseContext ctx;
    ctx.sig.add_sort("A");
    ctx.sig.add_function({"x", {"A"}, kReal, false});
    auto f = parse_formula("forall i:A forall j:A (i = j -> x(i) = x(j))", ctx);
    CHECK(decide_universal(f).verdict == Verdict::Valid);
    auto g = parse_formula("forall i:A forall j:A x(i) = x(j)", ctx);
    CHECK(decide_universal(g).verdict != Verdict::Valid);
}

TEST_CASE("modal subformulas are opaque propositions") {
    auto f = parse_formula("[a := 1] a >= 0 -> [a := 1] a >= 0");
    CHECK(decide_universal(f).verdict == Verdict::Valid);
    auto g = parse_formula("[a := 1] a >= 0");
    auto r = decide_universal(g);
    CHECK(r.verdict == Verdict::Unknown);
    CHECK(r.approximate);
}

TEST_CASE("oracle never calls a falsifiable formula valid") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> val(-10, 10);
    int valid = 0, invalid = 0;
    for (std::uint64_t seed = 0; seed < 400; ++seed) {
        ArithGen gen(seed);
        auto f = gen.formula(3);
        auto r = decide_universal(f);
        if (r.verdict == Verdict::Valid) {
            ++valid;
            for (int k = 0; k < 10000; ++k) {
                std::map<std::string, double> at = {
                    {"a", val(rng) / 2.0}, {"b", val(rng) / 2.0}, {"c", val(rng) / 2.0}};
                if (!eval(f, at)) {
                    FAIL_CHECK(to_string(f) << " falsified");
                    break;
                }
            }
        } else if (r.verdict == Verdict::Invalid) {
            ++invalid;
            std::map<std::string, double> at = {{"a", 0}, {"b", 0}, {"c", 0}};
            for (const auto& [name, v] : r.witness) at[name] = to_double(v);
            CHECK_MESSAGE(!eval(f, at), to_string(f));
        }
    }
    CHECK(valid > 40);
    CHECK(invalid > 40);
}

TEST_CASE("solver exchange format") {
    auto q = export_solver_query(parse_formula("forall x:R x^2 >= 0"));
    CHECK(q.find("(set-logic ALL)") != std::string::npos);
    CHECK(q.find("(assert (not (forall ((|x| Real))") != std::string::npos);
    CHECK(q.find("(check-sat)") != std::string::npos);
    CHECK(import_solver_verdict("unsat\n").verdict == Verdict::Valid);
    CHECK(import_solver_verdict("sat\n").verdict == Verdict::Invalid);
    CHECK(import_solver_verdict("timeout").verdict == Verdict::Unknown);
    CHECK(import_solver_verdict("").verdict == Verdict::Unknown);
}

TEST_CASE("an absent solver leaves the verdict unknown") {
    SolverConfig cfg;
    CHECK(run_solver("(check-sat)", cfg).verdict == Verdict::Unknown);
    cfg.path = "/nonexistent/solver";
    auto v = run_solver("(check-sat)", cfg);
    CHECK(v.verdict == Verdict::Unknown);
}

TEST_CASE("external solver confirms the identity and caches its answer") {
    const std::string path = solver_path();
    if (path.empty()) {
        MESSAGE("no SMT solver found; set QDTL_SOLVER to run this check");
        return;
    }
    const auto dir = std::filesystem::temp_directory_path() / "qdtl-test-cache";
    std::filesystem::remove_all(dir);
    SolverConfig cfg{path, 20000, dir.string()};
    ParseContext ctx;
    ctx.infer = true;
    ctx.sig.add_sort("A");
    ctx.sig.add_function({"x1", {"A"}, kReal, false});
    ctx.sig.add_function({"x2", {"A"}, kReal, false});
    auto f = parse_formula(
        "forall i:A forall j:A 2*(x1(i) - x1(j))*(-omega*(x2(i) - x2(j))) + 2*(x2(i) - x2(j))*omega*(x1(i) - x1(j)) "
        "= 0",
        ctx);
    auto first = run_solver(export_solver_query(f), cfg);
    CHECK(first.verdict == Verdict::Valid);
    CHECK_FALSE(first.cached);
    auto second = run_solver(export_solver_query(f), cfg);
    CHECK(second.verdict == Verdict::Valid);
    CHECK(second.cached);
    CHECK(run_solver(export_solver_query(parse_formula("0 >= 1")), cfg).verdict == Verdict::Invalid);
    // a product of two unknown signs needs the solver
    OracleOptions opt;
    opt.solver = cfg;
    auto r = decide_universal(parse_formula("a >= 1 & b >= 1 -> a*b*b >= 1"), opt);
    CHECK(r.verdict == Verdict::Valid);
    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
