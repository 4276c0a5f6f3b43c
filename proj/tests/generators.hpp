#pragma once

// Random well-typed ASTs over a fixed small signature, shared by the fuzz and
// property tests.

#include "qdtl/syntax.hpp"

#include <random>
#include <string>
#include <vector>

namespace qdtl::testing {

/// sort A; x, v: A -> R; y, z: R; n: A.
inline Signature fuzz_signature() {
    Signature sig;
    sig.add_sort("A");
    sig.add_function({"x", {"A"}, kReal, false});
    sig.add_function({"v", {"A"}, kReal, false});
    sig.add_function({"y", {}, kReal, false});
    sig.add_function({"z", {}, kReal, false});
    sig.add_function({"n", {}, "A", false});
    return sig;
}

struct GenOptions {
    int depth = 3;
    bool temporal = true;       // box/dia under modalities
    bool real_quantifiers = true;
    bool conditionals = true;
    bool primes = false;        // primed assignments
    bool loops = true;
    bool odes = true;
    bool linear = false;        // only linear right-hand sides with small integer literals
    bool modalities = true;
    bool existence = true;      // E(i) terms and assignments
};

class Gen {
public:
    explicit Gen(std::uint64_t seed, GenOptions opt = {}) : rng_(seed), opt_(opt) {}

    using Scope = std::vector<std::pair<std::string, std::string>>;

    int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
    bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

    TermPtr object(const Scope& scope) {
        std::vector<TermPtr> options = {make_app("n", {}, "A")};
        for (const auto& v : scope)
            if (v.second == "A") options.push_back(make_var(v.first, "A"));
        return options[pick(static_cast<int>(options.size()))];
    }

    TermPtr literal() {
        if (opt_.linear) return make_lit(pick(5) - 2);
        switch (pick(4)) {
            case 0: return make_lit(Rational(pick(7) - 3, 2));
            default: return make_lit(pick(7) - 3);
        }
    }

    TermPtr real_atom(const Scope& scope) {
        std::vector<TermPtr> options = {make_app("y", {}, kReal), make_app("z", {}, kReal)};
        options.push_back(make_app("x", {object(scope)}, kReal));
        options.push_back(make_app("v", {object(scope)}, kReal));
        if (opt_.existence && !opt_.linear) options.push_back(make_app(kExistence, {object(scope)}, kReal));
        for (const auto& v : scope)
            if (v.second == kReal) options.push_back(make_var(v.first, kReal));
        return options[pick(static_cast<int>(options.size()))];
    }

    TermPtr term(const Scope& scope, int depth) {
        if (depth <= 0 || coin(0.35)) return coin(0.3) ? literal() : real_atom(scope);
        if (opt_.linear) {
            switch (pick(4)) {
                case 0: return make_add(term(scope, depth - 1), term(scope, depth - 1));
                case 1: return make_sub(term(scope, depth - 1), term(scope, depth - 1));
                case 2: return make_mul(literal(), term(scope, depth - 1));
                default: return make_neg(term(scope, depth - 1));
            }
        }
        switch (pick(opt_.conditionals ? 7 : 6)) {
            case 0: return make_add(term(scope, depth - 1), term(scope, depth - 1));
            case 1: return make_sub(term(scope, depth - 1), term(scope, depth - 1));
            case 2: return make_mul(term(scope, depth - 1), term(scope, depth - 1));
            case 3: return make_neg(term(scope, depth - 1));
            case 4: return make_pow(term(scope, depth - 1), static_cast<unsigned>(1 + pick(3)));
            case 5: return real_atom(scope);
            default: return make_ite(first_order(scope, 1), term(scope, depth - 1), term(scope, depth - 1));
        }
    }

    FormulaPtr atom(const Scope& scope) {
        switch (pick(5)) {
            case 0: return make_eq(term(scope, 1), term(scope, 1));
            case 1: return make_lt(term(scope, 1), term(scope, 1));
            case 2: return make_eq(object(scope), object(scope));
            default: return make_geq(term(scope, 2), term(scope, 1));
        }
    }

    std::string fresh_var(const Scope& scope, const std::string& sort) {
        static const std::vector<std::string> obj = {"i", "j", "k"}, real = {"r", "s", "u"};
        const auto& pool = sort == "A" ? obj : real;
        for (const auto& name : pool) {
            bool used = false;
            for (const auto& v : scope) used = used || v.first == name;
            if (!used) return name;
        }
        return pool[pick(static_cast<int>(pool.size()))];
    }

    FormulaPtr first_order(const Scope& scope, int depth) { return formula(scope, depth, false); }

    FormulaPtr formula(const Scope& scope, int depth, bool modal = true) {
        if (depth <= 0 || coin(0.25)) return atom(scope);
        const int n = modal && opt_.modalities ? 9 : 7;
        switch (pick(n)) {
            case 0: return make_not(formula(scope, depth - 1, modal));
            case 1: return make_and(formula(scope, depth - 1, modal), formula(scope, depth - 1, modal));
            case 2: return make_or(formula(scope, depth - 1, modal), formula(scope, depth - 1, modal));
            case 3: return make_implies(formula(scope, depth - 1, modal), formula(scope, depth - 1, modal));
            case 4:
            case 5: {
                const std::string sort = opt_.real_quantifiers && coin(0.3) ? kReal : "A";
                Scope inner = scope;
                const std::string v = fresh_var(scope, sort);
                inner.emplace_back(v, sort);
                auto body = formula(inner, depth - 1, modal);
                return pick(2) ? make_forall(v, sort, body) : make_exists(v, sort, body);
            }
            case 6: return atom(scope);
            default: {
                auto p = program(scope, depth - 1);
                Temporal t = Temporal::None;
                if (opt_.temporal) t = static_cast<Temporal>(pick(3));
                auto body = formula(scope, depth - 1, modal);
                return pick(2) ? make_box(p, body, t) : make_diamond(p, body, t);
            }
        }
    }

    std::vector<Clause> clause_list(const Scope& scope, const std::string& binder, bool ode) {
        std::vector<Clause> cs;
        Scope inner = scope;
        if (!binder.empty()) inner.emplace_back(binder, "A");
        const TermPtr pos = binder.empty() ? object(scope) : make_var(binder, "A");
        std::vector<std::string> targets = {"x", "v"};
        if (!ode && opt_.existence && !opt_.linear) targets.push_back(kExistence);
        const int count = 1 + pick(2);
        for (int k = 0; k < count && k < static_cast<int>(targets.size()); ++k) {
            Clause c;
            c.fn = targets[k];
            c.args = {pos};
            c.rhs = term(inner, 1);
            if (!ode && opt_.primes && c.fn != kExistence) c.primed = coin(0.3);
            cs.push_back(c);
        }
        if (binder.empty() && coin(0.5)) cs.push_back(Clause{"y", {}, term(inner, 1), false});
        return cs;
    }

    ProgramPtr program(const Scope& scope, int depth) {
        const bool leaf = depth <= 0 || coin(0.3);
        const int n_leaf = opt_.odes ? 3 : 2;
        if (leaf) {
            switch (pick(n_leaf)) {
                case 0: {
                    const std::string b = coin(0.6) ? fresh_var(scope, "A") : "";
                    return make_assign(b, b.empty() ? "" : "A", clause_list(scope, b, false));
                }
                case 1: return make_test(first_order(scope, 1));
                default: {
                    const std::string b = coin(0.6) ? fresh_var(scope, "A") : "";
                    Scope inner = scope;
                    if (!b.empty()) inner.emplace_back(b, "A");
                    FormulaPtr dom = coin(0.5) ? first_order(inner, 1) : nullptr;
                    return make_ode(b, b.empty() ? "" : "A", clause_list(scope, b, true), dom);
                }
            }
        }
        switch (pick(opt_.loops ? 3 : 2)) {
            case 0: return make_choice(program(scope, depth - 1), program(scope, depth - 1));
            case 1: return make_seq(program(scope, depth - 1), program(scope, depth - 1));
            default: return make_loop(program(scope, depth - 1));
        }
    }

    std::mt19937_64& rng() { return rng_; }

private:
    std::mt19937_64 rng_;
    GenOptions opt_;
};

}  // namespace qdtl::testing
