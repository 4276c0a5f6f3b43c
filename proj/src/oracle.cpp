#include "qdtl/oracle.hpp"

#include "qdtl/hash.hpp"
#include "qdtl/printer.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <sys/wait.h>

namespace qdtl {

std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Valid: return "valid";
        case Verdict::Invalid: return "invalid";
        case Verdict::Unknown: return "unknown";
    }
    return "unknown";
}

std::string method_name(OracleMethod m) {
    switch (m) {
        case OracleMethod::None: return "none";
        case OracleMethod::Propositional: return "propositional";
        case OracleMethod::Identity: return "identity";
        case OracleMethod::Substitution: return "substitution";
        case OracleMethod::Sign: return "sign";
        case OracleMethod::FourierMotzkin: return "fm";
        case OracleMethod::External: return "external";
    }
    return "none";
}

SolverConfig solver_from_environment() {
    SolverConfig cfg;
    if (const char* p = std::getenv("QDTL_SOLVER")) cfg.path = p;
    if (const char* c = std::getenv("QDTL_CACHE")) cfg.cache_dir = c;
    return cfg;
}

namespace {

bool is_object_term(const TermPtr& t) {
    return (t->kind == TermKind::Var || t->kind == TermKind::App || t->kind == TermKind::Ite) && !t->sort.empty() &&
           t->sort != kReal;
}

bool is_object_atom(const FormulaPtr& f) { return f->kind == FormulaKind::Eq && is_object_term(f->lhs); }

bool existential_in_sat(const FormulaPtr& f, bool pos) {
    return (f->kind == FormulaKind::Exists && pos) || (f->kind == FormulaKind::Forall && !pos);
}

// ---------------------------------------------------------------- literals and DNF

struct Literal {
    FormulaPtr atom;
    bool positive = true;
};

/// Disjunctive normal form over atoms, modal formulas and quantifiers left whole.
std::vector<std::vector<Literal>> dnf(const FormulaPtr& f, bool pos, std::size_t limit) {
    switch (f->kind) {
        case FormulaKind::True:
            if (pos) return {{}};
            return {};
        case FormulaKind::False:
            if (pos) return {};
            return {{}};
        case FormulaKind::Not: return dnf(f->left, !pos, limit);
        case FormulaKind::And: {
            auto a = dnf(f->left, pos, limit);
            auto b = dnf(f->right, pos, limit);
            std::vector<std::vector<Literal>> out;
            if (pos) {
                if (a.size() * b.size() > limit) throw EliminationLimit("disjunctive normal form too large");
                for (const auto& x : a)
                    for (const auto& y : b) {
                        auto z = x;
                        z.insert(z.end(), y.begin(), y.end());
                        out.push_back(std::move(z));
                    }
            } else {
                out = std::move(a);
                out.insert(out.end(), b.begin(), b.end());
                if (out.size() > limit) throw EliminationLimit("disjunctive normal form too large");
            }
            return out;
        }
        default: return {{Literal{f, pos}}};
    }
}

FormulaPtr constraint_formula(const LinearConstraint& c, const AtomTable& atoms) {
    TermPtr t = to_term(c.poly, atoms);
    switch (c.rel) {
        case Relation::Eq: return make_eq(t, make_lit(0));
        case Relation::Geq: return make_geq(t, make_lit(0));
        case Relation::Gt: return make_gt(t, make_lit(0));
    }
    return make_true();
}

FormulaPtr literal_formula(const Literal& l) { return l.positive ? l.atom : make_not(l.atom); }

// ---------------------------------------------------------------- grounding

class Grounder {
public:
    explicit Grounder(std::set<std::string> used) : used_(std::move(used)) {}

    FormulaPtr run(const FormulaPtr& sat) {
        FormulaPtr f = skolemize_outer(sat, true);
        collect_pool(f, {});
        return ground(f, true, false);
    }

    bool approximate = false;

private:
    TermPtr skolem(const std::string& var, const std::string& sort) {
        const std::string name = fresh_name("sk_" + var, used_);
        used_.insert(name);
        auto c = make_app(name, {}, sort);
        if (sort != kReal) pool_[sort].push_back(c);
        return c;
    }

    FormulaPtr skolemize_outer(const FormulaPtr& f, bool pos) {
        switch (f->kind) {
            case FormulaKind::Not: return make_not(skolemize_outer(f->left, !pos));
            case FormulaKind::And: return make_and(skolemize_outer(f->left, pos), skolemize_outer(f->right, pos));
            case FormulaKind::Forall:
            case FormulaKind::Exists:
                if (existential_in_sat(f, pos))
                    return skolemize_outer(substitute(f->left, f->var, skolem(f->var, f->var_sort)), pos);
                return f;
            default: return f;
        }
    }

    void collect_term(const TermPtr& t, const VarSet& bound) {
        if (is_object_term(t) && t->kind != TermKind::Ite) {
            bool closed = true;
            for (const auto& v : free_vars(t)) closed = closed && !bound.count(v);
            if (closed) {
                auto& vec = pool_[t->sort];
                if (std::none_of(vec.begin(), vec.end(), [&](const TermPtr& u) { return equal(u, t); }))
                    vec.push_back(t);
            }
        }
        for (const auto& a : t->args) collect_term(a, bound);
    }

    void collect_pool(const FormulaPtr& f, VarSet bound) {
        switch (f->kind) {
            case FormulaKind::Eq:
            case FormulaKind::Geq:
                collect_term(f->lhs, bound);
                collect_term(f->rhs, bound);
                return;
            case FormulaKind::Not: collect_pool(f->left, bound); return;
            case FormulaKind::And:
                collect_pool(f->left, bound);
                collect_pool(f->right, bound);
                return;
            case FormulaKind::Forall:
            case FormulaKind::Exists:
                bound.insert({f->var, f->var_sort});
                collect_pool(f->left, bound);
                return;
            default: return;
        }
    }

    static FormulaPtr weaken(bool pos) { return pos ? make_true() : make_false(); }

    // Returns a formula that is implied by f at polarity pos (so satisfiability
    // of the whole is preserved) and equivalent whenever approximate stays unset.
    FormulaPtr ground(const FormulaPtr& f, bool pos, bool under_universal) {
        switch (f->kind) {
            case FormulaKind::Not: return make_not(ground(f->left, !pos, under_universal));
            case FormulaKind::And:
                return make_and(ground(f->left, pos, under_universal), ground(f->right, pos, under_universal));
            case FormulaKind::Forall:
            case FormulaKind::Exists: break;
            default: return f;
        }
        const bool is_real = f->var_sort == kReal;
        if (existential_in_sat(f, pos)) {
            if (!under_universal)
                return ground(substitute(f->left, f->var, skolem(f->var, f->var_sort)), pos, false);
            if (is_real) {
                try {
                    FormulaPtr body = ground(f->left, pos, true);
                    if (f->kind == FormulaKind::Exists) return eliminate_exists(f->var, body);
                    return make_not(eliminate_exists(f->var, make_not(body)));
                } catch (const UnsupportedTerm&) {
                }
            }
            approximate = true;
            return weaken(pos);
        }
        if (!is_real) {
            auto& candidates = pool_[f->var_sort];
            if (candidates.empty()) candidates.push_back(skolem(f->var, f->var_sort));
            approximate = true;
            const auto snapshot = candidates;
            std::vector<FormulaPtr> instances;
            for (const auto& c : snapshot) {
                try {
                    instances.push_back(ground(substitute(f->left, f->var, c), pos, under_universal));
                } catch (const SubstitutionError&) {
                    // a modality writes the candidate; leaving the instance out only weakens
                }
            }
            if (f->kind == FormulaKind::Forall) return make_conj(instances);
            return make_disj(instances);
        }
        try {
            FormulaPtr body = ground(f->left, pos, true);
            if (f->kind == FormulaKind::Exists) return eliminate_exists(f->var, body);
            return make_not(eliminate_exists(f->var, make_not(body)));
        } catch (const UnsupportedTerm&) {
        }
        approximate = true;
        try {
            return ground(substitute(f->left, f->var, make_lit(0)), pos, under_universal);
        } catch (const SubstitutionError&) {
            return weaken(pos);
        }
    }

    std::set<std::string> used_;
    std::map<std::string, std::vector<TermPtr>> pool_;
};

// ---------------------------------------------------------------- branch analysis

struct BranchOutcome {
    bool closed = false;
    OracleMethod method = OracleMethod::None;
    bool exact = false;  // open branch with a checked witness
    std::map<std::string, Rational> witness;
    std::string diagnostic;
};

struct Branch {
    struct Arith {
        TermPtr lhs, rhs;
        Relation rel;  // lhs - rhs rel 0
    };
    std::vector<Arith> arith;
    std::vector<std::pair<TermPtr, TermPtr>> obj_eq, obj_neq;
    std::map<std::string, bool> opaque;
};

class UnionFind {
public:
    std::string find(const std::string& k) {
        auto it = parent_.find(k);
        if (it == parent_.end() || it->second == k) return k;
        const std::string root = find(it->second);
        parent_[k] = root;
        return root;
    }
    void unite(const std::string& a, const std::string& b) {
        const std::string ra = find(a), rb = find(b);
        if (ra == rb) return;
        // the smaller key becomes the representative so results are order independent
        if (ra < rb) parent_[rb] = ra;
        else parent_[ra] = rb;
    }

private:
    std::map<std::string, std::string> parent_;
};

enum class Sign { Unknown, Nonneg, Pos };

Sign sign_of(const Polynomial& p, const std::set<std::string>& nonneg) {
    bool positive_constant = false;
    for (const auto& [m, c] : p.terms()) {
        if (c < 0) return Sign::Unknown;
        if (m.empty()) {
            positive_constant = true;
            continue;
        }
        for (const auto& [x, e] : m)
            if (e % 2 != 0 && !nonneg.count(x)) return Sign::Unknown;
    }
    return positive_constant ? Sign::Pos : Sign::Nonneg;
}

bool sign_refutes(const LinearConstraint& c, const std::set<std::string>& nonneg) {
    const Sign neg = sign_of(-c.poly, nonneg);
    switch (c.rel) {
        case Relation::Geq: return neg == Sign::Pos;
        case Relation::Gt: return neg != Sign::Unknown;
        case Relation::Eq: return neg == Sign::Pos || sign_of(c.poly, nonneg) == Sign::Pos;
    }
    return false;
}

std::set<std::string> nonneg_atoms(const std::vector<LinearConstraint>& cs) {
    std::set<std::string> out;
    for (const auto& c : cs) {
        if (c.rel == Relation::Eq || c.poly.degree() != 1) continue;
        const auto vars = c.poly.indeterminates();
        if (vars.size() != 1) continue;
        const std::string& v = *vars.begin();
        const Rational k = c.poly.coefficient(v, 1).constant_term();
        if (k > 0 && c.poly.constant_term() <= 0) out.insert(v);
    }
    return out;
}

bool refuted_by_constant(const std::vector<LinearConstraint>& cs) {
    for (const auto& c : cs)
        if (c.poly.is_constant() && !holds(c)) return true;
    return false;
}

std::string linear_name(const Monomial& m) { return "[" + monomial_text(m) + "]"; }

Polynomial linearize(const Polynomial& p) {
    Polynomial out;
    for (const auto& [m, c] : p.terms()) {
        unsigned d = 0;
        for (const auto& f : m) d += f.second;
        if (d <= 1) {
            Polynomial t = m.empty() ? Polynomial::constant(1) : Polynomial::indeterminate(m[0].first);
            out = out + t.scaled(c);
        } else {
            out = out + Polynomial::indeterminate(linear_name(m)).scaled(c);
        }
    }
    return out;
}

class Analyzer {
public:
    Analyzer(const OracleOptions& opt, bool approximate) : opt_(opt), approximate_(approximate) {}

    BranchOutcome analyze(const Branch& b) {
        BranchOutcome out;
        UnionFind uf;
        std::map<std::string, TermPtr> rep_term;
        for (const auto& [x, y] : b.obj_eq) {
            rep_term.emplace(to_string(x), x);
            rep_term.emplace(to_string(y), y);
            uf.unite(to_string(x), to_string(y));
        }
        for (const auto& [x, y] : b.obj_neq) {
            if (uf.find(to_string(x)) == uf.find(to_string(y))) {
                out.closed = true;
                out.method = OracleMethod::Propositional;
                return out;
            }
        }
        std::function<TermPtr(const TermPtr&)> canon = [&](const TermPtr& t) -> TermPtr {
            if (is_object_term(t)) {
                const std::string root = uf.find(to_string(t));
                auto it = rep_term.find(root);
                if (it != rep_term.end()) return it->second;
            }
            if (t->args.empty()) return t;
            auto copy = std::make_shared<Term>(*t);
            for (auto& a : copy->args) a = canon(a);
            return copy;
        };

        std::vector<LinearConstraint> cs;
        try {
            for (const auto& a : b.arith) cs.push_back({normalize(canon(a.lhs)) - normalize(canon(a.rhs)), a.rel});
        } catch (const UnsupportedTerm& e) {
            out.diagnostic = e.what();
            return out;
        }
        const auto original = cs;
        if (refuted_by_constant(cs)) return closed(OracleMethod::Identity);

        std::vector<std::pair<std::string, Polynomial>> solved;
        while (true) {
            std::optional<std::size_t> pick;
            std::string var;
            for (std::size_t k = 0; k < cs.size() && !pick; ++k) {
                if (cs[k].rel != Relation::Eq || cs[k].poly.is_constant()) continue;
                for (const auto& v : cs[k].poly.indeterminates()) {
                    if (cs[k].poly.degree_in(v) != 1) continue;
                    const Polynomial a = cs[k].poly.coefficient(v, 1);
                    if (!a.is_constant()) continue;
                    pick = k;
                    var = v;
                    break;
                }
            }
            if (!pick) break;
            const auto& eq = cs[*pick];
            const Rational a = eq.poly.coefficient(var, 1).constant_term();
            const Polynomial solution =
                (eq.poly - Polynomial::indeterminate(var).scaled(a)).scaled(Rational(-1) / a);
            std::vector<LinearConstraint> next;
            for (std::size_t k = 0; k < cs.size(); ++k)
                if (k != *pick) next.push_back({cs[k].poly.substitute(var, solution), cs[k].rel});
            cs = std::move(next);
            solved.emplace_back(var, solution);
            if (refuted_by_constant(cs)) return closed(OracleMethod::Substitution);
        }

        const auto nonneg = nonneg_atoms(cs);
        for (const auto& c : cs)
            if (sign_refutes(c, nonneg)) return closed(OracleMethod::Sign);

        bool linear = true;
        for (const auto& c : cs) linear = linear && c.poly.degree() <= 1;
        std::vector<LinearConstraint> system;
        for (const auto& c : cs) system.push_back({linearize(c.poly), c.rel});
        if (!linear) add_products(cs, system);
        std::optional<std::map<std::string, Rational>> model;
        try {
            model = fm_solve(system, opt_.fm_limit);
        } catch (const EliminationLimit& e) {
            out.diagnostic = e.what();
            return out;
        } catch (const UnsupportedTerm& e) {
            out.diagnostic = e.what();
            return out;
        }
        if (!model) return closed(OracleMethod::FourierMotzkin);
        if (!linear) {
            out.diagnostic = "nonlinear constraints not refuted";
            return out;
        }
        // extend with the eliminated atoms and check the original constraints
        std::map<std::string, Rational> at = *model;
        for (const auto& c : original)
            for (const auto& v : c.poly.indeterminates()) at.emplace(v, 0);
        for (auto it = solved.rbegin(); it != solved.rend(); ++it) {
            auto eval_at = at;
            for (const auto& v : it->second.indeterminates()) eval_at.emplace(v, 0);
            at[it->first] = it->second.evaluate(eval_at);
        }
        bool ok = true;
        for (const auto& c : original) ok = ok && holds(c, at);
        if (!ok) {
            out.diagnostic = "candidate witness failed evaluation";
            return out;
        }
        out.witness = at;
        out.exact = !approximate_ && b.opaque.empty();
        if (!out.exact) out.diagnostic = "arithmetic branch satisfiable under an approximation";
        return out;
    }

private:
    BranchOutcome closed(OracleMethod m) {
        BranchOutcome out;
        out.closed = true;
        out.method = m;
        return out;
    }

    // Squares are nonnegative, and so are products of two nonnegative facts
    // when one of them is linear and the product has degree at most 3.
    void add_products(const std::vector<LinearConstraint>& cs, std::vector<LinearConstraint>& system) {
        std::set<Monomial> squares;
        for (const auto& c : cs)
            for (const auto& [m, k] : c.poly.terms()) {
                bool even = !m.empty();
                for (const auto& f : m) even = even && f.second % 2 == 0;
                if (even) squares.insert(m);
            }
        for (const auto& m : squares) system.push_back({Polynomial::indeterminate(linear_name(m)), Relation::Geq});
        std::vector<const LinearConstraint*> facts;
        for (const auto& c : cs)
            if (c.rel != Relation::Eq && c.poly.degree() >= 1 && c.poly.degree() <= 2) facts.push_back(&c);
        if (facts.size() > 12) return;
        for (std::size_t i = 0; i < facts.size(); ++i)
            for (std::size_t j = i; j < facts.size(); ++j) {
                const auto di = facts[i]->poly.degree(), dj = facts[j]->poly.degree();
                if (std::min(di, dj) != 1 || di + dj > 3) continue;
                const bool strict = facts[i]->rel == Relation::Gt && facts[j]->rel == Relation::Gt;
                system.push_back({linearize(facts[i]->poly * facts[j]->poly), strict ? Relation::Gt : Relation::Geq});
            }
    }

    const OracleOptions& opt_;
    bool approximate_;
};

class Tableau {
public:
    Tableau(const OracleOptions& opt, bool approximate) : opt_(opt), analyzer_(opt, approximate) {}

    struct Result {
        bool all_closed = true;
        OracleMethod method = OracleMethod::None;
        BranchOutcome open;
        bool limit = false;
    };

    Result run(const FormulaPtr& f) {
        Result r;
        search({{f, true}}, Branch{}, r);
        return r;
    }

    bool saw_opaque = false;

private:
    using Todo = std::vector<std::pair<FormulaPtr, bool>>;

    void close(Result& r, OracleMethod m) { r.method = std::max(r.method, m); }

    // returns false to stop the search
    bool search(Todo todo, Branch b, Result& r) {
        while (!todo.empty()) {
            auto [f, pos] = todo.back();
            todo.pop_back();
            switch (f->kind) {
                case FormulaKind::True:
                    if (!pos) {
                        close(r, OracleMethod::Propositional);
                        return true;
                    }
                    continue;
                case FormulaKind::False:
                    if (pos) {
                        close(r, OracleMethod::Propositional);
                        return true;
                    }
                    continue;
                case FormulaKind::Not: todo.emplace_back(f->left, !pos); continue;
                case FormulaKind::And:
                    if (pos) {
                        todo.emplace_back(f->right, true);
                        todo.emplace_back(f->left, true);
                        continue;
                    }
                    for (const auto& child : {f->left, f->right}) {
                        Todo t = todo;
                        t.emplace_back(child, false);
                        if (!search(std::move(t), b, r)) return false;
                    }
                    return true;
                case FormulaKind::Eq:
                    if (is_object_atom(f)) {
                        (pos ? b.obj_eq : b.obj_neq).emplace_back(f->lhs, f->rhs);
                        continue;
                    }
                    if (pos) {
                        b.arith.push_back({f->lhs, f->rhs, Relation::Eq});
                        continue;
                    }
                    for (bool upward : {true, false}) {
                        Branch c = b;
                        if (upward) c.arith.push_back({f->lhs, f->rhs, Relation::Gt});
                        else c.arith.push_back({f->rhs, f->lhs, Relation::Gt});
                        if (!search(todo, std::move(c), r)) return false;
                    }
                    return true;
                case FormulaKind::Geq:
                    if (pos) b.arith.push_back({f->lhs, f->rhs, Relation::Geq});
                    else b.arith.push_back({f->rhs, f->lhs, Relation::Gt});
                    continue;
                default: {
                    saw_opaque = true;
                    const std::string key = to_string(f);
                    auto it = b.opaque.find(key);
                    if (it != b.opaque.end() && it->second != pos) {
                        close(r, OracleMethod::Propositional);
                        return true;
                    }
                    b.opaque[key] = pos;
                    continue;
                }
            }
        }
        if (++branches_ > opt_.branch_limit) {
            r.all_closed = false;
            r.limit = true;
            r.open.diagnostic = "case split limit reached";
            return false;
        }
        BranchOutcome o = analyzer_.analyze(b);
        if (o.closed) {
            close(r, o.method);
            return true;
        }
        r.all_closed = false;
        r.open = std::move(o);
        return false;
    }

    const OracleOptions& opt_;
    Analyzer analyzer_;
    std::size_t branches_ = 0;
};

}  // namespace

FormulaPtr eliminate_exists(const std::string& var, const FormulaPtr& body) {
    std::vector<FormulaPtr> disjuncts;
    std::vector<std::vector<Literal>> cases;
    try {
        cases = dnf(body, true, 4096);
    } catch (const EliminationLimit& e) {
        throw UnsupportedTerm(e.what());
    }
    for (const auto& conj : cases) {
        // disequalities on var split into two strict cases
        std::vector<std::vector<LinearConstraint>> systems(1);
        std::vector<FormulaPtr> kept;
        AtomTable atoms;
        for (const auto& lit : conj) {
            const FormulaPtr& a = lit.atom;
            bool mentions = false;
            for (const auto& v : free_vars(a)) mentions = mentions || v.first == var;
            if (!mentions) {
                kept.push_back(literal_formula(lit));
                continue;
            }
            if ((a->kind != FormulaKind::Eq && a->kind != FormulaKind::Geq) || is_object_atom(a))
                throw UnsupportedTerm("cannot eliminate " + var + " from " + to_string(a));
            const Polynomial p = normalize(a->lhs, &atoms) - normalize(a->rhs, &atoms);
            if (a->kind == FormulaKind::Geq) {
                for (auto& s : systems) s.push_back(lit.positive ? LinearConstraint{p, Relation::Geq}
                                                                  : LinearConstraint{-p, Relation::Gt});
            } else if (lit.positive) {
                for (auto& s : systems) s.push_back({p, Relation::Eq});
            } else {
                std::vector<std::vector<LinearConstraint>> split;
                for (const auto& s : systems) {
                    auto up = s, down = s;
                    up.push_back({p, Relation::Gt});
                    down.push_back({-p, Relation::Gt});
                    split.push_back(std::move(up));
                    split.push_back(std::move(down));
                }
                systems = std::move(split);
            }
        }
        for (const auto& s : systems) {
            auto residue = fourier_motzkin(s, var);
            bool feasible = true;
            std::vector<FormulaPtr> parts = kept;
            for (const auto& c : residue) {
                if (c.poly.is_constant()) {
                    if (!holds(c)) feasible = false;
                    continue;
                }
                parts.push_back(constraint_formula(c, atoms));
            }
            if (feasible) disjuncts.push_back(make_conj(parts));
        }
    }
    return make_disj(disjuncts);
}

OracleResult decide_universal(const FormulaPtr& f, const OracleOptions& opt) {
    OracleResult result;
    FormulaPtr g;
    try {
        g = desugar_conditional(f);
    } catch (const DesugarError& e) {
        result.diagnostic = e.what();
        return result;
    }
    Grounder grounder(names_in(g));
    FormulaPtr sat;
    try {
        sat = grounder.run(make_not(g));
    } catch (const std::exception& e) {
        result.diagnostic = e.what();
        return result;
    }
    Tableau tableau(opt, grounder.approximate);
    const auto r = tableau.run(sat);
    result.approximate = grounder.approximate || tableau.saw_opaque;
    if (r.all_closed) {
        result.verdict = Verdict::Valid;
        result.method = r.method;
        return result;
    }
    if (r.open.exact) {
        result.verdict = Verdict::Invalid;
        result.witness = r.open.witness;
        result.diagnostic = "counterexample found";
        return result;
    }
    result.diagnostic = r.open.diagnostic.empty() ? "not decided" : r.open.diagnostic;
    if (!opt.solver.path.empty()) {
        const auto s = run_solver(export_solver_query(f), opt.solver);
        if (s.verdict == Verdict::Valid) {
            result.verdict = Verdict::Valid;
            result.method = OracleMethod::External;
            result.diagnostic.clear();
            return result;
        }
        result.diagnostic += "; solver: " + (s.diagnostic.empty() ? verdict_name(s.verdict) : s.diagnostic);
    }
    return result;
}

// ---------------------------------------------------------------- SMT-LIB2

namespace {

std::string smt_symbol(const std::string& name) { return "|" + name + "|"; }

std::string smt_sort(const std::string& sort) { return sort == kReal || sort.empty() ? "Real" : smt_symbol(sort); }

std::string smt_rational(const Rational& q) {
    const Integer num = boost::multiprecision::numerator(q);
    const Integer den = boost::multiprecision::denominator(q);
    if (den == 1) return num.str() + ".0";
    return "(/ " + num.str() + ".0 " + den.str() + ".0)";
}

class SmtWriter {
public:
    std::string term(const TermPtr& t) {
        switch (t->kind) {
            case TermKind::Var:
                if (!bound_.count(t->name)) free_.emplace(t->name, smt_sort(t->sort));
                return smt_symbol(t->name);
            case TermKind::App:
            case TermKind::Prime: return application(t);
            case TermKind::Lit: return smt_rational(t->value);
            case TermKind::Ite:
                return "(ite " + formula(t->cond) + " " + term(t->args[0]) + " " + term(t->args[1]) + ")";
            case TermKind::Neg: return "(- " + term(t->args[0]) + ")";
            case TermKind::Add: return "(+ " + term(t->args[0]) + " " + term(t->args[1]) + ")";
            case TermKind::Sub: return "(- " + term(t->args[0]) + " " + term(t->args[1]) + ")";
            case TermKind::Mul: return "(* " + term(t->args[0]) + " " + term(t->args[1]) + ")";
            case TermKind::Pow: {
                if (t->exponent == 0) return "1.0";
                if (t->exponent == 1) return term(t->args[0]);
                const std::string base = term(t->args[0]);
                std::string out = "(*";
                for (unsigned k = 0; k < t->exponent; ++k) out += " " + base;
                return out + ")";
            }
        }
        return "0.0";
    }

    std::string formula(const FormulaPtr& f) {
        switch (f->kind) {
            case FormulaKind::True: return "true";
            case FormulaKind::False: return "false";
            case FormulaKind::Eq: return "(= " + term(f->lhs) + " " + term(f->rhs) + ")";
            case FormulaKind::Geq: return "(>= " + term(f->lhs) + " " + term(f->rhs) + ")";
            case FormulaKind::Not: return "(not " + formula(f->left) + ")";
            case FormulaKind::And: return "(and " + formula(f->left) + " " + formula(f->right) + ")";
            case FormulaKind::Forall:
            case FormulaKind::Exists: {
                note_sort(f->var_sort);
                const bool shadow = bound_.count(f->var) > 0;
                bound_.insert(f->var);
                const std::string body = formula(f->left);
                if (!shadow) bound_.erase(f->var);
                const char* q = f->kind == FormulaKind::Forall ? "forall" : "exists";
                return std::string("(") + q + " ((" + smt_symbol(f->var) + " " + smt_sort(f->var_sort) + ")) " + body +
                       ")";
            }
            case FormulaKind::Box:
            case FormulaKind::Diamond: {
                const std::string key = to_string(f);
                auto it = opaque_.find(key);
                if (it == opaque_.end()) it = opaque_.emplace(key, "modal" + std::to_string(opaque_.size())).first;
                return smt_symbol(it->second);
            }
        }
        return "true";
    }

    std::string declarations() const {
        std::string out;
        for (const auto& s : sorts_) out += "(declare-sort " + smt_symbol(s) + " 0)\n";
        for (const auto& [name, sort] : free_) out += "(declare-const " + smt_symbol(name) + " " + sort + ")\n";
        for (const auto& [name, sig] : funs_) {
            out += "(declare-fun " + smt_symbol(name) + " (";
            for (std::size_t k = 0; k + 1 < sig.size(); ++k) out += (k ? " " : "") + sig[k];
            out += ") " + sig.back() + ")\n";
        }
        for (const auto& [key, name] : opaque_) out += "(declare-const " + smt_symbol(name) + " Bool)\n";
        return out;
    }

private:
    void note_sort(const std::string& s) {
        if (!s.empty() && s != kReal) sorts_.insert(s);
    }

    std::string application(const TermPtr& t) {
        const std::string name = t->kind == TermKind::Prime ? t->name + "'" : t->name;
        std::vector<std::string> sig;
        std::string args;
        for (const auto& a : t->args) {
            sig.push_back(smt_sort(a->sort));
            note_sort(a->sort);
            args += " " + term(a);
        }
        sig.push_back(smt_sort(t->sort));
        note_sort(t->sort);
        funs_.emplace(name, sig);
        if (t->args.empty()) return smt_symbol(name);
        return "(" + smt_symbol(name) + args + ")";
    }

    std::set<std::string> bound_, sorts_;
    std::map<std::string, std::string> free_;
    std::map<std::string, std::vector<std::string>> funs_;
    std::map<std::string, std::string> opaque_;
};

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    return out + "'";
}

}  // namespace

std::string export_solver_query(const FormulaPtr& f) {
    SmtWriter w;
    const std::string body = w.formula(f);
    std::ostringstream out;
    out << "(set-logic ALL)\n" << w.declarations() << "(assert (not " << body << "))\n(check-sat)\n(exit)\n";
    return out.str();
}

SolverVerdict import_solver_verdict(const std::string& output) {
    std::istringstream in(output);
    std::string line;
    while (std::getline(in, line)) {
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        if (line == "unsat") return {Verdict::Valid, "", false};
        if (line == "sat") return {Verdict::Invalid, "solver found a model of the negation", false};
        if (line == "unknown") return {Verdict::Unknown, "solver returned unknown", false};
        return {Verdict::Unknown, "unparsable solver output: " + line, false};
    }
    return {Verdict::Unknown, "empty solver output", false};
}

SolverVerdict run_solver(const std::string& query, const SolverConfig& cfg) {
    namespace fs = std::filesystem;
    if (cfg.path.empty()) return {Verdict::Unknown, "no external solver configured", false};
    const std::string key = sha256_hex(query);
    fs::path cache_file;
    if (!cfg.cache_dir.empty()) {
        cache_file = fs::path(cfg.cache_dir) / (key + ".out");
        std::ifstream cached(cache_file);
        if (cached) {
            std::stringstream ss;
            ss << cached.rdbuf();
            auto v = import_solver_verdict(ss.str());
            v.cached = true;
            return v;
        }
    }
    std::error_code ec;
    const fs::path file = fs::temp_directory_path(ec) / ("qdtl-" + key + ".smt2");
    {
        std::ofstream out(file);
        if (!out) return {Verdict::Unknown, "cannot write solver query " + file.string(), false};
        out << query;
    }
    const int secs = std::max(1, (cfg.timeout_ms + 999) / 1000);
    const std::string cmd =
        "timeout " + std::to_string(secs) + " " + shell_quote(cfg.path) + " " + shell_quote(file.string()) + " 2>&1";
    std::string output;
    int status = -1;
    if (FILE* pipe = popen(cmd.c_str(), "r")) {
        char buf[4096];
        std::size_t n;
        while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) output.append(buf, n);
        status = pclose(pipe);
    }
    fs::remove(file, ec);
    if (status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 124)
        return {Verdict::Unknown, "solver timed out after " + std::to_string(secs) + " s", false};
    if (status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 127)
        return {Verdict::Unknown, "solver not found: " + cfg.path, false};
    auto v = import_solver_verdict(output);
    if (v.verdict != Verdict::Unknown && !cache_file.empty()) {
        fs::create_directories(cache_file.parent_path(), ec);
        std::ofstream out(cache_file);
        out << output;
    }
    return v;
}

}  // namespace qdtl
