#include "qdtl/calculus.hpp"

#include "qdtl/catalog.hpp"
#include "qdtl/poly.hpp"
#include "qdtl/printer.hpp"

#include <algorithm>
#include <cctype>
#include <functional>

namespace qdtl {

std::string rule_error_kind(RuleError::Kind k) {
    switch (k) {
        case RuleError::Kind::Mismatch: return "pattern mismatch";
        case RuleError::Kind::SideCondition: return "side condition";
        case RuleError::Kind::Unsupported: return "unsupported";
        case RuleError::Kind::Argument: return "argument";
    }
    return "?";
}

namespace {

[[noreturn]] void mismatch(const std::string& m) { throw RuleError(RuleError::Kind::Mismatch, m); }
[[noreturn]] void side(const std::string& m) { throw RuleError(RuleError::Kind::SideCondition, m); }
[[noreturn]] void unsupported(const std::string& m) { throw RuleError(RuleError::Kind::Unsupported, m); }
[[noreturn]] void bad_arg(const std::string& m) { throw RuleError(RuleError::Kind::Argument, m); }

bool is_zero(const TermPtr& t) { return t->kind == TermKind::Lit && t->value == 0; }

bool mentions_var(const VarSet& vs, const std::string& name) {
    for (const auto& v : vs)
        if (v.first == name) return true;
    return false;
}

}  // namespace

// ---------------------------------------------------------------- total derivation

std::set<std::string> ode_targets(const Program& ode) {
    std::set<std::string> out;
    for (const auto& c : ode.clauses) out.insert(c.fn);
    return out;
}

TermPtr total_derivative(const TermPtr& t, const std::set<std::string>& written) {
    const auto zero = make_lit(0);
    switch (t->kind) {
        case TermKind::Lit:
        case TermKind::Var: return zero;
        case TermKind::App:
            if (written.count(t->name)) return make_prime(t->name, t->args);
            return zero;
        case TermKind::Prime: unsupported("derivative of a differential symbol " + to_string(t));
        case TermKind::Ite: unsupported("derivative of a conditional term");
        case TermKind::Neg: {
            auto a = total_derivative(t->args[0], written);
            return is_zero(a) ? zero : make_neg(a);
        }
        case TermKind::Add:
        case TermKind::Sub: {
            auto a = total_derivative(t->args[0], written);
            auto b = total_derivative(t->args[1], written);
            if (is_zero(b)) return a;
            if (is_zero(a)) return t->kind == TermKind::Add ? b : make_neg(b);
            return t->kind == TermKind::Add ? make_add(a, b) : make_sub(a, b);
        }
        case TermKind::Mul: {
            auto da = total_derivative(t->args[0], written);
            auto db = total_derivative(t->args[1], written);
            TermPtr left = is_zero(da) ? nullptr : make_mul(da, t->args[1]);
            TermPtr right = is_zero(db) ? nullptr : make_mul(t->args[0], db);
            if (left && right) return make_add(left, right);
            if (left) return left;
            if (right) return right;
            return zero;
        }
        case TermKind::Pow: {
            auto da = total_derivative(t->args[0], written);
            if (is_zero(da) || t->exponent == 0) return zero;
            if (t->exponent == 1) return da;
            TermPtr base = t->exponent == 2 ? t->args[0] : make_pow(t->args[0], t->exponent - 1);
            return make_mul(make_mul(make_lit(Rational(t->exponent)), base), da);
        }
    }
    return zero;
}

FormulaPtr total_derivation(const FormulaPtr& f, const std::set<std::string>& written) {
    if (auto d = as_or(f)) return make_and(total_derivation(d->first, written), total_derivation(d->second, written));
    switch (f->kind) {
        case FormulaKind::True: return f;
        case FormulaKind::Eq:
        case FormulaKind::Geq: {
            if (f->lhs->sort != kReal) return make_eq(make_lit(0), make_lit(0));
            auto a = total_derivative(f->lhs, written);
            auto b = total_derivative(f->rhs, written);
            return f->kind == FormulaKind::Eq ? make_eq(a, b) : make_geq(a, b);
        }
        case FormulaKind::And:
            return make_and(total_derivation(f->left, written), total_derivation(f->right, written));
        case FormulaKind::Forall: return with_body(f, total_derivation(f->left, written));
        default: unsupported("D is defined on atoms, conjunctions, disjunctions and universal quantifiers, not on " + to_string(f));
    }
}

// ---------------------------------------------------------------- assignment by substitution

namespace {

struct AssignmentSubst {
    const Program& a;
    std::set<std::string> targets;  // assigned symbols, primed ones with '
    std::set<std::string> read;     // symbols read by right-hand sides
    std::set<std::string> rhs_vars; // free variables of right-hand sides other than the binder

    explicit AssignmentSubst(const Program& p) : a(p) {
        for (const auto& c : a.clauses) {
            targets.insert(c.primed ? c.fn + "'" : c.fn);
            auto s = symbols_of(c.rhs);
            read.insert(s.begin(), s.end());
            for (const auto& v : free_vars(c.rhs))
                if (v.first != a.var) rhs_vars.insert(v.first);
            for (const auto& arg : c.args)
                for (const auto& v : free_vars(arg))
                    if (v.first != a.var) rhs_vars.insert(v.first);
        }
    }

    TermPtr value(const Clause& c, const std::vector<TermPtr>& u) const {
        if (c.args.empty()) return c.rhs;
        if (!a.var.empty()) return substitute(c.rhs, a.var, u[0]);
        return c.rhs;
    }

    TermPtr term(const TermPtr& t) const {
        if (!t) return t;
        std::vector<TermPtr> args;
        bool changed = false;
        if (t->kind == TermKind::Ite) {
            auto c = formula(t->cond);
            if (!c) return nullptr;
            auto x = term(t->args[0]);
            auto y = term(t->args[1]);
            if (!x || !y) return nullptr;
            return make_ite(*c, x, y);
        }
        for (const auto& s : t->args) {
            auto n = term(s);
            if (!n) return nullptr;
            changed = changed || n != s;
            args.push_back(n);
        }
        if (t->kind == TermKind::App || t->kind == TermKind::Prime) {
            const bool primed = t->kind == TermKind::Prime;
            std::vector<const Clause*> hits;
            for (const auto& c : a.clauses)
                if (c.fn == t->name && c.primed == primed && c.args.size() == args.size()) hits.push_back(&c);
            if (!hits.empty()) {
                // Unquantified clauses with arguments become conditionals on the position.
                TermPtr result = primed ? make_prime(t->name, args) : make_app(t->name, args, t->sort);
                for (auto it = hits.rbegin(); it != hits.rend(); ++it) {
                    const Clause& c = **it;
                    if (!a.var.empty() || c.args.empty()) {
                        result = value(c, args);
                        continue;
                    }
                    bool same = true;
                    std::vector<FormulaPtr> eqs;
                    for (std::size_t k = 0; k < args.size(); ++k) {
                        if (!equal(c.args[k], args[k])) same = false;
                        eqs.push_back(make_eq(c.args[k], args[k]));
                    }
                    result = same ? c.rhs : make_ite(make_conj(eqs), c.rhs, result);
                }
                return result;
            }
        }
        if (!changed) return t;
        auto n = std::make_shared<Term>(*t);
        n->args = std::move(args);
        return n;
    }

    bool touches(const FormulaPtr& f) const {
        for (const auto& s : symbols_of(f))
            if (targets.count(s)) return true;
        return false;
    }
    bool touches(const ProgramPtr& p) const {
        for (const auto& s : symbols_of(p))
            if (targets.count(s)) return true;
        return false;
    }

    std::optional<ProgramPtr> program(const ProgramPtr& p) const {
        if (!p || !touches(p)) return p;
        auto n = std::make_shared<Program>(*p);
        if (p->kind == ProgramKind::Assign || p->kind == ProgramKind::Ode) {
            if (!p->var.empty() && rhs_vars.count(p->var)) return std::nullopt;
            for (auto& c : n->clauses) {
                for (auto& arg : c.args) {
                    auto x = term(arg);
                    if (!x) return std::nullopt;
                    arg = x;
                }
                auto r = term(c.rhs);
                if (!r) return std::nullopt;
                c.rhs = r;
            }
        }
        if (p->cond) {
            auto c = formula(p->cond);
            if (!c) return std::nullopt;
            n->cond = *c;
        }
        if (p->left) {
            auto l = program(p->left);
            if (!l) return std::nullopt;
            n->left = *l;
        }
        if (p->right) {
            auto r = program(p->right);
            if (!r) return std::nullopt;
            n->right = *r;
        }
        return ProgramPtr(n);
    }

    std::optional<FormulaPtr> formula(const FormulaPtr& f) const {
        if (!f || !touches(f)) return f;
        switch (f->kind) {
            case FormulaKind::Eq:
            case FormulaKind::Geq: {
                auto l = term(f->lhs);
                auto r = term(f->rhs);
                if (!l || !r) return std::nullopt;
                return f->kind == FormulaKind::Eq ? make_eq(l, r) : make_geq(l, r);
            }
            case FormulaKind::Not: {
                auto b = formula(f->left);
                if (!b) return std::nullopt;
                return make_not(*b);
            }
            case FormulaKind::And: {
                auto l = formula(f->left);
                auto r = formula(f->right);
                if (!l || !r) return std::nullopt;
                return make_and(*l, *r);
            }
            case FormulaKind::Forall:
            case FormulaKind::Exists: {
                FormulaPtr body = f->left;
                std::string var = f->var;
                if (rhs_vars.count(var)) {
                    std::set<std::string> used = names_in(body);
                    used.insert(rhs_vars.begin(), rhs_vars.end());
                    var = fresh_name(var, used);
                    body = substitute(body, f->var, make_var(var, f->var_sort));
                }
                auto b = formula(body);
                if (!b) return std::nullopt;
                return f->kind == FormulaKind::Forall ? make_forall(var, f->var_sort, *b)
                                                      : make_exists(var, f->var_sort, *b);
            }
            case FormulaKind::Box:
            case FormulaKind::Diamond: {
                const auto w = written_symbols(f->program);
                for (const auto& s : w)
                    if (targets.count(s) || read.count(s)) return std::nullopt;
                auto p = program(f->program);
                auto b = formula(f->left);
                if (!p || !b) return std::nullopt;
                return f->kind == FormulaKind::Box ? make_box(*p, *b, f->temporal) : make_diamond(*p, *b, f->temporal);
            }
            default: return f;
        }
    }
};

void check_assignment(const Program& a) {
    if (a.kind != ProgramKind::Assign) mismatch("expected an assignment, found " + to_string(std::make_shared<Program>(a)));
    const std::string diag = injectivity_diagnostic(a);
    if (!diag.empty()) side("assignment is not injective: " + diag);
    for (std::size_t k = 0; k < a.clauses.size(); ++k)
        for (std::size_t m = k + 1; m < a.clauses.size(); ++m)
            if (a.clauses[k].fn == a.clauses[m].fn && a.clauses[k].primed == a.clauses[m].primed)
                side("assignment has two clauses for '" + a.clauses[k].fn + "' that may clash");
}

}  // namespace

std::optional<FormulaPtr> apply_assignment(const Program& assign, const FormulaPtr& post, bool) {
    check_assignment(assign);
    AssignmentSubst s(assign);
    auto r = s.formula(post);
    if (r && contains_ite(*r) && !contains_ite(post)) return desugar_conditional(*r);
    return r;
}

// ---------------------------------------------------------------- symbolic solution

ProgramPtr symbolic_solution(const Program& ode, const TermPtr& duration) {
    if (ode.kind != ProgramKind::Ode) mismatch("expected a differential equation");
    const std::string diag = injectivity_diagnostic(ode);
    if (!diag.empty()) side("differential equation is not injective: " + diag);
    const std::string use_di = "; use DI/DC instead";
    const auto targets = ode_targets(ode);
    const std::string clock = "@t";

    AtomTable atoms;
    std::vector<std::string> keys;
    std::vector<Polynomial> rhs;
    for (const auto& c : ode.clauses) {
        if (c.primed) unsupported("differential equation with a primed left-hand side");
        auto lhs = make_app(c.fn, c.args, kReal);
        const std::string key = to_string(lhs);
        if (std::find(keys.begin(), keys.end(), key) != keys.end())
            side("two equations for " + key);
        keys.push_back(key);
        atoms[key] = lhs;
    }
    for (const auto& c : ode.clauses) {
        std::function<void(const TermPtr&)> scan = [&](const TermPtr& t) {
            if (t->kind == TermKind::Prime || t->kind == TermKind::Ite)
                unsupported("right-hand side " + to_string(c.rhs) + " is outside the solvable class" + use_di);
            if (t->kind == TermKind::App && targets.count(t->name) &&
                std::find(keys.begin(), keys.end(), to_string(t)) == keys.end())
                unsupported("right-hand side reads " + to_string(t) + " at another position" + use_di);
            for (const auto& a : t->args) scan(a);
        };
        scan(c.rhs);
        try {
            rhs.push_back(normalize(c.rhs, &atoms));
        } catch (const UnsupportedTerm& e) {
            unsupported(std::string(e.what()) + use_di);
        }
    }
    // Picard iteration: exact after finitely many rounds for nilpotent systems.
    std::vector<Polynomial> cur;
    for (const auto& k : keys) cur.push_back(Polynomial::indeterminate(k));
    auto integrate = [&](const Polynomial& p) {
        Polynomial out;
        for (const auto& [m, c] : p.terms()) {
            Monomial n;
            unsigned e = 0;
            for (const auto& [v, k] : m)
                if (v == clock) e = k;
                else n.push_back({v, k});
            n.push_back({clock, e + 1});
            std::sort(n.begin(), n.end());
            Polynomial term = Polynomial::constant(c / Rational(e + 1));
            for (const auto& [v, k] : n) term = term * Polynomial::indeterminate(v).pow(k);
            out = out + term;
        }
        return out;
    };
    bool stable = false;
    for (std::size_t round = 0; round < keys.size() + 2 && !stable; ++round) {
        std::vector<Polynomial> next;
        for (std::size_t k = 0; k < keys.size(); ++k) {
            Polynomial p = rhs[k];
            for (std::size_t m = 0; m < keys.size(); ++m) p = p.substitute(keys[m], Polynomial::indeterminate("@cur" + std::to_string(m)));
            for (std::size_t m = 0; m < keys.size(); ++m) p = p.substitute("@cur" + std::to_string(m), cur[m]);
            next.push_back(Polynomial::indeterminate(keys[k]) + integrate(p));
        }
        stable = next == cur;
        cur = std::move(next);
    }
    if (!stable) unsupported("differential equation has no polynomial solution" + use_di);

    AtomTable table = atoms;
    table[clock] = duration;
    std::vector<Clause> clauses;
    for (std::size_t k = 0; k < keys.size(); ++k) {
        const auto& c = ode.clauses[k];
        clauses.push_back(Clause{c.fn, c.args, to_term(cur[k], table), false});
    }
    return make_assign(ode.var, ode.var_sort, std::move(clauses));
}

// ---------------------------------------------------------------- monitor transformation

ProgramPtr transform_monitor(const ProgramPtr& alpha, const FormulaPtr& phi, const std::string& flag) {
    if (names_in(alpha).count(flag) || names_in(phi).count(flag))
        side("monitor variable '" + flag + "' is not fresh");
    const auto flagged = make_implies(phi, make_eq(make_var(flag, kReal), make_lit(1)));
    std::function<ProgramPtr(const ProgramPtr&)> go = [&](const ProgramPtr& p) -> ProgramPtr {
        switch (p->kind) {
            case ProgramKind::Assign:
            case ProgramKind::New: return make_seq(p, make_test(flagged));
            case ProgramKind::Ode: return make_ode(p->var, p->var_sort, p->clauses, p->cond ? make_and(p->cond, flagged) : flagged);
            case ProgramKind::Test: return p;
            case ProgramKind::Choice: return make_choice(go(p->left), go(p->right));
            case ProgramKind::Seq: return make_seq(go(p->left), go(p->right));
            case ProgramKind::Loop: return make_loop(go(p->left));
        }
        return p;
    };
    return go(alpha);
}

// ---------------------------------------------------------------- context

std::string ProofContext::fresh(const std::string& base, const std::set<std::string>& used) {
    std::set<std::string> all = used;
    for (const auto& [name, f] : sig.functions()) all.insert(name);
    for (const auto& s : sig.object_sorts()) all.insert(s);
    std::string candidate;
    do {
        candidate = base + "_" + std::to_string(++counter);
    } while (all.count(candidate));
    return candidate;
}

Sequent root_goal(const FormulaPtr& conjecture, const Signature& sig) {
    std::function<FormulaPtr(const FormulaPtr&)> strip = [&](const FormulaPtr& f) -> FormulaPtr {
        if (!f) return f;
        auto n = std::make_shared<Formula>(*f);
        if (f->program) n->program = desugar_new(f->program, sig);
        n->left = strip(f->left);
        n->right = strip(f->right);
        return n;
    };
    FormulaPtr f = strip(conjecture);
    if (auto imp = as_implies(f)) return Sequent({imp->first}, {imp->second});
    return Sequent({}, {f});
}

// ---------------------------------------------------------------- positions

namespace {

FormulaPtr child(const FormulaPtr& f, std::size_t k) {
    switch (f->kind) {
        case FormulaKind::Not:
        case FormulaKind::Forall:
        case FormulaKind::Exists:
        case FormulaKind::Box:
        case FormulaKind::Diamond:
            if (k == 0) return f->left;
            break;
        case FormulaKind::And:
            if (k == 0) return f->left;
            if (k == 1) return f->right;
            break;
        default: break;
    }
    mismatch("position has no child " + std::to_string(k) + " in " + to_string(f));
}

FormulaPtr replace_child(const FormulaPtr& f, std::size_t k, FormulaPtr g) {
    auto n = std::make_shared<Formula>(*f);
    if (k == 0) n->left = std::move(g);
    else n->right = std::move(g);
    return n;
}

FormulaPtr subformula(const FormulaPtr& f, const std::vector<std::size_t>& path, std::size_t depth = 0) {
    if (depth == path.size()) return f;
    return subformula(child(f, path[depth]), path, depth + 1);
}

FormulaPtr replace_at(const FormulaPtr& f, const std::vector<std::size_t>& path, const FormulaPtr& g,
                      std::size_t depth = 0) {
    if (depth == path.size()) return g;
    return replace_child(f, path[depth], replace_at(child(f, path[depth]), path, g, depth + 1));
}

/// The programs of the plain boxes along the path, or nothing when another connective intervenes.
std::optional<std::vector<ProgramPtr>> box_prefix(const FormulaPtr& f, const std::vector<std::size_t>& path) {
    std::vector<ProgramPtr> out;
    FormulaPtr cur = f;
    for (auto k : path) {
        if (cur->kind != FormulaKind::Box || cur->temporal != Temporal::None || k != 0) return std::nullopt;
        out.push_back(cur->program);
        cur = cur->left;
    }
    return out;
}

std::vector<FormulaPtr> conjuncts(const FormulaPtr& f) {
    if (f->kind != FormulaKind::And) return {f};
    auto a = conjuncts(f->left);
    auto b = conjuncts(f->right);
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::vector<FormulaPtr> flat(const std::vector<FormulaPtr>& side) {
    std::vector<FormulaPtr> out;
    for (const auto& f : side) {
        auto c = conjuncts(f);
        out.insert(out.end(), c.begin(), c.end());
    }
    return out;
}

bool member(const std::vector<FormulaPtr>& side, const FormulaPtr& f) {
    for (const auto& g : side)
        if (equal(g, f)) return true;
    return false;
}

/// Every conjunct of f occurs among the flattened antecedent formulas.
bool assumed(const std::vector<FormulaPtr>& ante, const FormulaPtr& f) {
    const auto have = flat(ante);
    for (const auto& part : conjuncts(f))
        if (!member(have, part)) return false;
    return true;
}

const Position& position(const RuleApplication& app, std::size_t k = 0) {
    if (app.positions.size() <= k) bad_arg("rule " + app.rule + " needs " + std::to_string(k + 1) + " position(s)");
    return app.positions[k];
}

const FormulaPtr& top(const Sequent& s, const Position& p) {
    const auto& side = p.succedent ? s.succ : s.ante;
    if (p.index >= side.size()) mismatch("no formula at " + p.text() + " in " + to_string(s));
    return side[p.index];
}

std::vector<FormulaPtr> without(const std::vector<FormulaPtr>& side, std::size_t index) {
    std::vector<FormulaPtr> out;
    for (std::size_t k = 0; k < side.size(); ++k)
        if (k != index) out.push_back(side[k]);
    return out;
}

const std::string& arg(const RuleApplication& app, std::size_t k, const std::string& what) {
    if (app.args.size() <= k) bad_arg("rule " + app.rule + " needs an argument: " + what);
    return app.args[k];
}

std::set<std::string> names_of(const Sequent& s) {
    std::set<std::string> out;
    for (const auto& f : s.ante) {
        auto n = names_in(f);
        out.insert(n.begin(), n.end());
    }
    for (const auto& f : s.succ) {
        auto n = names_in(f);
        out.insert(n.begin(), n.end());
    }
    return out;
}

VarSet free_of(const Sequent& s) {
    VarSet out;
    for (const auto& f : s.ante) {
        auto v = free_vars(f);
        out.insert(v.begin(), v.end());
    }
    for (const auto& f : s.succ) {
        auto v = free_vars(f);
        out.insert(v.begin(), v.end());
    }
    return out;
}

ParseContext parse_context(const ProofContext& ctx, const Sequent& goal) {
    ParseContext pc;
    pc.sig = ctx.sig;
    pc.macros = ctx.theory;
    pc.free = free_of(goal);
    pc.file = "<argument>";
    return pc;
}

FormulaPtr parse_formula_arg(const ProofContext& ctx, const Sequent& goal, const std::string& text,
                             const VarSet& extra = {}) {
    auto pc = parse_context(ctx, goal);
    pc.free.insert(extra.begin(), extra.end());
    try {
        return parse_formula(text, pc);
    } catch (const ParseError& e) {
        bad_arg("cannot parse formula argument {" + text + "}: " + e.detail);
    }
}

bool is_identifier(const std::string& s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

/// A term argument; an unknown bare identifier is a new free logical variable of the wanted sort.
TermPtr parse_term_arg(const ProofContext& ctx, const Sequent& goal, const std::string& text, const std::string& sort) {
    std::string s = text;
    s.erase(0, s.find_first_not_of(" \t\n"));
    s.erase(s.find_last_not_of(" \t\n") + 1);
    auto pc = parse_context(ctx, goal);
    if (is_identifier(s) && !ctx.sig.has_function(s) && s != kExistence) {
        for (const auto& v : pc.free)
            if (v.first == s) {
                if (v.second != sort) bad_arg("variable " + s + " has sort " + v.second + ", wanted " + sort);
                return make_var(s, sort);
            }
        return make_var(s, sort);
    }
    try {
        auto t = parse_term(s, pc);
        if (t->sort != sort) bad_arg("term {" + s + "} has sort " + t->sort + ", wanted " + sort);
        return t;
    } catch (const ParseError& e) {
        bad_arg("cannot parse term argument {" + s + "}: " + e.detail);
    }
}

FormulaPtr modal(const FormulaPtr& like, ProgramPtr p, FormulaPtr body, Temporal t) {
    return like->kind == FormulaKind::Box ? make_box(std::move(p), std::move(body), t)
                                          : make_diamond(std::move(p), std::move(body), t);
}

void expect_modal(const FormulaPtr& f, FormulaKind kind, ProgramKind pk, const std::string& rule) {
    if (f->kind != kind || f->program->kind != pk)
        mismatch(rule + " does not match " + to_string(f));
}

// ---------------------------------------------------------------- local rewrites

/// Rules valid as equivalences, applicable at any position.
bool is_rewrite(const std::string& r) {
    static const std::set<std::string> rules = {
        "[;]",     "<;>",     "[++]",   "<++>",    "[?]",    "<?>",     "[']",      "<'>",     "[:=]",
        "<:=>",    "skip",    "[:*]",   "<:*>",    "[++]box", "<++>dia", "[;]box",  "<;>dia",  "[?]box",
        "<?>dia",  "[:=]box", "<:=>dia", "[']box", "<'>dia",  "[*n]box", "<*n>dia", "[*]box",  "<*>dia"};
    return rules.count(r) > 0;
}

struct Rewrite {
    FormulaPtr premise;
    std::string note;
};

void need_temporal(const FormulaPtr& f, Temporal t, const std::string& rule) {
    if (f->temporal != t) {
        const char* what = t == Temporal::None ? "a state postcondition" : t == Temporal::Always ? "box" : "dia";
        mismatch(rule + " needs " + std::string(what) + " after the modality in " + to_string(f));
    }
}

Rewrite rewrite(ProofContext& ctx, const Sequent& goal, const FormulaPtr& f, const std::string& rule) {
    const bool modal_f = f->kind == FormulaKind::Box || f->kind == FormulaKind::Diamond;
    const bool want_box = rule[0] == '[' || rule == "skip";
    if (!modal_f) mismatch(rule + " needs a modality, found " + to_string(f));
    if (rule != "skip" && (f->kind == FormulaKind::Box) != want_box)
        mismatch(rule + " does not match the modality of " + to_string(f));
    const auto& p = f->program;
    const auto body = f->left;
    const bool box = f->kind == FormulaKind::Box;

    if (rule == "[;]" || rule == "<;>") {
        expect_modal(f, f->kind, ProgramKind::Seq, rule);
        need_temporal(f, Temporal::None, rule);
        return {modal(f, p->left, modal(f, p->right, body, Temporal::None), Temporal::None), ""};
    }
    if (rule == "[++]" || rule == "<++>" || rule == "[++]box" || rule == "<++>dia") {
        expect_modal(f, f->kind, ProgramKind::Choice, rule);
        if (rule.size() <= 4) need_temporal(f, Temporal::None, rule);
        auto a = modal(f, p->left, body, f->temporal);
        auto b = modal(f, p->right, body, f->temporal);
        return {box ? make_and(a, b) : make_or(a, b), ""};
    }
    if (rule == "[?]" || rule == "<?>") {
        expect_modal(f, f->kind, ProgramKind::Test, rule);
        need_temporal(f, Temporal::None, rule);
        return {box ? make_implies(p->cond, body) : make_and(p->cond, body), ""};
    }
    if (rule == "[?]box" || rule == "<?>dia") {
        expect_modal(f, f->kind, ProgramKind::Test, rule);
        need_temporal(f, box ? Temporal::Always : Temporal::Eventually, rule);
        return {body, ""};
    }
    if (rule == "[;]box" || rule == "<;>dia") {
        expect_modal(f, f->kind, ProgramKind::Seq, rule);
        need_temporal(f, box ? Temporal::Always : Temporal::Eventually, rule);
        auto first = modal(f, p->left, body, f->temporal);
        auto second = modal(f, p->left, modal(f, p->right, body, f->temporal), Temporal::None);
        return {box ? make_and(first, second) : make_or(first, second), ""};
    }
    if (rule == "[:=]box" || rule == "<:=>dia") {
        expect_modal(f, f->kind, ProgramKind::Assign, rule);
        need_temporal(f, box ? Temporal::Always : Temporal::Eventually, rule);
        auto after = modal(f, p, body, Temporal::None);
        return {box ? make_and(body, after) : make_or(body, after), ""};
    }
    if (rule == "[']box" || rule == "<'>dia") {
        expect_modal(f, f->kind, ProgramKind::Ode, rule);
        need_temporal(f, box ? Temporal::Always : Temporal::Eventually, rule);
        return {modal(f, p, body, Temporal::None), ""};
    }
    if (rule == "[*n]box" || rule == "<*n>dia" || rule == "[*]box" || rule == "<*>dia") {
        expect_modal(f, f->kind, ProgramKind::Loop, rule);
        need_temporal(f, box ? Temporal::Always : Temporal::Eventually, rule);
        if (box && !always_enabled(p->left))
            side(rule + " needs a loop body that has a trace from every state; " + to_string(p->left) +
                 " may have none");
        if (rule == "[*n]box" || rule == "<*n>dia") return {modal(f, make_seq(p->left, p), body, f->temporal), ""};
        return {modal(f, p, modal(f, p->left, body, f->temporal), Temporal::None), ""};
    }
    if (rule == "[:=]" || rule == "<:=>" || rule == "skip") {
        expect_modal(f, f->kind, ProgramKind::Assign, rule);
        need_temporal(f, Temporal::None, rule);
        check_assignment(*p);
        if (rule == "skip") {
            // Only occurrences inside arguments of other symbols may be rewritten.
            std::function<bool(const TermPtr&, bool)> top_level = [&](const TermPtr& t, bool inside) -> bool {
                if (!t) return false;
                if ((t->kind == TermKind::App || t->kind == TermKind::Prime) && !inside)
                    for (const auto& c : p->clauses)
                        if (c.fn == t->name) return true;
                const bool arg = inside || t->kind == TermKind::App || t->kind == TermKind::Prime;
                for (const auto& a : t->args)
                    if (top_level(a, arg)) return true;
                return false;
            };
            std::function<bool(const FormulaPtr&)> scan = [&](const FormulaPtr& g) -> bool {
                if (!g) return false;
                if (top_level(g->lhs, false) || top_level(g->rhs, false)) return true;
                return scan(g->left) || scan(g->right);
            };
            if (scan(body)) side("skip needs the assigned symbol to occur only inside arguments of other symbols");
        }
        auto r = apply_assignment(*p, body, !box);
        if (!r)
            side("substitution not admissible: the postcondition mentions an assigned symbol under a modality "
                 "that changes it or a symbol the assignment reads");
        return {*r, ""};
    }
    if (rule == "[:*]" || rule == "<:*>") {
        expect_modal(f, f->kind, ProgramKind::Assign, rule);
        need_temporal(f, Temporal::None, rule);
        if (p->var.empty() || p->clauses.size() != 1 || !p->clauses[0].args.empty() || p->clauses[0].primed)
            mismatch(rule + " needs a quantified assignment to one nullary symbol, found " + to_string(p));
        const auto& c = p->clauses[0];
        std::string var = p->var;
        TermPtr value = c.rhs;
        if (mentions_var(free_vars(body), var)) {
            auto used = names_of(goal);
            var = ctx.fresh(var, used);
            value = substitute(value, p->var, make_var(var, p->var_sort));
        }
        try {
            auto inner = substitute(body, c.fn, value, true);
            return {box ? make_forall(var, p->var_sort, inner) : make_exists(var, p->var_sort, inner), ""};
        } catch (const SubstitutionError& e) {
            side(e.what());
        }
    }
    if (rule == "[']" || rule == "<'>") {
        expect_modal(f, f->kind, ProgramKind::Ode, rule);
        need_temporal(f, Temporal::None, rule);
        auto used = names_of(goal);
        const std::string t = ctx.fresh("t", used);
        used.insert(t);
        const std::string tt = ctx.fresh("s", used);
        const auto tv = make_var(t, kReal);
        const auto ttv = make_var(tt, kReal);
        auto at_t = symbolic_solution(*p, tv);
        auto at_tt = symbolic_solution(*p, ttv);
        FormulaPtr chi = p->cond;
        if (chi && !p->var.empty() && mentions_var(free_vars(chi), p->var)) chi = make_forall(p->var, p->var_sort, chi);
        const auto window = make_and(make_leq(make_lit(0), ttv), make_leq(ttv, tv));
        if (box) {
            FormulaPtr post = make_box(at_t, body);
            if (chi) post = make_implies(make_forall(tt, kReal, make_implies(window, make_box(at_tt, chi))), post);
            return {make_forall(t, kReal, make_implies(make_geq(tv, make_lit(0)), post)), ""};
        }
        FormulaPtr post = make_diamond(at_t, body);
        if (chi) post = make_and(make_forall(tt, kReal, make_implies(window, make_diamond(at_tt, chi))), post);
        return {make_exists(t, kReal, make_and(make_geq(tv, make_lit(0)), post)), ""};
    }
    mismatch("rule " + rule + " is not a local rewrite");
}

// ---------------------------------------------------------------- sequent rules

Sequent with_side(const Sequent& g, const Position& p, std::vector<FormulaPtr> add_ante, std::vector<FormulaPtr> add_succ,
                  bool drop = true) {
    std::vector<FormulaPtr> a = (!p.succedent && drop) ? without(g.ante, p.index) : g.ante;
    std::vector<FormulaPtr> s = (p.succedent && drop) ? without(g.succ, p.index) : g.succ;
    a.insert(a.end(), add_ante.begin(), add_ante.end());
    s.insert(s.end(), add_succ.begin(), add_succ.end());
    return Sequent(a, s);
}

void require_top(const Position& p, const std::string& rule) {
    if (!p.subpath.empty()) mismatch(rule + " applies to top-level formulas only, not at " + p.text());
}

void require_side(const Position& p, bool succedent, const std::string& rule) {
    if (p.succedent != succedent)
        mismatch(rule + " applies in the " + std::string(succedent ? "succedent" : "antecedent") + ", not at " + p.text());
}

RuleResult skolemize(ProofContext& ctx, const Sequent& g, const Position& p, const std::string& rule) {
    const auto& f = top(g, p);
    const FormulaKind want = p.succedent ? FormulaKind::Forall : FormulaKind::Exists;
    if (f->kind != want) mismatch(rule + " does not match " + to_string(f));
    std::vector<TermPtr> args;
    std::vector<std::string> arg_sorts, arg_names;
    for (const auto& [name, sort] : free_vars(f)) {
        args.push_back(make_var(name, sort));
        arg_sorts.push_back(sort);
        arg_names.push_back(name);
    }
    const std::string name = ctx.fresh(f->var, names_of(g));
    ctx.sig.add_function(FunctionSymbol{name, arg_sorts, f->var_sort, true});
    ctx.skolem_args[name] = arg_names;
    auto witness = make_app(name, args, f->var_sort);
    auto inst = substitute(f->left, f->var, witness);
    RuleResult r;
    r.premises.push_back(p.succedent ? with_side(g, p, {}, {inst}) : with_side(g, p, {inst}, {}));
    r.note = "Skolem symbol " + name;
    return r;
}

RuleResult instantiate(ProofContext& ctx, const Sequent& g, const Position& p, const RuleApplication& app) {
    const auto& f = top(g, p);
    const FormulaKind want = p.succedent ? FormulaKind::Exists : FormulaKind::Forall;
    if (f->kind != want) mismatch(app.rule + " does not match " + to_string(f));
    auto t = parse_term_arg(ctx, g, arg(app, 0, "instance term"), f->var_sort);
    auto inst = substitute(f->left, f->var, t);
    RuleResult r;
    r.premises.push_back(p.succedent ? with_side(g, p, {}, {inst}, false) : with_side(g, p, {inst}, {}, false));
    return r;
}

/// Replaces occurrences of `target` outside binders of its variables; modalities
/// mentioning its symbol are rejected.
FormulaPtr abstract_term(const FormulaPtr& f, const TermPtr& target, const TermPtr& with) {
    const auto tv = free_vars(target);
    std::function<TermPtr(const TermPtr&)> term = [&](const TermPtr& t) -> TermPtr {
        if (equal(t, target)) return with;
        if (t->args.empty()) return t;
        auto n = std::make_shared<Term>(*t);
        for (auto& a : n->args) a = term(a);
        return n;
    };
    std::function<FormulaPtr(const FormulaPtr&)> go = [&](const FormulaPtr& g) -> FormulaPtr {
        switch (g->kind) {
            case FormulaKind::Eq:
            case FormulaKind::Geq: {
                auto n = std::make_shared<Formula>(*g);
                n->lhs = term(g->lhs);
                n->rhs = term(g->rhs);
                return n;
            }
            case FormulaKind::Not: return make_not(go(g->left));
            case FormulaKind::And: return make_and(go(g->left), go(g->right));
            case FormulaKind::Forall:
            case FormulaKind::Exists:
                if (mentions_var(tv, g->var)) return g;
                return with_body(g, go(g->left));
            case FormulaKind::Box:
            case FormulaKind::Diamond:
                if (symbols_of(g).count(target->name))
                    side("iall cannot abstract " + to_string(target) + " inside the modality " + to_string(g));
                return g;
            default: return g;
        }
    };
    return go(f);
}

RuleResult oracle_close(ProofContext& ctx, const FormulaPtr& f, const std::string& what) {
    auto r = decide_universal(f, ctx.oracle);
    if (r.verdict != Verdict::Valid) {
        std::string msg = what + ": oracle " + verdict_name(r.verdict);
        if (!r.diagnostic.empty()) msg += " (" + r.diagnostic + ")";
        throw OracleFailure(msg, r);
    }
    RuleResult out;
    out.method = r.method;
    out.note = method_name(r.method);
    return out;
}

bool is_new_object_claim(const FormulaPtr& f) {
    if (f->kind != FormulaKind::Exists || f->var_sort == kReal) return false;
    auto b = f->left;
    // a trailing `& true` is what <?> leaves behind on a bare `true` postcondition
    while (b->kind == FormulaKind::And && b->right->kind == FormulaKind::True) b = b->left;
    return b->kind == FormulaKind::Eq && b->lhs->kind == TermKind::App && b->lhs->name == kExistence &&
           b->lhs->args.size() == 1 && b->lhs->args[0]->kind == TermKind::Var && b->lhs->args[0]->name == f->var &&
           b->rhs->kind == TermKind::Lit && b->rhs->value == 0;
}

}  // namespace

// ---------------------------------------------------------------- dispatch

RuleResult apply_rule(ProofContext& ctx, const Sequent& g, const RuleApplication& app) {
    const std::string& rule = app.rule;
    if (!find_rule(rule)) bad_arg("unknown rule '" + rule + "', nearest: " + nearest_rule(rule));
    RuleResult r;

    if (rule == "ax") {
        if (app.positions.size() >= 2) {
            const auto& a = top(g, app.positions[0].succedent ? app.positions[1] : app.positions[0]);
            const auto& s = top(g, app.positions[0].succedent ? app.positions[0] : app.positions[1]);
            if (!equal(a, s)) mismatch("ax needs the same formula on both sides");
            return r;
        }
        for (const auto& a : g.ante)
            if (member(g.succ, a)) return r;
        mismatch("ax: no formula occurs on both sides of " + to_string(g));
    }
    if (rule == "R") {
        if (app.args.empty()) return oracle_close(ctx, g.as_formula(), "R");
        const auto& p = position(app);
        require_top(p, rule);
        require_side(p, true, rule);
        const auto& phi = top(g, p);
        auto psi = parse_formula_arg(ctx, g, app.args[0]);
        // Side condition Γ ∧ ψ → φ; the premise asks for ψ instead of φ.
        std::vector<FormulaPtr> hyp = g.ante;
        hyp.push_back(psi);
        auto check = oracle_close(ctx, make_implies(make_conj(hyp), phi), "R side condition");
        r.premises.push_back(with_side(g, p, {}, {psi}));
        r.method = check.method;
        r.note = "rewrite justified by " + check.note;
        return r;
    }
    if (rule == "cut") {
        auto c = parse_formula_arg(ctx, g, arg(app, 0, "cut formula"));
        r.premises.push_back(Sequent(g.ante, [&] { auto s = g.succ; s.push_back(c); return s; }()));
        r.premises.push_back(Sequent([&] { auto a = g.ante; a.push_back(c); return a; }(), g.succ));
        return r;
    }
    if (rule == "iexists") bad_arg("iexists works on several goals and is applied by the proof checker");
    if (rule == "iall") {
        auto s = parse_term_arg(ctx, g, arg(app, 0, "application f(s)"), kReal);
        auto t = parse_term_arg(ctx, g, arg(app, 1, "application f(t)"), kReal);
        if (s->kind != TermKind::App || t->kind != TermKind::App || s->name != t->name || s->args.size() != t->args.size())
            bad_arg("iall needs two applications of one symbol");
        auto used = names_of(g);
        const std::string x = ctx.fresh("X", used);
        used.insert(x);
        const std::string y = ctx.fresh("Y", used);
        const auto xv = make_var(x, kReal), yv = make_var(y, kReal);
        const FormulaPtr phi = make_conj(g.ante);
        const FormulaPtr psi = make_disj(g.succ);
        std::vector<FormulaPtr> eqs;
        for (std::size_t k = 0; k < s->args.size(); ++k) eqs.push_back(make_eq(s->args[k], t->args[k]));
        const auto same = make_conj(eqs);
        const auto phi_x = abstract_term(phi, s, xv);
        const auto then_f = make_implies(same, make_implies(phi_x, abstract_term(psi, t, xv)));
        const auto else_f = make_implies(make_not(same), make_implies(phi_x, abstract_term(psi, t, yv)));
        r.premises.push_back(
            Sequent({}, {make_forall(x, kReal, make_forall(y, kReal, make_and(then_f, else_f)))}));
        return r;
    }

    const Position& p = position(app);
    if (is_rewrite(rule)) {
        const auto& whole = top(g, p);
        const auto f = subformula(whole, p.subpath);
        Rewrite rw;
        bool fallback = false;
        try {
            rw = rewrite(ctx, g, f, rule);
        } catch (const RuleError& e) {
            // Frame fallback: an assignment to symbols the rest of the goal does not mention.
            if (rule != "[:=]" || e.kind != RuleError::Kind::SideCondition || !p.succedent || !p.subpath.empty() ||
                std::string(e.what()).find("not admissible") == std::string::npos)
                throw;
            fallback = true;
        }
        if (fallback) {
            const auto w = written_symbols(f->program);
            auto keeps = [&](const FormulaPtr& h) {
                for (const auto& s : symbols_of(h))
                    if (w.count(s)) return false;
                return true;
            };
            std::vector<FormulaPtr> a, s{f->left};
            for (const auto& h : g.ante)
                if (keeps(h)) a.push_back(h);
            for (std::size_t k = 0; k < g.succ.size(); ++k)
                if (k != p.index && keeps(g.succ[k])) s.push_back(g.succ[k]);
            r.premises.push_back(Sequent(a, s));
            r.note = "frame: context mentioning assigned symbols dropped";
            return r;
        }
        r.note = rw.note;
        if (p.succedent) {
            if (auto prefix = box_prefix(whole, p.subpath); prefix && rw.premise->kind == FormulaKind::And) {
                for (const auto& part : conjuncts(rw.premise)) {
                    FormulaPtr wrapped = part;
                    for (auto it = prefix->rbegin(); it != prefix->rend(); ++it) wrapped = make_box(*it, wrapped);
                    r.premises.push_back(with_side(g, p, {}, {wrapped}));
                }
                return r;
            }
        }
        auto replaced = replace_at(whole, p.subpath, rw.premise);
        r.premises.push_back(p.succedent ? with_side(g, p, {}, {replaced}) : with_side(g, p, {replaced}, {}));
        return r;
    }

    require_top(p, rule);
    const auto& f = top(g, p);

    if (rule == "notr" || rule == "notl") {
        require_side(p, rule == "notr", rule);
        if (f->kind != FormulaKind::Not) mismatch(rule + " does not match " + to_string(f));
        r.premises.push_back(p.succedent ? with_side(g, p, {f->left}, {}) : with_side(g, p, {}, {f->left}));
        return r;
    }
    if (rule == "andr") {
        require_side(p, true, rule);
        if (f->kind != FormulaKind::And) mismatch("andr does not match " + to_string(f));
        r.premises.push_back(with_side(g, p, {}, {f->left}));
        r.premises.push_back(with_side(g, p, {}, {f->right}));
        return r;
    }
    if (rule == "andl") {
        require_side(p, false, rule);
        if (f->kind != FormulaKind::And) mismatch("andl does not match " + to_string(f));
        r.premises.push_back(with_side(g, p, {f->left, f->right}, {}));
        return r;
    }
    if (rule == "allr" || rule == "existsl") {
        require_side(p, rule == "allr", rule);
        return skolemize(ctx, g, p, rule);
    }
    if (rule == "existsr" || rule == "alll") {
        require_side(p, rule == "existsr", rule);
        return instantiate(ctx, g, p, app);
    }
    if (rule == "ex") {
        require_side(p, true, rule);
        if (!is_new_object_claim(f)) mismatch("ex needs exists n:A E(n) = 0, found " + to_string(f));
        r.note = "a new object exists";
        return r;
    }
    if (rule == "[]gen" || rule == "<>gen") {
        const auto& q = position(app, 1);
        const auto& succ_f = p.succedent ? f : top(g, q);
        const auto& ante_f = p.succedent ? top(g, q) : f;
        if (p.succedent == q.succedent) mismatch(rule + " needs one position on each side");
        const FormulaKind k = rule == "[]gen" ? FormulaKind::Box : FormulaKind::Diamond;
        if (succ_f->kind != k || ante_f->kind != k || !equal(succ_f->program, ante_f->program) ||
            succ_f->temporal != ante_f->temporal)
            mismatch(rule + " needs the same modality on both sides");
        r.premises.push_back(Sequent({ante_f->left}, {succ_f->left}));
        return r;
    }
    if (rule == "ind") {
        require_side(p, true, rule);
        if (f->kind != FormulaKind::Box || f->program->kind != ProgramKind::Loop || f->temporal != Temporal::None)
            mismatch("ind does not match " + to_string(f));
        auto inv = parse_formula_arg(ctx, g, arg(app, 0, "invariant"));
        if (!equal(inv, f->left))
            bad_arg("ind proves the postcondition as its own invariant; cut in " + to_string(inv) + " first");
        if (!assumed(g.ante, inv)) side("invariant " + to_string(inv) + " is not in the antecedent");
        r.premises.push_back(Sequent({inv}, {make_box(f->program->left, inv)}));
        return r;
    }
    if (rule == "con") {
        require_side(p, true, rule);
        if (f->kind != FormulaKind::Diamond || f->program->kind != ProgramKind::Loop || f->temporal != Temporal::None)
            mismatch("con does not match " + to_string(f));
        const std::string v = arg(app, 1, "variant variable");
        if (!is_identifier(v)) bad_arg("variant variable must be a name, got " + v);
        auto variant = parse_formula_arg(ctx, g, arg(app, 0, "variant"), VarSet{{v, kReal}});
        const auto alpha = f->program->left;
        if (names_in(alpha).count(v)) side("variant variable " + v + " occurs in " + to_string(alpha));
        const auto vv = make_var(v, kReal);
        const auto expected = make_exists(v, kReal, make_and(make_leq(vv, make_lit(0)), variant));
        if (!equal(expected, f->left)) mismatch("con needs the postcondition " + to_string(expected));
        const auto start = make_exists(v, kReal, variant);
        if (!member(flat(g.ante), start)) side("antecedent lacks " + to_string(start));
        auto step = substitute(variant, v, make_sub(vv, make_lit(1)));
        r.premises.push_back(Sequent({make_and(make_gt(vv, make_lit(0)), variant)}, {make_diamond(alpha, step)}));
        return r;
    }
    if (rule == "DI" || rule == "DC") {
        require_side(p, true, rule);
        if (f->kind != FormulaKind::Box || f->program->kind != ProgramKind::Ode || f->temporal != Temporal::None)
            mismatch(rule + " does not match " + to_string(f));
        const auto& ode = *f->program;
        const auto phi = f->left;
        if (rule == "DC") {
            auto psi = parse_formula_arg(ctx, g, arg(app, 0, "formula to cut into the domain"));
            auto cut_goal = make_box(f->program, psi);
            auto domain = ode.cond ? make_and(ode.cond, psi) : psi;
            auto use = make_box(make_ode(ode.var, ode.var_sort, ode.clauses, domain), phi);
            r.premises.push_back(with_side(g, p, {}, {cut_goal}));
            r.premises.push_back(with_side(g, p, {}, {use}));
            return r;
        }
        const std::string diag = injectivity_diagnostic(ode);
        if (!diag.empty()) side("differential equation is not injective: " + diag);
        auto d = total_derivation(phi, ode_targets(ode));
        std::vector<Clause> primed = ode.clauses;
        for (auto& c : primed) c.primed = true;
        auto deriv = make_box(make_assign(ode.var, ode.var_sort, primed), d);
        std::vector<FormulaPtr> ante;
        if (ode.cond) {
            FormulaPtr chi = ode.cond;
            if (!ode.var.empty() && mentions_var(free_vars(chi), ode.var)) chi = make_forall(ode.var, ode.var_sort, chi);
            ante.push_back(chi);
        }
        r.premises.push_back(Sequent(ante, {deriv}));
        // The initial condition is its own goal, after the derivative one, when not already assumed.
        if (!assumed(g.ante, phi)) r.premises.push_back(with_side(g, p, {}, {phi}));
        return r;
    }
    if (rule == "[;]dia") {
        require_side(p, true, rule);
        if (f->kind != FormulaKind::Box || f->program->kind != ProgramKind::Seq || f->temporal != Temporal::Eventually)
            mismatch("[;]dia does not match " + to_string(f));
        const auto& pr = f->program;
        r.premises.push_back(with_side(
            g, p, {}, {make_box(pr->left, f->left, Temporal::Eventually),
                       make_box(pr->left, make_box(pr->right, f->left, Temporal::Eventually))}));
        return r;
    }
    if (rule == "[a]dia") {
        require_side(p, true, rule);
        if (f->kind != FormulaKind::Box || f->temporal != Temporal::Eventually)
            mismatch("[a]dia does not match " + to_string(f));
        const std::string t = ctx.fresh("m", names_of(g));
        auto monitored = transform_monitor(f->program, f->left, t);
        auto premise = make_or(f->left, make_forall(t, kReal, make_box(monitored, make_eq(make_var(t, kReal), make_lit(1)))));
        r.premises.push_back(with_side(g, p, {}, {premise}));
        return r;
    }
    mismatch("rule " + rule + " cannot be applied here");
}

Sequent apply_iexists(ProofContext& ctx, const std::vector<Sequent>& goals, const std::string& var,
                      const std::vector<Sequent>& other_open) {
    if (!is_identifier(var)) bad_arg("iexists needs a variable name");
    bool found = false;
    for (const auto& g : goals)
        for (const auto& [n, s] : free_of(g))
            if (n == var) {
                if (s != kReal) side("iexists variable " + var + " must be real");
                found = true;
            }
    if (!found) side("variable " + var + " is not free in the listed goals");
    for (const auto& [sk, args] : ctx.skolem_args)
        if (std::find(args.begin(), args.end(), var) != args.end())
            side("Skolem symbol " + sk + " depends on " + var);
    for (const auto& g : other_open)
        if (mentions_var(free_of(g), var)) side(var + " also occurs in another open goal: " + to_string(g));
    std::vector<FormulaPtr> parts;
    for (const auto& g : goals) parts.push_back(g.as_formula());
    return Sequent({}, {make_exists(var, kReal, make_conj(parts))});
}

}  // namespace qdtl
