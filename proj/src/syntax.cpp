#include "qdtl/syntax.hpp"

#include <algorithm>
#include <functional>

namespace qdtl {

// ---------------------------------------------------------------- constructors

namespace {

std::shared_ptr<Term> new_term(TermKind k) {
    auto t = std::make_shared<Term>();
    t->kind = k;
    return t;
}

std::shared_ptr<Formula> new_formula(FormulaKind k) {
    auto f = std::make_shared<Formula>();
    f->kind = k;
    return f;
}

std::shared_ptr<Program> new_program(ProgramKind k) {
    auto p = std::make_shared<Program>();
    p->kind = k;
    return p;
}

}  // namespace

TermPtr make_var(std::string name, std::string sort) {
    auto t = new_term(TermKind::Var);
    t->name = std::move(name);
    t->sort = std::move(sort);
    return t;
}

TermPtr make_app(std::string name, std::vector<TermPtr> args, std::string sort) {
    auto t = new_term(TermKind::App);
    t->name = std::move(name);
    t->args = std::move(args);
    t->sort = std::move(sort);
    return t;
}

TermPtr make_prime(std::string name, std::vector<TermPtr> args) {
    auto t = new_term(TermKind::Prime);
    t->name = std::move(name);
    t->args = std::move(args);
    t->sort = kReal;
    return t;
}

TermPtr make_lit(const Rational& value) {
    if (value < 0) return make_neg(make_lit(-value));
    auto t = new_term(TermKind::Lit);
    t->value = value;
    t->sort = kReal;
    return t;
}

TermPtr make_ite(FormulaPtr cond, TermPtr then_term, TermPtr else_term) {
    auto t = new_term(TermKind::Ite);
    t->sort = then_term->sort;
    t->cond = std::move(cond);
    t->args = {std::move(then_term), std::move(else_term)};
    return t;
}

namespace {
TermPtr arith(TermKind k, std::vector<TermPtr> args) {
    auto t = new_term(k);
    t->sort = kReal;
    t->args = std::move(args);
    return t;
}
}  // namespace

TermPtr make_neg(TermPtr a) { return arith(TermKind::Neg, {std::move(a)}); }
TermPtr make_add(TermPtr a, TermPtr b) { return arith(TermKind::Add, {std::move(a), std::move(b)}); }
TermPtr make_sub(TermPtr a, TermPtr b) { return arith(TermKind::Sub, {std::move(a), std::move(b)}); }
TermPtr make_mul(TermPtr a, TermPtr b) { return arith(TermKind::Mul, {std::move(a), std::move(b)}); }

TermPtr make_pow(TermPtr base, unsigned exponent) {
    auto t = arith(TermKind::Pow, {std::move(base)});
    std::const_pointer_cast<Term>(t)->exponent = exponent;
    return t;
}

bool is_arith(TermKind k) {
    return k == TermKind::Neg || k == TermKind::Add || k == TermKind::Sub || k == TermKind::Mul ||
           k == TermKind::Pow;
}

FormulaPtr make_true() { return new_formula(FormulaKind::True); }
FormulaPtr make_false() { return new_formula(FormulaKind::False); }

FormulaPtr make_eq(TermPtr a, TermPtr b) {
    auto f = new_formula(FormulaKind::Eq);
    f->lhs = std::move(a);
    f->rhs = std::move(b);
    return f;
}

FormulaPtr make_geq(TermPtr a, TermPtr b) {
    auto f = new_formula(FormulaKind::Geq);
    f->lhs = std::move(a);
    f->rhs = std::move(b);
    return f;
}

FormulaPtr make_not(FormulaPtr a) {
    auto f = new_formula(FormulaKind::Not);
    f->left = std::move(a);
    return f;
}

FormulaPtr make_and(FormulaPtr a, FormulaPtr b) {
    auto f = new_formula(FormulaKind::And);
    f->left = std::move(a);
    f->right = std::move(b);
    return f;
}

FormulaPtr make_forall(std::string var, std::string sort, FormulaPtr body) {
    auto f = new_formula(FormulaKind::Forall);
    f->var = std::move(var);
    f->var_sort = std::move(sort);
    f->left = std::move(body);
    return f;
}

FormulaPtr make_exists(std::string var, std::string sort, FormulaPtr body) {
    auto f = new_formula(FormulaKind::Exists);
    f->var = std::move(var);
    f->var_sort = std::move(sort);
    f->left = std::move(body);
    return f;
}

FormulaPtr make_box(ProgramPtr p, FormulaPtr body, Temporal t) {
    auto f = new_formula(FormulaKind::Box);
    f->program = std::move(p);
    f->left = std::move(body);
    f->temporal = t;
    return f;
}

FormulaPtr make_diamond(ProgramPtr p, FormulaPtr body, Temporal t) {
    auto f = new_formula(FormulaKind::Diamond);
    f->program = std::move(p);
    f->left = std::move(body);
    f->temporal = t;
    return f;
}

FormulaPtr make_or(FormulaPtr a, FormulaPtr b) {
    return make_not(make_and(make_not(std::move(a)), make_not(std::move(b))));
}

FormulaPtr make_implies(FormulaPtr a, FormulaPtr b) {
    return make_not(make_and(std::move(a), make_not(std::move(b))));
}

FormulaPtr make_iff(FormulaPtr a, FormulaPtr b) { return make_and(make_implies(a, b), make_implies(b, a)); }
FormulaPtr make_leq(TermPtr a, TermPtr b) { return make_geq(std::move(b), std::move(a)); }
FormulaPtr make_lt(TermPtr a, TermPtr b) { return make_not(make_geq(std::move(a), std::move(b))); }
FormulaPtr make_gt(TermPtr a, TermPtr b) { return make_not(make_geq(std::move(b), std::move(a))); }
FormulaPtr make_neq(TermPtr a, TermPtr b) { return make_not(make_eq(std::move(a), std::move(b))); }

FormulaPtr make_conj(const std::vector<FormulaPtr>& parts) {
    if (parts.empty()) return make_true();
    FormulaPtr acc = parts.back();
    for (std::size_t k = parts.size() - 1; k-- > 0;) acc = make_and(parts[k], acc);
    return acc;
}

FormulaPtr make_disj(const std::vector<FormulaPtr>& parts) {
    if (parts.empty()) return make_false();
    FormulaPtr acc = parts.back();
    for (std::size_t k = parts.size() - 1; k-- > 0;) acc = make_or(parts[k], acc);
    return acc;
}

std::optional<std::pair<FormulaPtr, FormulaPtr>> as_or(const FormulaPtr& f) {
    if (f->kind != FormulaKind::Not || f->left->kind != FormulaKind::And) return std::nullopt;
    const auto& conj = f->left;
    if (conj->left->kind != FormulaKind::Not || conj->right->kind != FormulaKind::Not) return std::nullopt;
    return std::make_pair(conj->left->left, conj->right->left);
}

std::optional<std::pair<FormulaPtr, FormulaPtr>> as_implies(const FormulaPtr& f) {
    if (f->kind != FormulaKind::Not || f->left->kind != FormulaKind::And) return std::nullopt;
    const auto& conj = f->left;
    if (conj->right->kind != FormulaKind::Not) return std::nullopt;
    return std::make_pair(conj->left, conj->right->left);
}

FormulaPtr with_body(const FormulaPtr& f, FormulaPtr body) {
    auto g = std::make_shared<Formula>(*f);
    g->left = std::move(body);
    return g;
}

ProgramPtr make_assign(std::string var, std::string sort, std::vector<Clause> clauses) {
    auto p = new_program(ProgramKind::Assign);
    p->var = std::move(var);
    p->var_sort = std::move(sort);
    p->clauses = std::move(clauses);
    return p;
}

ProgramPtr make_ode(std::string var, std::string sort, std::vector<Clause> clauses, FormulaPtr domain) {
    auto p = new_program(ProgramKind::Ode);
    p->var = std::move(var);
    p->var_sort = std::move(sort);
    p->clauses = std::move(clauses);
    p->cond = std::move(domain);
    return p;
}

ProgramPtr make_test(FormulaPtr cond) {
    auto p = new_program(ProgramKind::Test);
    p->cond = std::move(cond);
    return p;
}

ProgramPtr make_choice(ProgramPtr a, ProgramPtr b) {
    auto p = new_program(ProgramKind::Choice);
    p->left = std::move(a);
    p->right = std::move(b);
    return p;
}

ProgramPtr make_seq(ProgramPtr a, ProgramPtr b) {
    auto p = new_program(ProgramKind::Seq);
    p->left = std::move(a);
    p->right = std::move(b);
    return p;
}

ProgramPtr make_loop(ProgramPtr body) {
    auto p = new_program(ProgramKind::Loop);
    p->left = std::move(body);
    return p;
}

ProgramPtr make_new(std::string target, std::string sort) {
    auto p = new_program(ProgramKind::New);
    p->var = std::move(target);
    p->var_sort = std::move(sort);
    return p;
}

// ---------------------------------------------------------------- equality

bool equal(const TermPtr& a, const TermPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind || a->name != b->name || a->args.size() != b->args.size()) return false;
    if (a->kind == TermKind::Lit && a->value != b->value) return false;
    if (a->kind == TermKind::Pow && a->exponent != b->exponent) return false;
    if (a->kind == TermKind::Var && a->sort != b->sort) return false;
    if (a->kind == TermKind::Ite && !equal(a->cond, b->cond)) return false;
    for (std::size_t k = 0; k < a->args.size(); ++k)
        if (!equal(a->args[k], b->args[k])) return false;
    return true;
}

bool equal(const FormulaPtr& a, const FormulaPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case FormulaKind::True:
        case FormulaKind::False: return true;
        case FormulaKind::Eq:
        case FormulaKind::Geq: return equal(a->lhs, b->lhs) && equal(a->rhs, b->rhs);
        case FormulaKind::Not: return equal(a->left, b->left);
        case FormulaKind::And: return equal(a->left, b->left) && equal(a->right, b->right);
        case FormulaKind::Forall:
        case FormulaKind::Exists:
            return a->var == b->var && a->var_sort == b->var_sort && equal(a->left, b->left);
        case FormulaKind::Box:
        case FormulaKind::Diamond:
            return a->temporal == b->temporal && equal(a->program, b->program) && equal(a->left, b->left);
    }
    return false;
}

namespace {
bool equal_clauses(const std::vector<Clause>& a, const std::vector<Clause>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k].fn != b[k].fn || a[k].primed != b[k].primed || a[k].args.size() != b[k].args.size())
            return false;
        for (std::size_t m = 0; m < a[k].args.size(); ++m)
            if (!equal(a[k].args[m], b[k].args[m])) return false;
        if (!equal(a[k].rhs, b[k].rhs)) return false;
    }
    return true;
}
}  // namespace

bool equal(const ProgramPtr& a, const ProgramPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind || a->var != b->var || a->var_sort != b->var_sort) return false;
    if (!equal_clauses(a->clauses, b->clauses)) return false;
    if (!equal(a->cond, b->cond)) return false;
    return equal(a->left, b->left) && equal(a->right, b->right);
}

// ---------------------------------------------------------------- signature

void Signature::add_sort(const std::string& name) {
    if (name == kReal || has_sort(name)) return;
    sorts_.push_back(name);
}

bool Signature::has_sort(const std::string& name) const {
    return name == kReal || is_object_sort(name);
}

bool Signature::is_object_sort(const std::string& name) const {
    return std::find(sorts_.begin(), sorts_.end(), name) != sorts_.end();
}

void Signature::add_function(FunctionSymbol f) {
    const std::string name = f.name;
    functions_[name] = std::move(f);
}

std::optional<FunctionSymbol> Signature::find(const std::string& name, const std::string& arg_sort) const {
    if (name == kExistence) {
        std::string s = arg_sort;
        if (s.empty() && !sorts_.empty()) s = sorts_.front();
        if (!is_object_sort(s)) return std::nullopt;
        return FunctionSymbol{kExistence, {s}, kReal, false};
    }
    auto it = functions_.find(name);
    if (it == functions_.end()) return std::nullopt;
    return it->second;
}

bool Signature::has_function(const std::string& name) const {
    return name == kExistence || functions_.count(name) > 0;
}

// ---------------------------------------------------------------- typing

namespace {

struct Typer {
    const Signature& sig;
    TypeCheck result;

    bool fail(TypeErrorKind k, const std::string& msg, const std::string& path) {
        if (result.ok()) result = TypeCheck{k, msg, path};
        return false;
    }

    bool term(const TermPtr& t, const std::string& path) {
        if (!t) return fail(TypeErrorKind::Malformed, "missing term", path);
        switch (t->kind) {
            case TermKind::Var:
                if (!sig.has_sort(t->sort))
                    return fail(TypeErrorKind::UnknownSymbol, "unknown sort '" + t->sort + "' of variable " + t->name, path);
                return true;
            case TermKind::Lit: return true;
            case TermKind::App:
            case TermKind::Prime: {
                for (std::size_t k = 0; k < t->args.size(); ++k)
                    if (!term(t->args[k], path + ".args[" + std::to_string(k) + "]")) return false;
                const std::string first = t->args.empty() ? "" : t->args[0]->sort;
                auto f = sig.find(t->name, first);
                if (!f) return fail(TypeErrorKind::UnknownSymbol, "unknown function symbol '" + t->name + "'", path);
                if (f->arg_sorts.size() != t->args.size())
                    return fail(TypeErrorKind::SortMismatch,
                                "'" + t->name + "' expects " + std::to_string(f->arg_sorts.size()) + " arguments", path);
                for (std::size_t k = 0; k < t->args.size(); ++k)
                    if (t->args[k]->sort != f->arg_sorts[k])
                        return fail(TypeErrorKind::SortMismatch,
                                    "argument " + std::to_string(k) + " of '" + t->name + "' has sort " +
                                        t->args[k]->sort + ", expected " + f->arg_sorts[k],
                                    path + ".args[" + std::to_string(k) + "]");
                if (t->kind == TermKind::Prime && f->result_sort != kReal)
                    return fail(TypeErrorKind::SortMismatch, "differential symbol of non-real '" + t->name + "'", path);
                if (t->kind == TermKind::App && t->sort != f->result_sort)
                    return fail(TypeErrorKind::SortMismatch, "'" + t->name + "' has sort " + f->result_sort, path);
                return true;
            }
            case TermKind::Ite: {
                if (!formula(t->cond, path + ".cond")) return false;
                if (contains_modality(t->cond))
                    return fail(TypeErrorKind::Malformed, "conditional term with modal condition", path);
                if (!term(t->args[0], path + ".then") || !term(t->args[1], path + ".else")) return false;
                if (t->args[0]->sort != t->args[1]->sort)
                    return fail(TypeErrorKind::SortMismatch, "conditional branches have different sorts", path);
                return true;
            }
            default:
                for (std::size_t k = 0; k < t->args.size(); ++k) {
                    const std::string p = path + ".args[" + std::to_string(k) + "]";
                    if (!term(t->args[k], p)) return false;
                    if (t->args[k]->sort != kReal)
                        return fail(TypeErrorKind::SortMismatch, "arithmetic on sort " + t->args[k]->sort, p);
                }
                return true;
        }
    }

    bool formula(const FormulaPtr& f, const std::string& path) {
        if (!f) return fail(TypeErrorKind::Malformed, "missing formula", path);
        switch (f->kind) {
            case FormulaKind::True:
            case FormulaKind::False: return true;
            case FormulaKind::Eq:
                if (!term(f->lhs, path + ".lhs") || !term(f->rhs, path + ".rhs")) return false;
                if (f->lhs->sort != f->rhs->sort)
                    return fail(TypeErrorKind::SortMismatch,
                                "equality between sorts " + f->lhs->sort + " and " + f->rhs->sort, path);
                return true;
            case FormulaKind::Geq:
                if (!term(f->lhs, path + ".lhs") || !term(f->rhs, path + ".rhs")) return false;
                if (f->lhs->sort != kReal || f->rhs->sort != kReal)
                    return fail(TypeErrorKind::SortMismatch, "ordering on non-real sort", path);
                return true;
            case FormulaKind::Not: return formula(f->left, path + ".left");
            case FormulaKind::And: return formula(f->left, path + ".left") && formula(f->right, path + ".right");
            case FormulaKind::Forall:
            case FormulaKind::Exists:
                if (!sig.has_sort(f->var_sort))
                    return fail(TypeErrorKind::UnknownSymbol, "unknown sort '" + f->var_sort + "'", path);
                return formula(f->left, path + ".body");
            case FormulaKind::Box:
            case FormulaKind::Diamond: return program(f->program, path + ".program") && formula(f->left, path + ".post");
        }
        return true;
    }

    bool first_order(const FormulaPtr& f, const std::string& path) {
        if (!formula(f, path)) return false;
        if (contains_modality(f)) return fail(TypeErrorKind::Malformed, "modality inside a test or evolution domain", path);
        return true;
    }

    bool clause(const Program& p, const Clause& c, const std::string& path, bool ode) {
        for (std::size_t k = 0; k < c.args.size(); ++k)
            if (!term(c.args[k], path + ".args[" + std::to_string(k) + "]")) return false;
        const std::string first = c.args.empty() ? "" : c.args[0]->sort;
        auto f = sig.find(c.fn, first);
        if (!f) return fail(TypeErrorKind::UnknownSymbol, "unknown function symbol '" + c.fn + "'", path);
        if (f->rigid) return fail(TypeErrorKind::SortMismatch, "assignment to rigid symbol '" + c.fn + "'", path);
        if (f->arg_sorts.size() != c.args.size())
            return fail(TypeErrorKind::SortMismatch, "'" + c.fn + "' arity mismatch", path);
        for (std::size_t k = 0; k < c.args.size(); ++k)
            if (c.args[k]->sort != f->arg_sorts[k])
                return fail(TypeErrorKind::SortMismatch, "argument sort mismatch for '" + c.fn + "'", path);
        for (const auto& a : c.args)
            if (symbols_of(a).count(c.fn)) return fail(TypeErrorKind::Malformed, "'" + c.fn + "' occurs in its own arguments", path);
        if (!term(c.rhs, path + ".rhs")) return false;
        const bool differential = ode || c.primed;
        if (differential && f->result_sort != kReal)
            return fail(TypeErrorKind::SortMismatch, "differential equation for non-real '" + c.fn + "'", path);
        const std::string want = differential ? kReal : f->result_sort;
        if (c.rhs->sort != want) return fail(TypeErrorKind::SortMismatch, "right-hand side sort mismatch for '" + c.fn + "'", path);
        (void)p;
        return true;
    }

    bool program(const ProgramPtr& p, const std::string& path) {
        if (!p) return fail(TypeErrorKind::Malformed, "missing program", path);
        switch (p->kind) {
            case ProgramKind::Assign:
            case ProgramKind::Ode: {
                if (!p->var.empty() && !sig.is_object_sort(p->var_sort))
                    return fail(TypeErrorKind::SortMismatch, "quantified program over non-object sort '" + p->var_sort + "'", path);
                if (p->clauses.empty()) return fail(TypeErrorKind::Malformed, "empty clause list", path);
                std::set<std::string> targets;
                for (std::size_t k = 0; k < p->clauses.size(); ++k) {
                    const auto& c = p->clauses[k];
                    if (!clause(*p, c, path + ".clauses[" + std::to_string(k) + "]", p->kind == ProgramKind::Ode))
                        return false;
                    const std::string key = c.fn + (c.primed ? "'" : "");
                    if (!targets.insert(key).second)
                        return fail(TypeErrorKind::Malformed, "'" + key + "' assigned twice in one program", path);
                }
                if (p->kind == ProgramKind::Ode && p->cond) return first_order(p->cond, path + ".domain");
                return true;
            }
            case ProgramKind::Test: return first_order(p->cond, path + ".cond");
            case ProgramKind::Choice:
            case ProgramKind::Seq: return program(p->left, path + ".left") && program(p->right, path + ".right");
            case ProgramKind::Loop: return program(p->left, path + ".body");
            case ProgramKind::New: {
                if (p->var_sort == kReal) return fail(TypeErrorKind::SortMismatch, "new on sort R", path);
                auto f = sig.find(p->var);
                if (!f) return fail(TypeErrorKind::UnknownSymbol, "unknown symbol '" + p->var + "'", path);
                if (!f->arg_sorts.empty() || f->result_sort != p->var_sort)
                    return fail(TypeErrorKind::SortMismatch, "new target must be a nullary symbol of sort " + p->var_sort, path);
                return true;
            }
        }
        return true;
    }
};

}  // namespace

TypeCheck check_types(const TermPtr& t, const Signature& sig) {
    Typer ty{sig, {}};
    ty.term(t, "term");
    return ty.result;
}

TypeCheck check_types(const FormulaPtr& f, const Signature& sig) {
    Typer ty{sig, {}};
    ty.formula(f, "formula");
    return ty.result;
}

TypeCheck check_types(const ProgramPtr& p, const Signature& sig) {
    Typer ty{sig, {}};
    ty.program(p, "program");
    return ty.result;
}

// ---------------------------------------------------------------- symbols

namespace {

void fv_term(const TermPtr& t, VarSet& out, const std::set<std::string>& bound);
void fv_formula(const FormulaPtr& f, VarSet& out, std::set<std::string> bound);
void fv_program(const ProgramPtr& p, VarSet& out, const std::set<std::string>& bound);

void fv_term(const TermPtr& t, VarSet& out, const std::set<std::string>& bound) {
    if (!t) return;
    if (t->kind == TermKind::Var) {
        if (!bound.count(t->name)) out.insert({t->name, t->sort});
        return;
    }
    if (t->kind == TermKind::Ite) fv_formula(t->cond, out, bound);
    for (const auto& a : t->args) fv_term(a, out, bound);
}

void fv_formula(const FormulaPtr& f, VarSet& out, std::set<std::string> bound) {
    if (!f) return;
    switch (f->kind) {
        case FormulaKind::Eq:
        case FormulaKind::Geq:
            fv_term(f->lhs, out, bound);
            fv_term(f->rhs, out, bound);
            return;
        case FormulaKind::Forall:
        case FormulaKind::Exists:
            bound.insert(f->var);
            fv_formula(f->left, out, bound);
            return;
        case FormulaKind::Box:
        case FormulaKind::Diamond:
            fv_program(f->program, out, bound);
            fv_formula(f->left, out, bound);
            return;
        default:
            fv_formula(f->left, out, bound);
            fv_formula(f->right, out, bound);
    }
}

void fv_program(const ProgramPtr& p, VarSet& out, const std::set<std::string>& bound) {
    if (!p) return;
    if (p->kind == ProgramKind::Assign || p->kind == ProgramKind::Ode) {
        std::set<std::string> inner = bound;
        if (!p->var.empty()) inner.insert(p->var);
        for (const auto& c : p->clauses) {
            for (const auto& a : c.args) fv_term(a, out, inner);
            fv_term(c.rhs, out, inner);
        }
        fv_formula(p->cond, out, inner);
        return;
    }
    fv_formula(p->cond, out, bound);
    fv_program(p->left, out, bound);
    fv_program(p->right, out, bound);
}

void sym_term(const TermPtr& t, std::set<std::string>& out);
void sym_formula(const FormulaPtr& f, std::set<std::string>& out);
void sym_program(const ProgramPtr& p, std::set<std::string>& out);

void sym_term(const TermPtr& t, std::set<std::string>& out) {
    if (!t) return;
    if (t->kind == TermKind::App) out.insert(t->name);
    if (t->kind == TermKind::Prime) out.insert(t->name + "'");
    if (t->kind == TermKind::Ite) sym_formula(t->cond, out);
    for (const auto& a : t->args) sym_term(a, out);
}

void sym_formula(const FormulaPtr& f, std::set<std::string>& out) {
    if (!f) return;
    sym_term(f->lhs, out);
    sym_term(f->rhs, out);
    sym_formula(f->left, out);
    sym_formula(f->right, out);
    sym_program(f->program, out);
}

void sym_program(const ProgramPtr& p, std::set<std::string>& out) {
    if (!p) return;
    for (const auto& c : p->clauses) {
        out.insert(c.fn + (c.primed ? "'" : ""));
        for (const auto& a : c.args) sym_term(a, out);
        sym_term(c.rhs, out);
    }
    if (p->kind == ProgramKind::New) {
        out.insert(p->var);
        out.insert(kExistence);
    }
    sym_formula(p->cond, out);
    sym_program(p->left, out);
    sym_program(p->right, out);
}

void written(const ProgramPtr& p, std::set<std::string>& out) {
    if (!p) return;
    if (p->kind == ProgramKind::Assign || p->kind == ProgramKind::Ode)
        for (const auto& c : p->clauses) out.insert(c.fn + (c.primed ? "'" : ""));
    if (p->kind == ProgramKind::New) {
        out.insert(p->var);
        out.insert(kExistence);
    }
    written(p->left, out);
    written(p->right, out);
}

}  // namespace

VarSet free_vars(const TermPtr& t) {
    VarSet out;
    fv_term(t, out, {});
    return out;
}

VarSet free_vars(const FormulaPtr& f) {
    VarSet out;
    fv_formula(f, out, {});
    return out;
}

VarSet free_vars(const ProgramPtr& p) {
    VarSet out;
    fv_program(p, out, {});
    return out;
}

std::set<std::string> symbols_of(const TermPtr& t) {
    std::set<std::string> out;
    sym_term(t, out);
    return out;
}

std::set<std::string> symbols_of(const FormulaPtr& f) {
    std::set<std::string> out;
    sym_formula(f, out);
    return out;
}

std::set<std::string> symbols_of(const ProgramPtr& p) {
    std::set<std::string> out;
    sym_program(p, out);
    return out;
}

std::set<std::string> written_symbols(const ProgramPtr& p) {
    std::set<std::string> out;
    written(p, out);
    return out;
}

namespace {
void names_term(const TermPtr& t, std::set<std::string>& out);
void names_formula(const FormulaPtr& f, std::set<std::string>& out);
void names_program(const ProgramPtr& p, std::set<std::string>& out);

void names_term(const TermPtr& t, std::set<std::string>& out) {
    if (!t) return;
    if (!t->name.empty()) out.insert(t->name);
    names_formula(t->cond, out);
    for (const auto& a : t->args) names_term(a, out);
}

void names_formula(const FormulaPtr& f, std::set<std::string>& out) {
    if (!f) return;
    if (!f->var.empty()) out.insert(f->var);
    names_term(f->lhs, out);
    names_term(f->rhs, out);
    names_formula(f->left, out);
    names_formula(f->right, out);
    names_program(f->program, out);
}

void names_program(const ProgramPtr& p, std::set<std::string>& out) {
    if (!p) return;
    if (!p->var.empty()) out.insert(p->var);
    for (const auto& c : p->clauses) {
        out.insert(c.fn);
        for (const auto& a : c.args) names_term(a, out);
        names_term(c.rhs, out);
    }
    names_formula(p->cond, out);
    names_program(p->left, out);
    names_program(p->right, out);
}
}  // namespace

std::set<std::string> names_in(const FormulaPtr& f) {
    std::set<std::string> out;
    names_formula(f, out);
    return out;
}

std::set<std::string> names_in(const ProgramPtr& p) {
    std::set<std::string> out;
    names_program(p, out);
    return out;
}

bool contains_modality(const FormulaPtr& f) {
    if (!f) return false;
    if (f->kind == FormulaKind::Box || f->kind == FormulaKind::Diamond) return true;
    return contains_modality(f->left) || contains_modality(f->right);
}

bool contains_temporal(const FormulaPtr& f) {
    if (!f) return false;
    if ((f->kind == FormulaKind::Box || f->kind == FormulaKind::Diamond)) {
        if (f->temporal != Temporal::None) return true;
        std::function<bool(const ProgramPtr&)> prog = [&](const ProgramPtr& p) -> bool {
            if (!p) return false;
            if (contains_temporal(p->cond)) return true;
            return prog(p->left) || prog(p->right);
        };
        if (prog(f->program)) return true;
    }
    return contains_temporal(f->left) || contains_temporal(f->right);
}

bool contains_ite(const TermPtr& t) {
    if (!t) return false;
    if (t->kind == TermKind::Ite) return true;
    for (const auto& a : t->args)
        if (contains_ite(a)) return true;
    return false;
}

bool contains_ite(const FormulaPtr& f) {
    if (!f) return false;
    if (contains_ite(f->lhs) || contains_ite(f->rhs)) return true;
    if (f->program) {
        std::function<bool(const ProgramPtr&)> prog = [&](const ProgramPtr& p) -> bool {
            if (!p) return false;
            for (const auto& c : p->clauses) {
                if (contains_ite(c.rhs)) return true;
                for (const auto& a : c.args)
                    if (contains_ite(a)) return true;
            }
            if (contains_ite(p->cond)) return true;
            return prog(p->left) || prog(p->right);
        };
        if (prog(f->program)) return true;
    }
    return contains_ite(f->left) || contains_ite(f->right);
}

// ---------------------------------------------------------------- substitution

std::string fresh_name(const std::string& base, const std::set<std::string>& used) {
    if (!used.count(base)) return base;
    for (int k = 1;; ++k) {
        std::string candidate = base + "_" + std::to_string(k);
        if (!used.count(candidate)) return candidate;
    }
}

namespace {

struct Substituter {
    std::string target;
    TermPtr replacement;
    bool symbol;
    VarSet repl_vars;
    std::set<std::string> repl_symbols;
    std::set<std::string> repl_var_names;

    Substituter(std::string t, TermPtr r, bool s) : target(std::move(t)), replacement(std::move(r)), symbol(s) {
        repl_vars = free_vars(replacement);
        repl_symbols = symbols_of(replacement);
        for (const auto& v : repl_vars) repl_var_names.insert(v.first);
    }

    bool occurs(const FormulaPtr& f) const {
        if (symbol) return symbols_of(f).count(target) > 0;
        for (const auto& v : free_vars(f))
            if (v.first == target) return true;
        return false;
    }

    bool occurs(const ProgramPtr& p) const {
        if (symbol) return symbols_of(p).count(target) > 0;
        for (const auto& v : free_vars(p))
            if (v.first == target) return true;
        return false;
    }

    bool occurs(const TermPtr& t) const {
        if (symbol) return symbols_of(t).count(target) > 0;
        for (const auto& v : free_vars(t))
            if (v.first == target) return true;
        return false;
    }

    TermPtr term(const TermPtr& t) const {
        if (!t) return t;
        switch (t->kind) {
            case TermKind::Var:
                if (!symbol && t->name == target) return replacement;
                return t;
            case TermKind::Lit: return t;
            case TermKind::App:
                if (symbol && t->name == target && t->args.empty()) return replacement;
                break;
            case TermKind::Prime:
                if (symbol && t->name == target)
                    throw SubstitutionError("substitution not admissible: differential symbol " + target + "'");
                break;
            case TermKind::Ite: {
                auto c = formula(t->cond);
                auto a = term(t->args[0]);
                auto b = term(t->args[1]);
                if (c == t->cond && a == t->args[0] && b == t->args[1]) return t;
                auto n = std::make_shared<Term>(*t);
                n->cond = c;
                n->args = {a, b};
                return n;
            }
            default: break;
        }
        bool changed = false;
        std::vector<TermPtr> args;
        args.reserve(t->args.size());
        for (const auto& a : t->args) {
            args.push_back(term(a));
            changed = changed || args.back() != a;
        }
        if (!changed) return t;
        auto n = std::make_shared<Term>(*t);
        n->args = std::move(args);
        return n;
    }

    std::string rename_binder(const std::string& var, const std::set<std::string>& used_extra) const {
        std::set<std::string> used = repl_var_names;
        used.insert(used_extra.begin(), used_extra.end());
        used.insert(target);
        return fresh_name(var, used);
    }

    FormulaPtr formula(const FormulaPtr& f) const {
        if (!f) return f;
        switch (f->kind) {
            case FormulaKind::True:
            case FormulaKind::False: return f;
            case FormulaKind::Eq:
            case FormulaKind::Geq: {
                auto a = term(f->lhs);
                auto b = term(f->rhs);
                if (a == f->lhs && b == f->rhs) return f;
                auto n = std::make_shared<Formula>(*f);
                n->lhs = a;
                n->rhs = b;
                return n;
            }
            case FormulaKind::Not:
            case FormulaKind::And: {
                auto a = formula(f->left);
                auto b = formula(f->right);
                if (a == f->left && b == f->right) return f;
                auto n = std::make_shared<Formula>(*f);
                n->left = a;
                n->right = b;
                return n;
            }
            case FormulaKind::Forall:
            case FormulaKind::Exists: {
                if (!symbol && f->var == target) return f;
                if (!occurs(f->left)) return f;
                FormulaPtr body = f->left;
                std::string var = f->var;
                if (repl_var_names.count(var)) {
                    var = rename_binder(var, names_in(body));
                    body = substitute(body, f->var, make_var(var, f->var_sort));
                }
                auto n = std::make_shared<Formula>(*f);
                n->var = var;
                n->left = formula(body);
                return n;
            }
            case FormulaKind::Box:
            case FormulaKind::Diamond: {
                const bool in_prog = occurs(f->program);
                const bool in_post = occurs(f->left);
                if (!in_prog && !in_post) return f;
                const auto w = written_symbols(f->program);
                std::string clash;
                if (symbol && w.count(target)) clash = target;
                for (const auto& s : repl_symbols)
                    if (w.count(s)) clash = s;
                if (!clash.empty())
                    throw SubstitutionError("substitution not admissible: '" + clash +
                                            "' is changed by a modality in whose scope '" + target + "' occurs");
                auto n = std::make_shared<Formula>(*f);
                n->program = program(f->program);
                n->left = formula(f->left);
                return n;
            }
        }
        return f;
    }

    ProgramPtr program(const ProgramPtr& p) const {
        if (!p || !occurs(p)) return p;
        auto n = std::make_shared<Program>(*p);
        switch (p->kind) {
            case ProgramKind::Assign:
            case ProgramKind::Ode: {
                if (!symbol && p->var == target) return p;
                std::string var = p->var;
                std::vector<Clause> clauses = p->clauses;
                FormulaPtr cond = p->cond;
                if (!var.empty() && repl_var_names.count(var)) {
                    var = rename_binder(var, names_in(p));
                    const auto bv = make_var(var, p->var_sort);
                    for (auto& c : clauses) {
                        for (auto& a : c.args) a = substitute(a, p->var, bv);
                        c.rhs = substitute(c.rhs, p->var, bv);
                    }
                    if (cond) cond = substitute(cond, p->var, bv);
                }
                for (auto& c : clauses) {
                    if (symbol && c.fn == target)
                        throw SubstitutionError("substitution not admissible: program assigns '" + target + "'");
                    for (auto& a : c.args) a = term(a);
                    c.rhs = term(c.rhs);
                }
                n->var = var;
                n->clauses = std::move(clauses);
                n->cond = formula(cond);
                return n;
            }
            case ProgramKind::Test: n->cond = formula(p->cond); return n;
            case ProgramKind::New:
                if (symbol && p->var == target)
                    throw SubstitutionError("substitution not admissible: program assigns '" + target + "'");
                return p;
            default:
                n->left = program(p->left);
                n->right = program(p->right);
                return n;
        }
    }
};

}  // namespace

TermPtr substitute(const TermPtr& t, const std::string& var, const TermPtr& replacement, bool symbol) {
    return Substituter(var, replacement, symbol).term(t);
}

FormulaPtr substitute(const FormulaPtr& f, const std::string& var, const TermPtr& replacement, bool symbol) {
    return Substituter(var, replacement, symbol).formula(f);
}

ProgramPtr substitute(const ProgramPtr& p, const std::string& var, const TermPtr& replacement, bool symbol) {
    return Substituter(var, replacement, symbol).program(p);
}

// ---------------------------------------------------------------- desugaring

namespace {

const Term* first_ite(const TermPtr& t) {
    if (!t) return nullptr;
    // Outermost first; conditionals in its branches are expanded afterwards.
    if (t->kind == TermKind::Ite) return t.get();
    for (const auto& a : t->args)
        if (auto r = first_ite(a)) return r;
    return nullptr;
}

TermPtr replace_node(const TermPtr& t, const Term* target, const TermPtr& with) {
    if (t.get() == target) return with;
    if (t->kind == TermKind::Ite || t->args.empty()) return t;
    bool changed = false;
    std::vector<TermPtr> args;
    for (const auto& a : t->args) {
        args.push_back(replace_node(a, target, with));
        changed = changed || args.back() != a;
    }
    if (!changed) return t;
    auto n = std::make_shared<Term>(*t);
    n->args = std::move(args);
    return n;
}

FormulaPtr expand_atom(const FormulaPtr& atom) {
    const Term* ite = first_ite(atom->lhs);
    if (!ite) ite = first_ite(atom->rhs);
    if (!ite) return atom;
    auto branch = [&](const TermPtr& with) {
        auto n = std::make_shared<Formula>(*atom);
        n->lhs = replace_node(atom->lhs, ite, with);
        n->rhs = replace_node(atom->rhs, ite, with);
        return expand_atom(n);
    };
    FormulaPtr c = desugar_conditional(ite->cond);
    return make_and(make_implies(c, branch(ite->args[0])), make_implies(make_not(c), branch(ite->args[1])));
}

ProgramPtr desugar_program(const ProgramPtr& p);

bool program_terms_have_ite(const ProgramPtr& p) {
    if (!p) return false;
    for (const auto& c : p->clauses) {
        if (contains_ite(c.rhs)) return true;
        for (const auto& a : c.args)
            if (contains_ite(a)) return true;
    }
    return program_terms_have_ite(p->left) || program_terms_have_ite(p->right);
}

ProgramPtr desugar_program(const ProgramPtr& p) {
    if (!p) return p;
    auto n = std::make_shared<Program>(*p);
    if (p->cond) n->cond = desugar_conditional(p->cond);
    n->left = desugar_program(p->left);
    n->right = desugar_program(p->right);
    return n;
}

}  // namespace

FormulaPtr desugar_conditional(const FormulaPtr& f) {
    if (!f || !contains_ite(f)) return f;
    switch (f->kind) {
        case FormulaKind::Eq:
        case FormulaKind::Geq: return expand_atom(f);
        case FormulaKind::Not: return make_not(desugar_conditional(f->left));
        case FormulaKind::And: return make_and(desugar_conditional(f->left), desugar_conditional(f->right));
        case FormulaKind::Forall:
        case FormulaKind::Exists: return with_body(f, desugar_conditional(f->left));
        case FormulaKind::Box:
        case FormulaKind::Diamond: {
            const auto& p = f->program;
            if (program_terms_have_ite(p)) {
                // A conditional in an assignment is lifted in front of the modality
                // when its condition is evaluated before anything changes.
                if (p->kind != ProgramKind::Assign)
                    throw DesugarError("conditional term inside a non-assignment program");
                const auto w = written_symbols(p);
                for (std::size_t k = 0; k < p->clauses.size(); ++k) {
                    const Term* ite = first_ite(p->clauses[k].rhs);
                    if (!ite) continue;
                    for (const auto& s : symbols_of(ite->cond))
                        if (w.count(s))
                            throw DesugarError("conditional condition mentions '" + s + "' changed by the modality");
                    for (const auto& v : free_vars(ite->cond))
                        if (v.first == p->var)
                            throw DesugarError("conditional condition depends on the quantified variable " + p->var);
                    auto branch = [&](const TermPtr& with) {
                        auto q = std::make_shared<Program>(*p);
                        q->clauses[k].rhs = replace_node(p->clauses[k].rhs, ite, with);
                        auto g = std::make_shared<Formula>(*f);
                        g->program = q;
                        return desugar_conditional(g);
                    };
                    FormulaPtr c = desugar_conditional(ite->cond);
                    return make_and(make_implies(c, branch(ite->args[0])),
                                    make_implies(make_not(c), branch(ite->args[1])));
                }
                throw DesugarError("conditional term inside assignment arguments");
            }
            auto g = std::make_shared<Formula>(*f);
            g->program = desugar_program(p);
            g->left = desugar_conditional(f->left);
            return g;
        }
        default: return f;
    }
}

ProgramPtr desugar_new(const ProgramPtr& p, const Signature& sig) {
    if (!p) return p;
    switch (p->kind) {
        case ProgramKind::New: {
            if (p->var_sort == kReal || !sig.is_object_sort(p->var_sort))
                throw DesugarError("new requires an object sort, got '" + p->var_sort + "'");
            auto f = sig.find(p->var);
            if (!f || !f->arg_sorts.empty() || f->result_sort != p->var_sort)
                throw DesugarError("new target '" + p->var + "' must be a nullary symbol of sort " + p->var_sort);
            const auto target = make_app(p->var, {}, p->var_sort);
            auto pick = make_assign("j", p->var_sort, {Clause{p->var, {}, make_var("j", p->var_sort), false}});
            auto fresh = make_test(make_eq(make_app(kExistence, {target}, kReal), make_lit(0)));
            auto mark = make_assign("", "", {Clause{kExistence, {target}, make_lit(1), false}});
            return make_seq(pick, make_seq(fresh, mark));
        }
        case ProgramKind::Choice: return make_choice(desugar_new(p->left, sig), desugar_new(p->right, sig));
        case ProgramKind::Seq: return make_seq(desugar_new(p->left, sig), desugar_new(p->right, sig));
        case ProgramKind::Loop: return make_loop(desugar_new(p->left, sig));
        default: return p;
    }
}

std::string injectivity_diagnostic(const Program& p) {
    if (p.kind != ProgramKind::Assign && p.kind != ProgramKind::Ode) return "";
    if (p.var.empty()) return "";
    for (const auto& c : p.clauses) {
        if (c.args.size() == 1 && c.args[0]->kind == TermKind::Var && c.args[0]->name == p.var) continue;
        if (c.args.empty()) {
            bool mentions = false;
            for (const auto& v : free_vars(c.rhs))
                if (v.first == p.var) mentions = true;
            if (!mentions) continue;
            return "clause for '" + c.fn + "' assigns one position with values depending on " + p.var;
        }
        return "clause for '" + c.fn + "' has an argument vector other than the bound variable " + p.var;
    }
    return "";
}

bool is_injective(const Program& p) { return injectivity_diagnostic(p).empty(); }

bool always_enabled(const ProgramPtr& p) {
    if (!p) return true;
    switch (p->kind) {
        case ProgramKind::Assign:
        case ProgramKind::Test:
        case ProgramKind::Loop:
        case ProgramKind::New: return true;
        case ProgramKind::Ode: return !p->cond || p->cond->kind == FormulaKind::True;
        case ProgramKind::Choice: return always_enabled(p->left) || always_enabled(p->right);
        case ProgramKind::Seq: return always_enabled(p->left) && always_enabled(p->right);
    }
    return true;
}

}  // namespace qdtl
