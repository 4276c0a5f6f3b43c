#include "qdtl/printer.hpp"

namespace qdtl {

namespace {

// Term levels: 1 sum, 2 product, 3 negation, 4 power, 5 atom.
int term_level(const TermPtr& t) {
    switch (t->kind) {
        case TermKind::Add:
        case TermKind::Sub: return 1;
        case TermKind::Mul: return 2;
        case TermKind::Neg: return 3;
        case TermKind::Pow: return 4;
        default: return 5;
    }
}

std::string term(const TermPtr& t, int need);
std::string formula(const FormulaPtr& f, int need);

std::string args(const std::vector<TermPtr>& as) {
    if (as.empty()) return "";
    std::string out = "(";
    for (std::size_t k = 0; k < as.size(); ++k) {
        if (k) out += ", ";
        out += term(as[k], 1);
    }
    return out + ")";
}

std::string term_raw(const TermPtr& t) {
    switch (t->kind) {
        case TermKind::Var: return t->name;
        case TermKind::App: return t->name + args(t->args);
        case TermKind::Prime: return t->name + args(t->args) + "'";
        case TermKind::Lit: return rational_to_string(t->value);
        case TermKind::Ite:
            return "if " + formula(t->cond, 1) + " then " + term(t->args[0], 1) + " else " + term(t->args[1], 1) + " fi";
        case TermKind::Neg: {
            // "--a" would not lex as two minus signs
            const auto& a = t->args[0];
            if (a->kind == TermKind::Neg) return "-(" + term(a, 1) + ")";
            return "-" + term(a, 3);
        }
        case TermKind::Add: return term(t->args[0], 1) + " + " + term(t->args[1], 2);
        case TermKind::Sub: return term(t->args[0], 1) + " - " + term(t->args[1], 2);
        case TermKind::Mul: return term(t->args[0], 2) + "*" + term(t->args[1], 3);
        case TermKind::Pow: return term(t->args[0], 5) + "^" + std::to_string(t->exponent);
    }
    return "?";
}

std::string term(const TermPtr& t, int need) {
    std::string s = term_raw(t);
    // a fraction literal is not atomic as a power base
    const bool frac_base = need == 5 && t->kind == TermKind::Lit && s.find('/') != std::string::npos;
    if (term_level(t) < need || frac_base) return "(" + s + ")";
    return s;
}

// Both readings of not(a & not b) reparse to the same tree. Prefer the
// disjunction unless the first disjunct is a plain comparison or itself a
// disjunction, where "a < 0 -> b" and "p | q -> r" read better.
bool prints_as_or(const FormulaPtr& f) {
    auto o = as_or(f);
    if (!o) return false;
    const auto& first = o->first;
    if (first->kind == FormulaKind::Geq) return false;
    if (as_or(f->left->left)) return false;
    return true;
}

// Formula levels: 1 implication, 2 disjunction, 3 conjunction, 4 unary, 5 atom.
int formula_level(const FormulaPtr& f) {
    if (prints_as_or(f)) return 2;
    if (as_implies(f)) return 1;
    switch (f->kind) {
        case FormulaKind::And: return 3;
        case FormulaKind::Not:
            if (f->left->kind == FormulaKind::Eq || f->left->kind == FormulaKind::Geq) return 5;
            return 4;
        case FormulaKind::Forall:
        case FormulaKind::Exists:
        case FormulaKind::Box:
        case FormulaKind::Diamond: return 4;
        default: return 5;
    }
}

std::string temporal_prefix(Temporal t) {
    switch (t) {
        case Temporal::Always: return "box ";
        case Temporal::Eventually: return "dia ";
        default: return "";
    }
}

std::string program(const ProgramPtr& p, int need);

std::string formula_raw(const FormulaPtr& f) {
    if (auto o = as_or(f); o && prints_as_or(f)) return formula(o->first, 2) + " | " + formula(o->second, 3);
    if (auto i = as_implies(f)) return formula(i->first, 2) + " -> " + formula(i->second, 1);
    switch (f->kind) {
        case FormulaKind::True: return "true";
        case FormulaKind::False: return "false";
        case FormulaKind::Eq: return term(f->lhs, 1) + " = " + term(f->rhs, 1);
        case FormulaKind::Geq: return term(f->lhs, 1) + " >= " + term(f->rhs, 1);
        case FormulaKind::Not: {
            const auto& a = f->left;
            if (a->kind == FormulaKind::Eq) return term(a->lhs, 1) + " != " + term(a->rhs, 1);
            if (a->kind == FormulaKind::Geq) return term(a->lhs, 1) + " < " + term(a->rhs, 1);
            return "!" + formula(a, 4);
        }
        case FormulaKind::And: return formula(f->left, 3) + " & " + formula(f->right, 4);
        case FormulaKind::Forall: return "forall " + f->var + ":" + f->var_sort + " " + formula(f->left, 4);
        case FormulaKind::Exists: return "exists " + f->var + ":" + f->var_sort + " " + formula(f->left, 4);
        case FormulaKind::Box:
            return "[" + program(f->program, 1) + "] " + temporal_prefix(f->temporal) + formula(f->left, 4);
        case FormulaKind::Diamond:
            return "<<" + program(f->program, 1) + ">> " + temporal_prefix(f->temporal) + formula(f->left, 4);
    }
    return "?";
}

std::string formula(const FormulaPtr& f, int need) {
    std::string s = formula_raw(f);
    if (formula_level(f) < need) return "(" + s + ")";
    return s;
}

std::string clause(const Clause& c, bool ode) {
    std::string lhs = c.fn + args(c.args);
    if (ode) return lhs + "' = " + term(c.rhs, 1);
    return lhs + (c.primed ? "'" : "") + " := " + term(c.rhs, 1);
}

// Program levels: 1 choice, 2 sequence, 3 atom.
int program_level(const ProgramPtr& p) {
    switch (p->kind) {
        case ProgramKind::Choice: return 1;
        case ProgramKind::Seq: return 2;
        default: return 3;
    }
}

std::string program_raw(const ProgramPtr& p) {
    switch (p->kind) {
        case ProgramKind::Assign:
        case ProgramKind::Ode: {
            const bool ode = p->kind == ProgramKind::Ode;
            std::string out;
            if (!p->var.empty()) out = "forall " + p->var + ":" + p->var_sort + " ";
            for (std::size_t k = 0; k < p->clauses.size(); ++k) {
                if (k) out += ", ";
                out += clause(p->clauses[k], ode);
            }
            if (ode && p->cond) out += " & " + formula(p->cond, 1);
            return out;
        }
        case ProgramKind::Test: return "?" + formula(p->cond, 5);
        case ProgramKind::Choice: return program(p->left, 2) + " ++ " + program(p->right, 1);
        case ProgramKind::Seq: return program(p->left, 3) + "; " + program(p->right, 2);
        case ProgramKind::Loop: return "(" + program(p->left, 1) + ")*";
        case ProgramKind::New: return p->var + " := new " + p->var_sort;
    }
    return "?";
}

std::string program(const ProgramPtr& p, int need) {
    std::string s = program_raw(p);
    if (program_level(p) < need) return "(" + s + ")";
    return s;
}

}  // namespace

std::string to_string(const TermPtr& t) { return t ? term(t, 1) : "<null>"; }
std::string to_string(const FormulaPtr& f) { return f ? formula(f, 1) : "<null>"; }
std::string to_string(const ProgramPtr& p) { return p ? program(p, 1) : "<null>"; }

}  // namespace qdtl
