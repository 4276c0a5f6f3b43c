#include "qdtl/poly.hpp"

#include "qdtl/printer.hpp"

#include <algorithm>

namespace qdtl {

namespace {

Monomial multiply(const Monomial& a, const Monomial& b) {
    Monomial out;
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
            out.push_back(a[i++]);
        } else if (i == a.size() || b[j].first < a[i].first) {
            out.push_back(b[j++]);
        } else {
            out.emplace_back(a[i].first, a[i].second + b[j].second);
            ++i;
            ++j;
        }
    }
    return out;
}

unsigned total_degree(const Monomial& m) {
    unsigned d = 0;
    for (const auto& [v, e] : m) d += e;
    return d;
}

}  // namespace

std::string monomial_text(const Monomial& m) {
    if (m.empty()) return "1";
    std::string out;
    for (const auto& [v, e] : m) {
        if (!out.empty()) out += "*";
        out += v;
        if (e > 1) out += "^" + std::to_string(e);
    }
    return out;
}

Polynomial Polynomial::constant(const Rational& c) {
    Polynomial p;
    p.add_term({}, c);
    return p;
}

Polynomial Polynomial::indeterminate(const std::string& name) {
    Polynomial p;
    p.add_term({{name, 1}}, 1);
    return p;
}

void Polynomial::add_term(const Monomial& m, const Rational& c) {
    if (c == 0) return;
    auto it = terms_.find(m);
    if (it == terms_.end()) {
        terms_.emplace(m, c);
        return;
    }
    it->second += c;
    if (it->second == 0) terms_.erase(it);
}

bool Polynomial::is_constant() const { return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty()); }

Rational Polynomial::constant_term() const {
    auto it = terms_.find(Monomial{});
    return it == terms_.end() ? Rational(0) : it->second;
}

unsigned Polynomial::degree() const {
    unsigned d = 0;
    for (const auto& [m, c] : terms_) d = std::max(d, total_degree(m));
    return d;
}

unsigned Polynomial::degree_in(const std::string& v) const {
    unsigned d = 0;
    for (const auto& [m, c] : terms_)
        for (const auto& [x, e] : m)
            if (x == v) d = std::max(d, e);
    return d;
}

std::set<std::string> Polynomial::indeterminates() const {
    std::set<std::string> out;
    for (const auto& [m, c] : terms_)
        for (const auto& [x, e] : m) out.insert(x);
    return out;
}

Polynomial Polynomial::coefficient(const std::string& v, unsigned k) const {
    Polynomial out;
    for (const auto& [m, c] : terms_) {
        unsigned e = 0;
        Monomial rest;
        for (const auto& f : m) {
            if (f.first == v) e = f.second;
            else rest.push_back(f);
        }
        if (e == k) out.add_term(rest, c);
    }
    return out;
}

Polynomial Polynomial::substitute(const std::string& v, const Polynomial& q) const {
    Polynomial out;
    std::vector<Polynomial> powers = {constant(1)};
    for (const auto& [m, c] : terms_) {
        unsigned e = 0;
        Monomial rest;
        for (const auto& f : m) {
            if (f.first == v) e = f.second;
            else rest.push_back(f);
        }
        while (powers.size() <= e) powers.push_back(powers.back() * q);
        Polynomial term;
        term.add_term(rest, c);
        out = out + term * powers[e];
    }
    return out;
}

Rational Polynomial::evaluate(const std::map<std::string, Rational>& at) const {
    Rational sum = 0;
    for (const auto& [m, c] : terms_) {
        Rational prod = c;
        for (const auto& [x, e] : m) {
            const Rational& val = at.at(x);
            for (unsigned k = 0; k < e; ++k) prod *= val;
        }
        sum += prod;
    }
    return sum;
}

double Polynomial::evaluate(const std::map<std::string, double>& at) const {
    double sum = 0;
    for (const auto& [m, c] : terms_) {
        double prod = to_double(c);
        for (const auto& [x, e] : m) {
            const double val = at.at(x);
            for (unsigned k = 0; k < e; ++k) prod *= val;
        }
        sum += prod;
    }
    return sum;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
    Polynomial out = *this;
    for (const auto& [m, c] : o.terms_) out.add_term(m, c);
    return out;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
    Polynomial out = *this;
    for (const auto& [m, c] : o.terms_) out.add_term(m, -c);
    return out;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
    Polynomial out;
    for (const auto& [m1, c1] : terms_)
        for (const auto& [m2, c2] : o.terms_) out.add_term(multiply(m1, m2), c1 * c2);
    return out;
}

Polynomial Polynomial::operator-() const { return scaled(-1); }

Polynomial Polynomial::scaled(const Rational& c) const {
    Polynomial out;
    if (c == 0) return out;
    for (const auto& [m, k] : terms_) out.terms_.emplace(m, k * c);
    return out;
}

Polynomial Polynomial::pow(unsigned n) const {
    Polynomial out = constant(1), base = *this;
    while (n) {
        if (n & 1u) out = out * base;
        n >>= 1u;
        if (n) base = base * base;
    }
    return out;
}

std::string Polynomial::to_string() const {
    if (terms_.empty()) return "0";
    std::string out;
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
        const auto& [m, c] = *it;
        const bool neg = c < 0;
        const Rational mag = neg ? Rational(-c) : c;
        if (out.empty()) out += neg ? "-" : "";
        else out += neg ? " - " : " + ";
        if (m.empty()) {
            out += rational_to_string(mag);
        } else {
            if (mag != 1) out += rational_to_string(mag) + "*";
            out += monomial_text(m);
        }
    }
    return out;
}

Polynomial normalize(const TermPtr& t, AtomTable* atoms) {
    auto atom = [&](const TermPtr& a) {
        const std::string name = to_string(a);
        if (atoms) atoms->emplace(name, a);
        return Polynomial::indeterminate(name);
    };
    switch (t->kind) {
        case TermKind::Lit: return Polynomial::constant(t->value);
        case TermKind::Var:
        case TermKind::App:
            if (!t->sort.empty() && t->sort != kReal)
                throw UnsupportedTerm("object-valued term " + to_string(t) + " in arithmetic");
            return atom(t);
        case TermKind::Prime: return atom(t);
        case TermKind::Neg: return -normalize(t->args[0], atoms);
        case TermKind::Add: return normalize(t->args[0], atoms) + normalize(t->args[1], atoms);
        case TermKind::Sub: return normalize(t->args[0], atoms) - normalize(t->args[1], atoms);
        case TermKind::Mul: return normalize(t->args[0], atoms) * normalize(t->args[1], atoms);
        case TermKind::Pow: return normalize(t->args[0], atoms).pow(t->exponent);
        case TermKind::Ite: throw UnsupportedTerm("conditional term " + to_string(t) + " must be expanded first");
    }
    throw UnsupportedTerm("unsupported term");
}

TermPtr to_term(const Polynomial& p, const AtomTable& atoms) {
    if (p.is_zero()) return make_lit(0);
    TermPtr out;
    for (auto it = p.terms().rbegin(); it != p.terms().rend(); ++it) {
        const auto& [m, c] = *it;
        const bool neg = c < 0;
        const Rational mag = neg ? Rational(-c) : c;
        TermPtr factor;
        for (const auto& [x, e] : m) {
            auto found = atoms.find(x);
            TermPtr base = found != atoms.end() ? found->second : make_var(x, kReal);
            TermPtr power = e > 1 ? make_pow(base, e) : base;
            factor = factor ? make_mul(factor, power) : power;
        }
        TermPtr term;
        if (!factor) term = make_lit(mag);
        else if (mag == 1) term = factor;
        else term = make_mul(make_lit(mag), factor);
        if (!out) out = neg ? make_neg(term) : term;
        else out = neg ? make_sub(out, term) : make_add(out, term);
    }
    return out;
}

std::string to_string(const LinearConstraint& c) {
    const char* rel = c.rel == Relation::Eq ? " = 0" : c.rel == Relation::Geq ? " >= 0" : " > 0";
    return c.poly.to_string() + rel;
}

bool holds(const LinearConstraint& c) {
    const Rational v = c.poly.constant_term();
    switch (c.rel) {
        case Relation::Eq: return v == 0;
        case Relation::Geq: return v >= 0;
        case Relation::Gt: return v > 0;
    }
    return false;
}

bool holds(const LinearConstraint& c, const std::map<std::string, Rational>& at) {
    const Rational v = c.poly.evaluate(at);
    switch (c.rel) {
        case Relation::Eq: return v == 0;
        case Relation::Geq: return v >= 0;
        case Relation::Gt: return v > 0;
    }
    return false;
}

namespace {

Rational linear_coefficient(const LinearConstraint& c, const std::string& x) {
    const unsigned d = c.poly.degree_in(x);
    if (d == 0) return 0;
    Polynomial a = c.poly.coefficient(x, 1);
    if (d > 1 || !a.is_constant())
        throw UnsupportedTerm("nonlinear occurrence of " + x + " in " + to_string(c));
    return a.constant_term();
}

void push_unique(std::vector<LinearConstraint>& out, std::set<LinearConstraint>& seen, LinearConstraint c) {
    if (c.poly.is_constant() && holds(c)) return;
    // scale so the leading coefficient has magnitude one
    if (!c.poly.is_zero()) {
        Rational lead = c.poly.terms().rbegin()->second;
        if (lead < 0) lead = -lead;
        if (c.rel == Relation::Eq && c.poly.terms().rbegin()->second < 0) lead = -lead;
        c.poly = c.poly.scaled(Rational(1) / lead);
    }
    if (seen.insert(c).second) out.push_back(std::move(c));
}

}  // namespace

std::vector<LinearConstraint> fourier_motzkin(const std::vector<LinearConstraint>& cs, const std::string& x) {
    std::vector<LinearConstraint> out;
    std::set<LinearConstraint> seen;
    std::vector<Rational> coeff;
    coeff.reserve(cs.size());
    for (const auto& c : cs) coeff.push_back(linear_coefficient(c, x));

    for (std::size_t k = 0; k < cs.size(); ++k) {
        if (cs[k].rel != Relation::Eq || coeff[k] == 0) continue;
        // x = -(rest)/a
        const Polynomial rest = cs[k].poly - Polynomial::indeterminate(x).scaled(coeff[k]);
        const Polynomial solution = rest.scaled(Rational(-1) / coeff[k]);
        for (std::size_t j = 0; j < cs.size(); ++j) {
            if (j == k) continue;
            push_unique(out, seen, {cs[j].poly.substitute(x, solution), cs[j].rel});
        }
        return out;
    }

    std::vector<std::size_t> lower, upper;
    for (std::size_t k = 0; k < cs.size(); ++k) {
        if (coeff[k] > 0) lower.push_back(k);
        else if (coeff[k] < 0) upper.push_back(k);
        else push_unique(out, seen, cs[k]);
    }
    for (std::size_t l : lower) {
        for (std::size_t u : upper) {
            // (-a_u)(a_l x + r_l) + a_l (a_u x + r_u) has no x
            Polynomial p = cs[l].poly.scaled(-coeff[u]) + cs[u].poly.scaled(coeff[l]);
            const bool strict = cs[l].rel == Relation::Gt || cs[u].rel == Relation::Gt;
            push_unique(out, seen, {p, strict ? Relation::Gt : Relation::Geq});
        }
    }
    return out;
}

std::optional<std::map<std::string, Rational>> fm_solve(const std::vector<LinearConstraint>& cs, std::size_t limit) {
    std::set<std::string> vars;
    for (const auto& c : cs)
        for (const auto& v : c.poly.indeterminates()) vars.insert(v);

    struct Stage {
        std::string var;
        std::vector<LinearConstraint> system;
    };
    std::vector<Stage> stages;
    std::vector<LinearConstraint> current;
    {
        std::set<LinearConstraint> seen;
        for (const auto& c : cs) push_unique(current, seen, c);
    }
    while (true) {
        for (const auto& c : current)
            if (c.poly.is_constant() && !holds(c)) return std::nullopt;
        std::set<std::string> present;
        for (const auto& c : current)
            for (const auto& v : c.poly.indeterminates()) present.insert(v);
        if (present.empty()) break;
        // an equality first, otherwise the variable with the fewest new pairs
        std::string best;
        std::size_t best_cost = static_cast<std::size_t>(-1);
        for (const auto& v : present) {
            std::size_t lo = 0, hi = 0;
            bool eq = false;
            for (const auto& c : current) {
                const Rational a = linear_coefficient(c, v);
                if (a == 0) continue;
                if (c.rel == Relation::Eq) eq = true;
                else if (a > 0) ++lo;
                else ++hi;
            }
            const std::size_t cost = eq ? 0 : lo * hi;
            if (cost < best_cost) {
                best_cost = cost;
                best = v;
            }
        }
        stages.push_back({best, current});
        current = fourier_motzkin(current, best);
        if (current.size() > limit)
            throw EliminationLimit("Fourier-Motzkin system exceeded " + std::to_string(limit) + " constraints");
    }

    std::map<std::string, Rational> model;
    for (const auto& v : vars) model[v] = 0;
    for (auto it = stages.rbegin(); it != stages.rend(); ++it) {
        const std::string& x = it->var;
        std::optional<Rational> lo, hi, exact;
        bool lo_strict = false, hi_strict = false;
        for (const auto& c : it->system) {
            const Rational a = linear_coefficient(c, x);
            if (a == 0) continue;
            auto at = model;
            at[x] = 0;
            const Rational rest = c.poly.evaluate(at);
            const Rational bound = -rest / a;
            if (c.rel == Relation::Eq) {
                exact = bound;
                break;
            }
            const bool strict = c.rel == Relation::Gt;
            if (a > 0) {
                if (!lo || bound > *lo || (bound == *lo && strict)) {
                    lo = bound;
                    lo_strict = strict;
                }
            } else {
                if (!hi || bound < *hi || (bound == *hi && strict)) {
                    hi = bound;
                    hi_strict = strict;
                }
            }
        }
        Rational value = 0;
        if (exact) value = *exact;
        else if (lo && hi) value = (lo_strict || hi_strict) ? (*lo + *hi) / 2 : *lo;
        else if (lo) value = lo_strict ? *lo + 1 : *lo;
        else if (hi) value = hi_strict ? *hi - 1 : *hi;
        model[x] = value;
    }
    return model;
}

}  // namespace qdtl
