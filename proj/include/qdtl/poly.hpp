#pragma once

// Exact multivariate polynomials over opaque real atoms, and Fourier-Motzkin
// elimination on linear constraint systems.

#include "qdtl/rational.hpp"
#include "qdtl/syntax.hpp"

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qdtl {

class UnsupportedTerm : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sorted by indeterminate name, exponents positive. The empty monomial is 1.
using Monomial = std::vector<std::pair<std::string, unsigned>>;

std::string monomial_text(const Monomial& m);

class Polynomial {
public:
    Polynomial() = default;
    static Polynomial constant(const Rational& c);
    static Polynomial indeterminate(const std::string& name);

    const std::map<Monomial, Rational>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    bool is_constant() const;
    Rational constant_term() const;
    unsigned degree() const;
    unsigned degree_in(const std::string& v) const;
    std::set<std::string> indeterminates() const;

    /// The coefficient of v^k, as a polynomial in the remaining indeterminates.
    Polynomial coefficient(const std::string& v, unsigned k) const;
    Polynomial substitute(const std::string& v, const Polynomial& q) const;
    /// Throws std::out_of_range when an indeterminate has no value.
    Rational evaluate(const std::map<std::string, Rational>& at) const;
    double evaluate(const std::map<std::string, double>& at) const;

    Polynomial operator+(const Polynomial& o) const;
    Polynomial operator-(const Polynomial& o) const;
    Polynomial operator*(const Polynomial& o) const;
    Polynomial operator-() const;
    Polynomial scaled(const Rational& c) const;
    Polynomial pow(unsigned n) const;

    bool operator==(const Polynomial& o) const { return terms_ == o.terms_; }
    bool operator!=(const Polynomial& o) const { return terms_ != o.terms_; }
    bool operator<(const Polynomial& o) const { return terms_ < o.terms_; }

    /// "2*a*b^2 - 3*c + 1/2"; "0" for the zero polynomial.
    std::string to_string() const;

private:
    void add_term(const Monomial& m, const Rational& c);
    std::map<Monomial, Rational> terms_;
};

/// Indeterminate name -> the term it stands for.
using AtomTable = std::map<std::string, TermPtr>;

/// Real-sorted variables, applications and differential symbols become
/// indeterminates named by their printed form. Throws UnsupportedTerm on
/// conditionals and non-real operands.
Polynomial normalize(const TermPtr& t, AtomTable* atoms = nullptr);

/// Rebuilds a term; indeterminates missing from the table become real variables.
TermPtr to_term(const Polynomial& p, const AtomTable& atoms);

enum class Relation { Eq, Geq, Gt };

/// poly rel 0
struct LinearConstraint {
    Polynomial poly;
    Relation rel = Relation::Geq;

    bool operator<(const LinearConstraint& o) const {
        if (rel != o.rel) return rel < o.rel;
        return poly < o.poly;
    }
    bool operator==(const LinearConstraint& o) const { return rel == o.rel && poly == o.poly; }
};

std::string to_string(const LinearConstraint& c);
/// Constant constraints only.
bool holds(const LinearConstraint& c);
bool holds(const LinearConstraint& c, const std::map<std::string, Rational>& at);

/// Thrown when an elimination exceeds its constraint budget.
class EliminationLimit : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Eliminates x. Every constraint must be linear in x with a rational
/// coefficient; other indeterminates may occur nonlinearly. Trivially true
/// constant constraints are dropped.
std::vector<LinearConstraint> fourier_motzkin(const std::vector<LinearConstraint>& cs, const std::string& x);

/// Decides a conjunction of constraints linear in all their indeterminates.
/// Returns a satisfying rational assignment, or nothing when unsatisfiable.
std::optional<std::map<std::string, Rational>> fm_solve(const std::vector<LinearConstraint>& cs,
                                                       std::size_t limit = 5000);

}  // namespace qdtl
