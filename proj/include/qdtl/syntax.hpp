#pragma once

#include "qdtl/rational.hpp"

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qdtl {

/// The distinguished sort of real numbers.
inline const std::string kReal = "R";
/// The existence function symbol, unary over every object sort.
inline const std::string kExistence = "E";

struct SourceSpan {
    std::string file;
    std::size_t begin = 0;
    std::size_t end = 0;
    int line = 0;
    int column = 0;
    int end_line = 0;
    int end_column = 0;

    bool valid() const { return line > 0; }
};

struct Term;
struct Formula;
struct Program;
using TermPtr = std::shared_ptr<const Term>;
using FormulaPtr = std::shared_ptr<const Formula>;
using ProgramPtr = std::shared_ptr<const Program>;

// ---------------------------------------------------------------- terms

enum class TermKind { Var, App, Prime, Lit, Ite, Neg, Add, Sub, Mul, Pow };

struct Term {
    TermKind kind = TermKind::Lit;
    std::string name;           // Var, App, Prime
    std::string sort;           // result sort, empty while unresolved
    std::vector<TermPtr> args;  // application arguments or arithmetic operands
    Rational value;             // Lit, never negative
    FormulaPtr cond;            // Ite condition; args holds the two branches
    unsigned exponent = 0;      // Pow
    SourceSpan span;
};

TermPtr make_var(std::string name, std::string sort);
TermPtr make_app(std::string name, std::vector<TermPtr> args, std::string sort);
TermPtr make_prime(std::string name, std::vector<TermPtr> args);
/// Negative values come back as a negation of a literal.
TermPtr make_lit(const Rational& value);
TermPtr make_ite(FormulaPtr cond, TermPtr then_term, TermPtr else_term);
TermPtr make_neg(TermPtr a);
TermPtr make_add(TermPtr a, TermPtr b);
TermPtr make_sub(TermPtr a, TermPtr b);
TermPtr make_mul(TermPtr a, TermPtr b);
TermPtr make_pow(TermPtr base, unsigned exponent);

bool is_arith(TermKind k);

// ---------------------------------------------------------------- formulas

enum class FormulaKind { True, False, Eq, Geq, Not, And, Forall, Exists, Box, Diamond };

/// Leading temporal operator of the trace formula under a modality.
enum class Temporal { None, Always, Eventually };

struct Formula {
    FormulaKind kind = FormulaKind::True;
    TermPtr lhs, rhs;              // Eq, Geq
    FormulaPtr left, right;        // Not and modalities use left
    std::string var, var_sort;     // quantifiers
    ProgramPtr program;            // modalities
    Temporal temporal = Temporal::None;
    SourceSpan span;
};

FormulaPtr make_true();
FormulaPtr make_false();
FormulaPtr make_eq(TermPtr a, TermPtr b);
FormulaPtr make_geq(TermPtr a, TermPtr b);
FormulaPtr make_not(FormulaPtr a);
FormulaPtr make_and(FormulaPtr a, FormulaPtr b);
FormulaPtr make_forall(std::string var, std::string sort, FormulaPtr body);
FormulaPtr make_exists(std::string var, std::string sort, FormulaPtr body);
FormulaPtr make_box(ProgramPtr p, FormulaPtr body, Temporal t = Temporal::None);
FormulaPtr make_diamond(ProgramPtr p, FormulaPtr body, Temporal t = Temporal::None);

// Derived connectives, eliminated on construction.
FormulaPtr make_or(FormulaPtr a, FormulaPtr b);
FormulaPtr make_implies(FormulaPtr a, FormulaPtr b);
FormulaPtr make_iff(FormulaPtr a, FormulaPtr b);
FormulaPtr make_leq(TermPtr a, TermPtr b);
FormulaPtr make_lt(TermPtr a, TermPtr b);
FormulaPtr make_gt(TermPtr a, TermPtr b);
FormulaPtr make_neq(TermPtr a, TermPtr b);
FormulaPtr make_conj(const std::vector<FormulaPtr>& parts);
FormulaPtr make_disj(const std::vector<FormulaPtr>& parts);

/// Recognizers for the derived shapes; they return the two operands.
std::optional<std::pair<FormulaPtr, FormulaPtr>> as_or(const FormulaPtr& f);
std::optional<std::pair<FormulaPtr, FormulaPtr>> as_implies(const FormulaPtr& f);

FormulaPtr with_body(const FormulaPtr& modal_or_quant, FormulaPtr body);

// ---------------------------------------------------------------- programs

enum class ProgramKind { Assign, Ode, Test, Choice, Seq, Loop, New };

/// One component f(s) := θ, f(s)' := θ or f(s)' = θ.
struct Clause {
    std::string fn;
    std::vector<TermPtr> args;
    TermPtr rhs;
    bool primed = false;  // assignment to the differential symbol f'
};

struct Program {
    ProgramKind kind = ProgramKind::Test;
    std::string var, var_sort;     // binder of Assign/Ode, empty when unquantified; New: target and sort
    std::vector<Clause> clauses;
    FormulaPtr cond;               // Test condition, Ode domain (null when absent)
    ProgramPtr left, right;        // Choice, Seq; Loop body in left
    SourceSpan span;
};

ProgramPtr make_assign(std::string var, std::string sort, std::vector<Clause> clauses);
ProgramPtr make_ode(std::string var, std::string sort, std::vector<Clause> clauses, FormulaPtr domain);
ProgramPtr make_test(FormulaPtr cond);
ProgramPtr make_choice(ProgramPtr a, ProgramPtr b);
ProgramPtr make_seq(ProgramPtr a, ProgramPtr b);
ProgramPtr make_loop(ProgramPtr body);
ProgramPtr make_new(std::string target, std::string sort);

// ---------------------------------------------------------------- equality

bool equal(const TermPtr& a, const TermPtr& b);
bool equal(const FormulaPtr& a, const FormulaPtr& b);
bool equal(const ProgramPtr& a, const ProgramPtr& b);

// ---------------------------------------------------------------- signature

struct FunctionSymbol {
    std::string name;
    std::vector<std::string> arg_sorts;
    std::string result_sort;
    bool rigid = false;
};

class Signature {
public:
    void add_sort(const std::string& name);
    bool has_sort(const std::string& name) const;
    bool is_object_sort(const std::string& name) const;
    const std::vector<std::string>& object_sorts() const { return sorts_; }

    void add_function(FunctionSymbol f);
    /// Looks up a declared symbol; E is synthesized for the argument sort given.
    std::optional<FunctionSymbol> find(const std::string& name, const std::string& arg_sort = "") const;
    bool has_function(const std::string& name) const;
    const std::map<std::string, FunctionSymbol>& functions() const { return functions_; }

private:
    std::vector<std::string> sorts_;
    std::map<std::string, FunctionSymbol> functions_;
};

// ---------------------------------------------------------------- typing

enum class TypeErrorKind { None, UnknownSymbol, SortMismatch, Malformed };

struct TypeCheck {
    TypeErrorKind kind = TypeErrorKind::None;
    std::string message;
    std::string path;  // AST path of the offending node, e.g. "left.rhs.args[0]"
    bool ok() const { return kind == TypeErrorKind::None; }
};

/// Variable sorts are read from the nodes.
TypeCheck check_types(const TermPtr& t, const Signature& sig);
TypeCheck check_types(const FormulaPtr& f, const Signature& sig);
TypeCheck check_types(const ProgramPtr& p, const Signature& sig);

template <typename Node>
bool well_typed(const Node& n, const Signature& sig) {
    return check_types(n, sig).ok();
}

// ---------------------------------------------------------------- symbols

using VarSet = std::set<std::pair<std::string, std::string>>;  // (name, sort)

VarSet free_vars(const TermPtr& t);
VarSet free_vars(const FormulaPtr& f);
VarSet free_vars(const ProgramPtr& p);

/// Function symbols read anywhere, including inside programs. Primed symbols carry a trailing '.
std::set<std::string> symbols_of(const TermPtr& t);
std::set<std::string> symbols_of(const FormulaPtr& f);
std::set<std::string> symbols_of(const ProgramPtr& p);

/// Symbols a program may change: assignment and ODE targets; primed targets carry a trailing '.
std::set<std::string> written_symbols(const ProgramPtr& p);

/// Every name in use as a variable, binder or function symbol.
std::set<std::string> names_in(const FormulaPtr& f);
std::set<std::string> names_in(const ProgramPtr& p);

bool contains_modality(const FormulaPtr& f);
bool contains_temporal(const FormulaPtr& f);
bool contains_ite(const TermPtr& t);
bool contains_ite(const FormulaPtr& f);

// ---------------------------------------------------------------- substitution

class SubstitutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Replaces the free variable `var` (or the nullary function symbol `var` when
/// `symbol` is set) by `replacement`. Bound variables are renamed to avoid capture;
/// occurrences inside a modality that writes the target or a symbol of the
/// replacement raise SubstitutionError.
TermPtr substitute(const TermPtr& t, const std::string& var, const TermPtr& replacement, bool symbol = false);
FormulaPtr substitute(const FormulaPtr& f, const std::string& var, const TermPtr& replacement, bool symbol = false);
ProgramPtr substitute(const ProgramPtr& p, const std::string& var, const TermPtr& replacement, bool symbol = false);

/// A name built from `base` that is not in `used`.
std::string fresh_name(const std::string& base, const std::set<std::string>& used);

// ---------------------------------------------------------------- desugaring

class DesugarError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Expands conditional terms at the atom that contains them.
FormulaPtr desugar_conditional(const FormulaPtr& f);

/// Rewrites every `n := new A` into (forall j:A n := j); ?(E(n) = 0); E(n) := 1.
ProgramPtr desugar_new(const ProgramPtr& p, const Signature& sig);

/// Injectivity of a quantified assignment or ODE: every clause argument vector
/// is exactly the bound variable, or the clause has a single position because
/// it is unquantified or nullary with a binder-free right-hand side.
bool is_injective(const Program& p);
/// Empty when injective; otherwise the reason.
std::string injectivity_diagnostic(const Program& p);

/// True when the program has at least one trace from every state.
bool always_enabled(const ProgramPtr& p);

}  // namespace qdtl
