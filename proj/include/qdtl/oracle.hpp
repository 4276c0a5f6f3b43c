#pragma once

// Three-valued validity oracle for first-order real arithmetic with object
// sorts, plus the SMT-LIB2 escape hatch to an external solver.

#include "qdtl/poly.hpp"
#include "qdtl/syntax.hpp"

#include <map>
#include <string>

namespace qdtl {

enum class Verdict { Valid, Invalid, Unknown };

/// Ordered by strength; a verdict reports the strongest method any branch needed.
enum class OracleMethod { None, Propositional, Identity, Substitution, Sign, FourierMotzkin, External };

std::string verdict_name(Verdict v);
std::string method_name(OracleMethod m);

struct SolverConfig {
    std::string path;          // empty: no external solver
    int timeout_ms = 10000;
    std::string cache_dir;     // empty: no on-disk cache
};

/// Solver path from QDTL_SOLVER, cache directory from QDTL_CACHE.
SolverConfig solver_from_environment();

struct OracleOptions {
    SolverConfig solver;
    std::size_t fm_limit = 5000;
    std::size_t branch_limit = 4096;
};

struct OracleResult {
    Verdict verdict = Verdict::Unknown;
    OracleMethod method = OracleMethod::None;
    /// Counterexample over the real atoms, set only for Invalid.
    std::map<std::string, Rational> witness;
    std::string diagnostic;
    /// Instantiation, opaque modal atoms or weakening was involved.
    bool approximate = false;
};

/// Decides validity of f, reading free variables and flexible symbols
/// universally. Modal subformulas are opaque propositions. Invalid is only
/// reported with a witness that was checked by evaluation and when no
/// approximation was made.
OracleResult decide_universal(const FormulaPtr& f, const OracleOptions& opt = {});

/// Quantifier-free equivalent of  exists var:R body  for a quantifier-free body
/// linear in var. Throws UnsupportedTerm otherwise.
FormulaPtr eliminate_exists(const std::string& var, const FormulaPtr& body);

/// SMT-LIB2 script asserting the negation of f.
std::string export_solver_query(const FormulaPtr& f);

struct SolverVerdict {
    Verdict verdict = Verdict::Unknown;
    std::string diagnostic;
    bool cached = false;
};

/// unsat of the negation maps to Valid, sat to Invalid.
SolverVerdict import_solver_verdict(const std::string& output);

/// Runs the configured solver on a query under a timeout, consulting the cache.
SolverVerdict run_solver(const std::string& query, const SolverConfig& cfg);

}  // namespace qdtl
