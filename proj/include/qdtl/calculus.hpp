#pragma once

// Sequent calculus: rule application with side conditions, the symbolic
// operators used by the differential and liveness rules, proof replay and the
// fixed-priority automation.

#include "qdtl/oracle.hpp"
#include "qdtl/parser.hpp"
#include "qdtl/sequent.hpp"
#include "qdtl/syntax.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdtl {

class RuleError : public std::runtime_error {
public:
    enum class Kind { Mismatch, SideCondition, Unsupported, Argument };
    RuleError(Kind k, const std::string& message) : std::runtime_error(message), kind(k) {}
    Kind kind;
};

/// The oracle did not confirm an arithmetic step; the goal stays open.
class OracleFailure : public std::runtime_error {
public:
    OracleFailure(const std::string& message, OracleResult r) : std::runtime_error(message), result(std::move(r)) {}
    OracleResult result;
};

std::string rule_error_kind(RuleError::Kind k);

// ---------------------------------------------------------------- symbolic operators

/// Formal total derivative of a term; symbols outside `written` are constant.
/// Zero summands are dropped, so the result is the literal 0 when nothing varies.
TermPtr total_derivative(const TermPtr& t, const std::set<std::string>& written);
/// D(φ) on atoms, conjunction, disjunction and quantifiers. Throws RuleError otherwise.
FormulaPtr total_derivation(const FormulaPtr& f, const std::set<std::string>& written);
/// Written symbols of an ODE (unprimed names).
std::set<std::string> ode_targets(const Program& ode);

/// The quantified assignment S(t) solving an ODE, for constant right-hand
/// sides, clocks and nilpotent linear systems. Throws RuleError (Unsupported)
/// for anything else.
ProgramPtr symbolic_solution(const Program& ode, const TermPtr& duration);

/// Instruments a program to record, in the real variable `flag`, whether φ held
/// after every change. Throws RuleError when `flag` occurs in α or φ.
ProgramPtr transform_monitor(const ProgramPtr& alpha, const FormulaPtr& phi, const std::string& flag);

/// Applies a quantified assignment to a formula by substitution. Nothing when
/// the substitution is not admissible (an occurrence under a modality that
/// changes the assigned or read symbols).
std::optional<FormulaPtr> apply_assignment(const Program& assign, const FormulaPtr& post, bool diamond);

// ---------------------------------------------------------------- rule application

/// Extended signature, fresh-name counter and Skolem bookkeeping of one proof.
struct ProofContext {
    Signature sig;
    const Theory* theory = nullptr;
    std::size_t counter = 0;
    /// Skolem symbol -> the free logical variables it was applied to.
    std::map<std::string, std::vector<std::string>> skolem_args;
    OracleOptions oracle;

    /// A name not used by the signature, the goal or earlier fresh names.
    std::string fresh(const std::string& base, const std::set<std::string>& used);
};

struct RuleApplication {
    std::string rule;
    std::vector<Position> positions;
    /// Argument texts, parsed against the goal: formulas, terms or names.
    std::vector<std::string> args;
};

struct RuleResult {
    std::vector<Sequent> premises;
    /// Which oracle method closed or justified the step.
    OracleMethod method = OracleMethod::None;
    std::string note;
};

/// Backward application of one rule to one goal. Zero premises close the goal.
/// Throws RuleError on mismatches and side-condition violations and
/// OracleFailure when an arithmetic step is not confirmed.
RuleResult apply_rule(ProofContext& ctx, const Sequent& goal, const RuleApplication& app);

/// iexists over several goals: the premise replacing the first goal.
Sequent apply_iexists(ProofContext& ctx, const std::vector<Sequent>& goals, const std::string& var,
                      const std::vector<Sequent>& other_open);

/// Root goal of a conjecture: A -> B becomes A ==> B; `new` is desugared.
Sequent root_goal(const FormulaPtr& conjecture, const Signature& sig);

// ---------------------------------------------------------------- proof trees

struct ProofNode {
    Sequent sequent;
    GoalPath path;
    std::string provenance;  // rule that created this goal
    std::string rule;        // rule applied here; empty for a leaf
    std::vector<Position> positions;
    std::vector<std::string> args;
    std::vector<ProofNode> children;
    bool closed = false;     // leaf closed by a zero-premise rule or merged away
    bool stuck = false;      // a failed checkpoint or oracle step left it open
    OracleMethod method = OracleMethod::None;
    std::string note;
};

enum class ProofVerdict { Proved, Open, Error };
std::string verdict_text(ProofVerdict v);

struct OracleStats {
    std::size_t calls = 0, valid = 0, invalid = 0, unknown = 0;
    std::map<std::string, std::size_t> methods;
};

struct OpenGoal {
    GoalPath path;
    std::string sequent;
    std::string diagnostic;
    std::vector<std::string> suggestions;
};

struct ProofReport {
    std::string conjecture;
    ProofVerdict verdict = ProofVerdict::Error;
    ProofNode root;
    std::size_t rule_applications = 0;
    std::vector<OpenGoal> open_goals;
    OracleStats oracle;
    std::vector<std::string> rules_used;
    std::string error;       // set for Error
    GoalPath error_path;
};

struct CheckOptions {
    int jobs = 1;
    OracleOptions oracle;
};

/// Deterministic replay of a script against a conjecture of the theory.
ProofReport check_proof(const Theory& theory, const ProofScript& script, const CheckOptions& opt = {});

std::string render_text(const ProofReport& r);
nlohmann::json render_json(const ProofReport& r);

/// Rules of the fixed automation that apply to the goal's top-level formulas.
std::vector<std::string> applicable_rules(ProofContext& ctx, const Sequent& goal);

struct PlannedStep {
    GoalPath goal;  // relative to the goal given
    RuleApplication app;
};

/// Fixed-priority strategy: propositional, temporal decomposition, program
/// decomposition, assignments and solutions, then the oracle. Never cuts,
/// inducts, or applies differential rules. Empty when nothing applies.
std::vector<PlannedStep> auto_tactic(ProofContext& ctx, const Sequent& goal, std::size_t max_steps = 400);

}  // namespace qdtl
