#pragma once

// Executable trace semantics: sampled hybrid traces of programs, state and
// trace valuation, the final-state reachability relation, and a falsifier.

#include "qdtl/syntax.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdtl::sim {

class SimError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a run would exceed the configured trace budget.
class BudgetExceeded : public SimError {
public:
    using SimError::SimError;
};

using Key = std::vector<double>;
using Env = std::map<std::string, double>;

/// An interpretation: finite object pools, function tables and free variables.
/// Objects are integral ids stored as doubles. Differential symbols live in
/// tables named "f'". The abort state carries no data.
struct State {
    bool abort = false;
    std::map<std::string, std::vector<double>> pools;
    std::map<std::string, std::map<Key, double>> tables;
    std::map<std::string, double> vars;

    static State lambda();
    bool operator==(const State& o) const = default;
    bool operator<(const State& o) const;
};

/// Canonical text form; equal states give equal strings.
std::string serialize(const State& s);
nlohmann::json to_json(const State& s);

/// One flow: states on a time grid starting at 0 and ending at `duration`.
struct Segment {
    double duration = 0;
    std::vector<double> times;
    std::vector<State> states;

    static Segment point(State s);
};

struct Trace {
    std::vector<Segment> segments;

    const State& first() const { return segments.front().states.front(); }
    const State& last() const { return segments.back().states.back(); }
    /// Finite by construction; terminates unless it ends in the abort state.
    bool terminates() const { return !last().abort; }
};

/// Composition of traces: concatenation when the first terminates where the
/// second starts, the first trace when it does not terminate, nothing otherwise.
std::optional<Trace> compose(const Trace& a, const Trace& b);

struct SimConfig {
    double step = 1e-3;
    int loop_bound = 3;
    /// Sampled evolution durations per flow start, the first one being 0.
    int durations = 3;
    double max_duration = 2.0;
    /// When nonempty, these durations replace the sampled ones.
    std::vector<double> fixed_durations;
    std::uint64_t seed = 0;
    std::size_t max_traces = 20000;
    std::size_t max_alternatives = 16;
    bool fresh_supply = true;
    /// Values a real quantifier ranges over.
    std::vector<double> real_candidates = {-2, -1, -0.5, 0, 0.5, 1, 2};
};

nlohmann::json to_json(const SimConfig& c);

class Simulator {
public:
    Simulator(Signature sig, SimConfig cfg);

    const SimConfig& config() const { return cfg_; }
    const Signature& signature() const { return sig_; }

    double eval(const State& s, const TermPtr& t, const Env& env = {}) const;
    /// Trace-based valuation of state formulas.
    bool holds(const State& s, const FormulaPtr& f, const Env& env = {}) const;
    /// Valuation of the trace formula under a modality (its temporal tag and
    /// body); nothing when a state formula meets a nonterminating trace.
    std::optional<bool> holds_on(const Trace& t, Temporal temporal, const FormulaPtr& body,
                                 const Env& env = {}) const;
    /// Reachability-based valuation; temporal operators are rejected.
    bool holds_reach(const State& s, const FormulaPtr& f, const Env& env = {}) const;

    std::vector<Trace> run(const State& s, const ProgramPtr& p, const Env& env = {}) const;
    std::vector<State> reach(const State& s, const ProgramPtr& p, const Env& env = {}) const;

    /// The flows of an ODE from s, one per sampled duration and clash choice.
    std::vector<Segment> flows(const State& s, const Program& ode, const Env& env) const;
    /// Successor states of an assignment, one per clash choice.
    std::vector<State> assign(const State& s, const Program& a, const Env& env) const;

private:
    std::vector<double> pool(const State& s, const std::string& sort) const;
    void ensure_fresh(State& s, const std::string& sort) const;
    std::vector<Trace> run_loop(const State& s, const ProgramPtr& body, const Env& env) const;

    Signature sig_;
    SimConfig cfg_;
};

// ---------------------------------------------------------------- sampling and falsification

struct SamplerOptions {
    int objects = 2;
    double range = 5;
    /// Values on the grid range/4 * k, which keeps test arithmetic exact.
    bool quarter_grid = false;
    /// Per-symbol value ranges overriding `range`.
    std::map<std::string, std::pair<double, double>> ranges;
    /// E is 1 for every object unless set, then random in {0, 1}.
    bool random_existence = false;
};

/// Fills every flexible symbol at every position over the pools.
State random_state(const Signature& sig, std::mt19937_64& rng, const SamplerOptions& opt);

using StateSampler = std::function<State(std::mt19937_64&)>;

struct Counterexample {
    std::uint64_t seed = 0;
    std::size_t sample = 0;
    State initial;
    std::optional<Trace> trace;
    std::string path;      // AST path of the violated subformula
    std::string formula;   // its printed form
    Env bindings;          // values of the quantified variables above it
};

struct FalsifyResult {
    std::optional<Counterexample> counterexample;
    std::size_t checked = 0;   // samples meeting the hypothesis
    std::size_t rejected = 0;  // samples discarded by rejection
};

/// Samples states; for an implication only states satisfying its hypothesis
/// count (up to `attempts` draws each). Runs `jobs` workers, reporting the
/// counterexample of the lowest sample index.
FalsifyResult falsify(const Simulator& sim, const StateSampler& sampler, const FormulaPtr& f, std::size_t samples,
                      std::size_t attempts = 200, int jobs = 1);

/// Snapshot grids are thinned to at most 101 states per segment.
nlohmann::json to_json(const Counterexample& c, const SimConfig& cfg);

/// Stable 64-bit FNV-1a hash.
std::uint64_t stable_hash(const std::string& text, std::uint64_t seed = 0);

}  // namespace qdtl::sim
