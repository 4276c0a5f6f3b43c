// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 when any fails.

#include "properties.hpp"

#include <cstdio>
#include <functional>
#include <set>

using namespace qdtl;
using namespace qdtl::testing;

namespace {

// Pinned thresholds.
constexpr std::size_t kMaxApplications = 50;
constexpr double kMaxProofSeconds = 5.0;
constexpr double kMaxConservativitySeconds = 60.0;
constexpr double kMaxSoundnessSeconds = 120.0;
constexpr double kMinRk4Factor = 12.0;

double elapsed(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

void collect(const ProofNode& n, const std::string& rule, std::vector<const ProofNode*>& out) {
    if (n.rule == rule) out.push_back(&n);
    for (const auto& c : n.children) collect(c, rule, out);
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

Outcome unbounded_replay() {
    auto r = replay(corpus_entry("atc_unbounded"));
    const std::set<std::string> allowed = {"[']box", "DC", "DI", "[:=]", "R"};
    std::set<std::string> used(r.report.rules_used.begin(), r.report.rules_used.end());
    std::vector<const ProofNode*> closes;
    collect(r.report.root, "R", closes);
    int identity = 0, leaves = 0;
    for (const auto* n : closes)
        if (n->args.empty()) {
            ++leaves;
            identity += n->method == OracleMethod::Identity;
        }
    Outcome o;
    o.pass = r.report.verdict == ProofVerdict::Proved && used == allowed &&
             r.report.rule_applications <= kMaxApplications && r.seconds < kMaxProofSeconds && leaves == 2 &&
             identity == 2;
    o.detail = verdict_text(r.report.verdict) + ", " + std::to_string(r.report.rule_applications) +
               " applications, " + std::to_string(r.seconds) + " s, arithmetic leaves closed by normalization " +
               std::to_string(identity) + "/" + std::to_string(leaves);
    return o;
}

Outcome bounded_replay() {
    auto r = replay(corpus_entry("atc_bounded"));
    std::set<std::string> used(r.report.rules_used.begin(), r.report.rules_used.end());
    bool families = true;
    for (const std::string rule : {"[;]box", "[:=]box", "[?]box", "[']box", "DC", "DI", "ax", "andl"})
        families = families && used.count(rule);
    const auto no_eta = replay(corpus_entry("atc_bounded_no_eta")).report.verdict;
    const auto no_chi = replay(corpus_entry("atc_bounded_no_chi")).report.verdict;
    Outcome o;
    o.pass = r.report.verdict == ProofVerdict::Proved && families && r.seconds < kMaxProofSeconds &&
             r.report.rule_applications <= kMaxApplications && no_eta == ProofVerdict::Open &&
             no_chi == ProofVerdict::Open;
    o.detail = verdict_text(r.report.verdict) + " in " + std::to_string(r.report.rule_applications) +
               " applications, " + std::to_string(r.seconds) + " s; without the horizon test " +
               verdict_text(no_eta) + ", without the time domain " + verdict_text(no_chi);
    return o;
}

Outcome conservativity_check() {
    const auto start = std::chrono::steady_clock::now();
    const auto c = conservativity(200);
    const auto p = reachability_pairs(200);
    const double s = elapsed(start);
    Outcome o;
    o.pass = c.compared == 200 && c.mismatches == 0 && p.compared == 200 && p.mismatches == 0 &&
             s < kMaxConservativitySeconds;
    o.detail = std::to_string(c.mismatches) + " valuation mismatches in " + std::to_string(c.compared) +
               " formulas, " + std::to_string(p.mismatches) + " pair mismatches in " + std::to_string(p.compared) +
               " programs, " + std::to_string(s) + " s";
    if (!c.first_mismatch.empty()) o.detail += "; first: " + c.first_mismatch;
    return o;
}

Outcome soundness_check() {
    const auto start = std::chrono::steady_clock::now();
    int violations = 0, short_rules = 0;
    std::string first;
    for (const auto& rule : soundness_rules()) {
        const auto st = local_soundness(rule, 50, 50, 1);
        violations += st.violations;
        short_rules += st.instances < 50 || st.states < 50 * 50;
        if (first.empty() && st.violations) first = rule + ": " + st.first_violation;
    }
    const double s = elapsed(start);
    Outcome o;
    o.pass = violations == 0 && short_rules == 0 && s < kMaxSoundnessSeconds;
    o.detail = std::to_string(soundness_rules().size()) + " rules x 50 instances x 50 states, " +
               std::to_string(violations) + " violations, " + std::to_string(short_rules) +
               " rules short of instances, " + std::to_string(s) + " s";
    if (!first.empty()) o.detail += "; first: " + first;
    return o;
}

Outcome monitor() {
    const auto st = monitor_check(30, 10, 3);
    Outcome o;
    o.pass = st.programs == 30 && st.mismatches == 0;
    o.detail = std::to_string(st.programs) + " programs, " + std::to_string(st.states) + " states, " +
               std::to_string(st.mismatches) + " mismatches";
    if (!st.first_mismatch.empty()) o.detail += "; first: " + st.first_mismatch;
    return o;
}

Outcome falsifier() {
    auto cars = corpus_entry("cars");
    auto braking = corpus_entry("cars_braking");
    const auto valid = falsify_entry(cars, 2, 500);
    const auto mutant = falsify_entry(braking, 2, 100);
    Outcome o;
    o.pass = !valid.counterexample && valid.checked == 500 && mutant.counterexample.has_value();
    o.detail = "example: " + std::string(valid.counterexample ? "counterexample" : "none") + " in " +
               std::to_string(valid.checked) + " samples; braking mutant: " +
               (mutant.counterexample ? "counterexample at sample " + std::to_string(mutant.counterexample->sample)
                                      : std::string("none in 100 samples"));
    return o;
}

Outcome oracle() {
    const auto fm = fm_against_grid(500, 2024);
    const auto hom = ring_homomorphism(1000);
    Outcome o;
    o.pass = fm.systems == 500 && fm.mismatches == 0 && fm.bad_models == 0 && hom.pairs == 1000 && hom.mismatches == 0;
    o.detail = std::to_string(fm.mismatches) + " feasibility mismatches in " + std::to_string(fm.systems) +
               " systems (" + std::to_string(fm.feasible) + " feasible, " + std::to_string(fm.bad_models) +
               " bad models), " + std::to_string(hom.mismatches) + " homomorphism failures in " +
               std::to_string(hom.pairs) + " pairs";
    return o;
}

Outcome rk4_order() {
    const auto errors = rotation_errors();
    Outcome o;
    o.pass = errors.size() == 4;
    std::string factors;
    for (std::size_t k = 1; k < errors.size(); ++k) {
        const double f = errors[k - 1] / errors[k];
        o.pass = o.pass && f >= kMinRk4Factor;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%s%.2f", k > 1 ? ", " : "", f);
        factors += buf;
    }
    o.detail = "error reduction per halving: " + factors + " (need >= 12)";
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"unbounded roundabout proof replay", unbounded_replay},
        {"bounded roundabout proof replay and mutants", bounded_replay},
        {"trace and reachability semantics agree", conservativity_check},
        {"empirical local soundness", soundness_check},
        {"monitor transformation", monitor},
        {"falsifier sanity", falsifier},
        {"oracle correctness", oracle},
        {"RK4 order", rk4_order},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("criterion %zu %s: %s (%s)\n", k + 1, o.pass ? "PASS" : "FAIL", criteria[k].first.c_str(),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}
