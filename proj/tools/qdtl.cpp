// qdtl: check proof scripts, falsify conjectures by simulation, or parse only.
//
// Exit codes: 0 proved / no counterexample / parsed, 1 open proof, 2 failed
// proof, usage, I/O or parse error, 3 counterexample found.

#include "qdtl/atc.hpp"
#include "qdtl/calculus.hpp"
#include "qdtl/catalog.hpp"
#include "qdtl/parser.hpp"
#include "qdtl/printer.hpp"
#include "qdtl/sim.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace qdtl;

constexpr int kOk = 0, kOpen = 1, kInput = 2, kCounterexample = 3;

struct RunConfig {
    std::vector<std::string> inputs;
    std::string mode = "check";
    std::string conjecture;
    std::uint64_t seed = 0;
    double step = 1e-3;
    int loop_bound = 3;
    double max_duration = 2.0;
    std::size_t samples = 200;
    std::string sampler = "uniform";
    int objects = 2;
    double range = 5;
    std::string solver;
    int timeout_ms = 10000;
    std::string format = "text";
    int jobs = 1;
    std::string out;
    std::string cache;
    bool clear_cache = false;
};

class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

OracleOptions oracle_options(const RunConfig& cfg) {
    OracleOptions o;
    o.solver = solver_from_environment();
    if (!cfg.solver.empty()) o.solver.path = cfg.solver;
    if (!cfg.cache.empty()) o.solver.cache_dir = cfg.cache;
    o.solver.timeout_ms = cfg.timeout_ms;
    return o;
}

int cmd_check(const RunConfig& cfg) {
    if (cfg.inputs.size() != 2) throw InputError("check expects a theory file and a script file");
    const Theory theory = parse_theory(slurp(cfg.inputs[0]), cfg.inputs[0]);
    const auto scripts = parse_proof_scripts(slurp(cfg.inputs[1]), cfg.inputs[1]);
    CheckOptions opt;
    opt.jobs = cfg.jobs;
    opt.oracle = oracle_options(cfg);

    std::vector<ProofReport> reports;
    for (const auto& s : scripts) {
        if (!cfg.conjecture.empty() && s.conjecture != cfg.conjecture) continue;
        if (!theory.find(s.conjecture)) throw InputError(cfg.inputs[1] + ": unknown conjecture '" + s.conjecture + "'");
        reports.push_back(check_proof(theory, s, opt));
    }
    if (reports.empty()) throw InputError("no proof for conjecture '" + cfg.conjecture + "'");

    bool all = true;
    for (const auto& r : reports) all = all && r.verdict == ProofVerdict::Proved;
    if (cfg.format == "json") {
        nlohmann::json doc;
        if (reports.size() == 1) {
            doc = render_json(reports[0]);
        } else {
            doc = nlohmann::json::array();
            for (const auto& r : reports) doc.push_back(render_json(r));
        }
        std::cout << doc.dump(2) << "\n";
    } else {
        for (const auto& r : reports) std::cout << render_text(r);
    }
    for (const auto& r : reports)
        if (r.verdict == ProofVerdict::Error) return kInput;
    return all ? kOk : kOpen;
}

sim::StateSampler make_sampler(const RunConfig& cfg, const Signature& sig) {
    try {
        return atc::named_sampler(cfg.sampler, sig, cfg.objects, cfg.range);
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
}

int cmd_falsify(const RunConfig& cfg) {
    if (cfg.inputs.size() != 1) throw InputError("falsify expects one theory file");
    if (cfg.samples == 0 || cfg.step <= 0 || cfg.loop_bound < 0 || cfg.max_duration < 0)
        throw InputError("falsify needs samples > 0, step > 0, loop-bound >= 0 and max-duration >= 0");
    const Theory theory = parse_theory(slurp(cfg.inputs[0]), cfg.inputs[0]);
    const Conjecture* conj = theory.find(cfg.conjecture);
    if (!conj) {
        if (!cfg.conjecture.empty() || theory.conjectures.size() != 1)
            throw InputError("falsify needs --conjecture naming one of the theory's conjectures");
        conj = &theory.conjectures.front();
    }
    sim::SimConfig sc;
    sc.step = cfg.step;
    sc.loop_bound = cfg.loop_bound;
    sc.max_duration = cfg.max_duration;
    sc.seed = cfg.seed;
    sim::Simulator simulator(theory.sig, sc);
    sim::FalsifyResult result;
    try {
        result = sim::falsify(simulator, make_sampler(cfg, theory.sig), conj->formula, cfg.samples, 200, cfg.jobs);
    } catch (const sim::BudgetExceeded& e) {
        throw InputError(std::string("simulation budget exceeded: ") + e.what());
    }
    if (!result.counterexample) {
        if (cfg.format == "json")
            std::cout << nlohmann::json{{"conjecture", conj->name},
                                        {"counterexample", nullptr},
                                        {"checked", result.checked},
                                        {"rejected", result.rejected}}
                             .dump(2)
                      << "\n";
        else
            std::cout << conj->name << ": no counterexample in " << result.checked << " samples\n";
        return kOk;
    }
    auto doc = sim::to_json(*result.counterexample, sc);
    doc["conjecture"] = conj->name;
    const std::string text = doc.dump(2);
    if (!cfg.out.empty()) {
        std::ofstream o(cfg.out, std::ios::binary);
        if (!o) throw InputError("cannot write " + cfg.out);
        o << text << "\n";
    }
    if (cfg.format == "json") {
        std::cout << text << "\n";
    } else {
        const auto& c = *result.counterexample;
        std::cout << conj->name << ": counterexample at sample " << c.sample << " (seed " << c.seed << ")\n"
                  << "  violated: " << c.formula << "\n  state: " << sim::serialize(c.initial) << "\n";
    }
    return kCounterexample;
}

int cmd_parse(const RunConfig& cfg) {
    if (cfg.inputs.empty()) throw InputError("parse-only expects at least one file");
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& path : cfg.inputs) {
        const std::string text = slurp(path);
        if (std::filesystem::path(path).extension() == ".qpf") {
            for (const auto& s : parse_proof_scripts(text, path)) {
                if (cfg.format == "json")
                    doc.push_back({{"file", path}, {"proof", s.conjecture}, {"commands", s.commands.size()}});
                else
                    std::cout << path << ": proof " << s.conjecture << " (" << s.commands.size() << " commands)\n";
            }
        } else {
            const Theory th = parse_theory(text, path);
            for (const auto& c : th.conjectures) {
                if (cfg.format == "json")
                    doc.push_back({{"file", path}, {"conjecture", c.name}, {"formula", to_string(c.formula)}});
                else
                    std::cout << path << ": conjecture " << c.name << " := " << to_string(c.formula) << "\n";
            }
        }
    }
    if (cfg.format == "json") std::cout << doc.dump(2) << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    CLI::App app{"QdTL proof checker and trace falsifier"};
    app.add_option("inputs", cfg.inputs, "theory (.qdtl) and proof script (.qpf) files");
    app.add_option("--mode", cfg.mode, "check, falsify or parse-only")
        ->check(CLI::IsMember({"check", "falsify", "parse-only"}));
    app.add_option("--conjecture", cfg.conjecture, "restrict to one conjecture");
    app.add_option("--seed", cfg.seed, "sampling seed");
    app.add_option("--step", cfg.step, "integration step");
    app.add_option("--loop-bound", cfg.loop_bound, "iteration bound of loops");
    app.add_option("--max-duration", cfg.max_duration, "longest sampled flow duration");
    app.add_option("--samples", cfg.samples, "falsifier samples");
    app.add_option("--sampler", cfg.sampler, "uniform, atc (tangential aircraft) or atc-free")
        ->check(CLI::IsMember({"uniform", "atc", "atc-free"}));
    app.add_option("--objects", cfg.objects, "objects per sort in sampled states");
    app.add_option("--range", cfg.range, "uniform sampler value range");
    app.add_option("--solver", cfg.solver, "external SMT solver (default from QDTL_SOLVER)");
    app.add_option("--timeout-ms", cfg.timeout_ms, "external solver timeout");
    app.add_option("--format", cfg.format, "text or json")->check(CLI::IsMember({"text", "json"}));
    app.add_option("--jobs", cfg.jobs, "parallel workers")->check(CLI::PositiveNumber);
    app.add_option("--out", cfg.out, "counterexample output file");
    app.add_option("--cache", cfg.cache, "solver result cache directory");
    app.add_flag("--clear-cache", cfg.clear_cache, "remove cached solver results first");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInput;
    }

    try {
        if (cfg.clear_cache) {
            std::string dir = cfg.cache.empty() ? solver_from_environment().cache_dir : cfg.cache;
            if (!dir.empty()) {
                std::error_code ec;
                std::filesystem::remove_all(dir, ec);
            }
        }
        if (cfg.mode == "check") return cmd_check(cfg);
        if (cfg.mode == "falsify") return cmd_falsify(cfg);
        return cmd_parse(cfg);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInput;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInput;
    }
}
