#include "qdtl/atc.hpp"

#include "qdtl/parser.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace qdtl::atc {

namespace fs = std::filesystem;

std::vector<CorpusEntry> load_corpus(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<CorpusEntry> out;
    for (const auto& f : files) {
        std::ifstream in(f);
        const auto j = nlohmann::json::parse(in);
        CorpusEntry c;
        c.name = j.at("name").get<std::string>();
        c.theory = dir / j.at("theory").get<std::string>();
        if (j.contains("script")) c.script = dir / j.at("script").get<std::string>();
        c.conjecture = j.value("conjecture", c.name);
        c.expected = j.value("expected", "proved");
        if (j.contains("budget")) {
            c.max_rule_applications = j["budget"].value("rule_applications", std::size_t{0});
            c.max_seconds = j["budget"].value("seconds", 0.0);
        }
        if (j.contains("falsify")) {
            const auto& fj = j["falsify"];
            c.falsifiable = fj.at("counterexample").get<bool>();
            c.samples = fj.value("samples", std::size_t{200});
            c.sampler = fj.value("sampler", "uniform");
        }
        out.push_back(std::move(c));
    }
    return out;
}

void solve_tangential(Configuration& c, double common1, double common2) {
    for (auto& a : c.aircraft) {
        a.d1 = -c.omega * a.x2 + common1;
        a.d2 = c.omega * a.x1 + common2;
    }
}

Configuration roundabout(int n, double p, double omega, double margin) {
    if (n < 1) throw std::invalid_argument("roundabout needs at least one aircraft");
    Configuration c;
    c.omega = omega;
    c.p = p;
    // chord 2 r sin(pi/n) between neighbours; for two aircraft the chord is the diameter
    const double radius = n == 1 ? p : margin * p / (2 * std::sin(std::numbers::pi / n));
    for (int k = 0; k < n; ++k) {
        const double phase = 2 * std::numbers::pi * k / n;
        c.aircraft.push_back({radius * std::cos(phase), radius * std::sin(phase), 0, 0});
    }
    solve_tangential(c);
    return c;
}

double min_separation(const Configuration& c) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < c.aircraft.size(); ++i)
        for (std::size_t j = i + 1; j < c.aircraft.size(); ++j)
            best = std::min(best, std::hypot(c.aircraft[i].x1 - c.aircraft[j].x1, c.aircraft[i].x2 - c.aircraft[j].x2));
    return best;
}

sim::State to_state(const Configuration& c) {
    sim::State s;
    auto& pool = s.pools["A"];
    for (std::size_t k = 0; k < c.aircraft.size(); ++k) {
        const double id = static_cast<double>(k);
        pool.push_back(id);
        s.tables["x1"][{id}] = c.aircraft[k].x1;
        s.tables["x2"][{id}] = c.aircraft[k].x2;
        s.tables["d1"][{id}] = c.aircraft[k].d1;
        s.tables["d2"][{id}] = c.aircraft[k].d2;
        s.tables[kExistence][{id}] = 1;
    }
    s.tables["omega"][{}] = c.omega;
    s.tables["p"][{}] = c.p;
    return s;
}

Configuration from_state(const sim::State& s) {
    Configuration c;
    auto get = [&](const std::string& f, const sim::Key& k) {
        auto t = s.tables.find(f);
        if (t == s.tables.end()) return 0.0;
        auto v = t->second.find(k);
        return v == t->second.end() ? 0.0 : v->second;
    };
    c.omega = get("omega", {});
    c.p = get("p", {});
    auto pool = s.pools.find("A");
    if (pool == s.pools.end()) return c;
    for (double id : pool->second)
        c.aircraft.push_back({get("x1", {id}), get("x2", {id}), get("d1", {id}), get("d2", {id})});
    return c;
}

sim::StateSampler sampler(const SamplerOptions& opt) {
    return [opt](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> pos(-opt.area / 2, opt.area / 2), vel(-opt.speed, opt.speed),
            turn(-2, 2), zone(0.5, 5);
        // Dyadic grids keep the tangential equalities exact in floating point.
        auto grid = [&rng](std::uniform_real_distribution<double>& d, double cells) {
            return std::round(d(rng) * cells) / cells;
        };
        Configuration c;
        c.omega = grid(turn, 16);
        c.p = zone(rng);
        // rejection on positions only, so the separation hypothesis always holds
        for (int tries = 0; tries < 1000; ++tries) {
            c.aircraft.clear();
            for (int k = 0; k < opt.objects; ++k) c.aircraft.push_back({grid(pos, 8), grid(pos, 8), 0, 0});
            if (min_separation(c) >= c.p) break;
        }
        if (min_separation(c) < c.p) c.p = 0.9 * min_separation(c);
        if (opt.tangential) {
            const double common1 = grid(vel, 8), common2 = grid(vel, 8);
            solve_tangential(c, common1, common2);
        } else {
            for (auto& a : c.aircraft) {
                a.d1 = vel(rng);
                a.d2 = vel(rng);
            }
        }
        return to_state(c);
    };
}

sim::StateSampler named_sampler(const std::string& name, const Signature& sig, int objects, double range) {
    if (name == "uniform") {
        sim::SamplerOptions opt;
        opt.objects = objects;
        opt.range = range;
        return [sig, opt](std::mt19937_64& rng) { return sim::random_state(sig, rng, opt); };
    }
    if (name == "atc" || name == "atc-free") {
        SamplerOptions opt;
        opt.objects = objects;
        opt.tangential = name == "atc";
        return sampler(opt);
    }
    throw std::invalid_argument("unknown sampler '" + name + "'");
}

double flight_separation(const Configuration& c, double duration, double step) {
    static const char* kSignature = R"(
        sort A;
        func x1(A): R; func x2(A): R; func d1(A): R; func d2(A): R;
        func omega: R; func p: R;
        prog flight := forall i:A x1(i)' = d1(i), x2(i)' = d2(i), d1(i)' = -omega*d2(i), d2(i)' = omega*d1(i);
    )";
    static const Theory theory = parse_theory(kSignature, "<flight>");
    sim::SimConfig cfg;
    cfg.step = step;
    cfg.fixed_durations = {duration};
    cfg.fresh_supply = false;
    sim::Simulator simulator(theory.sig, cfg);
    double best = min_separation(c);
    for (const auto& seg : simulator.flows(to_state(c), *theory.progs.at("flight"), {}))
        for (const auto& st : seg.states) best = std::min(best, min_separation(from_state(st)));
    return best;
}

}  // namespace qdtl::atc
