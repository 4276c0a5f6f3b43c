#include "properties.hpp"

#include "qdtl/parser.hpp"
#include "qdtl/printer.hpp"
#include "qdtl/rk4.hpp"
#include "qdtl/sim.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace qdtl;
using namespace qdtl::sim;

namespace {

Theory theory(const std::string& text) { return parse_theory(text, "sim-test.qdtl"); }

ParseContext context_of(const Theory& th) {
    ParseContext ctx;
    ctx.sig = th.sig;
    ctx.macros = &th;
    return ctx;
}

const char* kCar = R"(
    sort C;
    func x(C): R;
    func v(C): R;
    func a(C): R;
    conjecture braking := forall i:C x(i) >= 0 ->
        [forall i:C x(i)' = v(i), v(i)' = a(i) & v(i) >= 0] box forall i:C x(i) >= 0;
    conjecture braking_mutant := forall i:C x(i) >= 0 ->
        [forall i:C x(i)' = v(i), v(i)' = a(i)] box forall i:C x(i) >= 0;
)";

const char* kFlight = R"(
    sort A;
    func x1(A): R;
    func x2(A): R;
    func d1(A): R;
    func d2(A): R;
    func omega: R;
    prog flight := forall i:A x1(i)' = d1(i), x2(i)' = d2(i), d1(i)' = -omega*d2(i), d2(i)' = omega*d1(i);
)";

State car_state(double x, double v, double a) {
    State s;
    s.pools["C"] = {0};
    s.tables["x"][{0}] = x;
    s.tables["v"][{0}] = v;
    s.tables["a"][{0}] = a;
    s.tables[kExistence][{0}] = 1;
    return s;
}

/// Two aircraft with omega = 1 whose relative motion is a rotation.
State tangential_pair() {
    State s;
    s.pools["A"] = {0, 1};
    s.tables["omega"][{}] = 1;
    s.tables["x1"][{0}] = 0, s.tables["x2"][{0}] = 0, s.tables["d1"][{0}] = 1, s.tables["d2"][{0}] = 0;
    s.tables["x1"][{1}] = 0, s.tables["x2"][{1}] = 6, s.tables["d1"][{1}] = -5, s.tables["d2"][{1}] = 0;
    return s;
}

double separation(const State& s) {
    const double dx = s.tables.at("x1").at({0}) - s.tables.at("x1").at({1});
    const double dy = s.tables.at("x2").at({0}) - s.tables.at("x2").at({1});
    return std::sqrt(dx * dx + dy * dy);
}

std::set<std::string> final_states(const std::vector<Trace>& traces) {
    std::set<std::string> out;
    for (const auto& t : traces)
        if (t.terminates()) out.insert(serialize(t.last()));
    return out;
}

std::set<std::string> serialized(const std::vector<State>& states) {
    std::set<std::string> out;
    for (const auto& s : states) out.insert(serialize(s));
    return out;
}

SimConfig small_config(std::uint64_t seed = 0) {
    SimConfig cfg;
    cfg.step = 0.05;
    cfg.max_duration = 0.5;
    cfg.durations = 2;
    cfg.loop_bound = 3;
    cfg.seed = seed;
    cfg.max_traces = 3000;
    return cfg;
}

State fuzz_state(std::mt19937_64& rng, int objects = 3) {
    SamplerOptions opt;
    opt.objects = objects;
    opt.range = 2;
    opt.quarter_grid = true;
    opt.random_existence = true;
    return random_state(testing::fuzz_signature(), rng, opt);
}

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("term evaluation") {
    Simulator sim(Signature{}, {});
    State s;
    s.pools["A"] = {0, 1};
    s.tables["x"][{0}] = 3;
    s.tables["a"][{}] = 7;
    s.tables["b"][{}] = 8;
    Env env = {{"i", 0}};
    CHECK(sim.eval(s, parse_formula("forall i:A x(i) + 1 >= 0")->left->lhs, env) == 4);
    CHECK(sim.eval(s, parse_term("if 1 >= 0 then a else b fi"), {}) == 7);
    // Objects never created have existence 0.
    CHECK(sim.eval(s, make_app(kExistence, {make_var("o", "A")}, kReal), {{"o", 1}}) == 0);
    CHECK_THROWS_AS(sim.eval(s, parse_formula("forall i:A x(i) >= 0")->left->lhs, {{"i", 1}}), SimError);
}

TEST_CASE("quantifier over an empty pool is an error") {
    Simulator sim(Signature{}, {});
    State s;
    CHECK_THROWS_AS(sim.holds(s, parse_formula("forall i:B 0 >= 0")), SimError);
}

TEST_CASE("trace formula valuation") {
    Simulator sim(Signature{}, {});
    State s;
    s.tables["p"][{}] = 1;
    const auto p = parse_formula("p >= 1");
    Trace point{{Segment::point(s)}};
    CHECK(*sim.holds_on(point, Temporal::Always, p) == true);
    // Abort positions are not checked by box.
    Trace aborted{{Segment::point(s), Segment::point(State::lambda())}};
    CHECK(*sim.holds_on(aborted, Temporal::Always, p) == true);
    CHECK(*sim.holds_on(aborted, Temporal::Eventually, p) == true);
    CHECK_FALSE(sim.holds_on(aborted, Temporal::None, p).has_value());
    CHECK(sim.holds(s, parse_formula("[?p >= 2] p >= 5")));
    CHECK(sim.holds(s, parse_formula("[?p >= 2] box p >= 1")));
    CHECK_FALSE(sim.holds(s, parse_formula("<<?p >= 2>> p >= 1")));
}

TEST_CASE("sequential assignments visit every value") {
    Simulator sim(Signature{}, {});
    State s;
    s.tables["x"][{}] = 0;
    auto traces = sim.run(s, parse_program("x := 1; x := 2"));
    REQUIRE(traces.size() == 1);
    // Composition concatenates, so the joint state 1 appears twice.
    std::vector<double> seen;
    for (const auto& seg : traces[0].segments) seen.push_back(seg.states.front().tables.at("x").at({}));
    CHECK(seen == std::vector<double>{0, 1, 1, 2});
    CHECK(traces[0].terminates());
}

TEST_CASE("constant velocity car") {
    auto th = theory(kCar);
    SimConfig cfg;
    cfg.fixed_durations = {2.0};
    Simulator sim(th.sig, cfg);
    auto ctx = context_of(th);
    auto ode = parse_program("forall i:C x(i)' = v(i), v(i)' = a(i) & v(i) >= 0", ctx);
    auto traces = sim.run(car_state(0, 1, 0), ode);
    REQUIRE(traces.size() == 1);
    CHECK(traces[0].segments.size() == 1);
    CHECK(traces[0].segments[0].duration == doctest::Approx(2.0));
    CHECK(std::abs(traces[0].last().tables.at("x").at({0}) - 2.0) < 1e-6);
}

TEST_CASE("domain exit is located by bisection") {
    auto th = theory(kCar);
    SimConfig cfg;
    cfg.step = 0.01;
    cfg.fixed_durations = {3.0};
    Simulator sim(th.sig, cfg);
    auto ctx = context_of(th);
    auto ode = parse_program("forall i:C x(i)' = v(i), v(i)' = a(i) & v(i) >= 0", ctx);
    // v = 1 - t leaves the domain at t = 1.
    auto traces = sim.run(car_state(0, 1, -1), ode);
    REQUIRE(traces.size() == 1);
    CHECK(std::abs(traces[0].segments[0].duration - 1.0) <= cfg.step * 1e-3 + 1e-12);
    CHECK(traces[0].last().tables.at("v").at({0}) >= 0);
    // Starting outside the domain there is no flow at all.
    CHECK(sim.run(car_state(0, -1, 0), ode).empty());
}

TEST_CASE("tangential flight keeps the separation over a revolution") {
    auto th = theory(kFlight);
    SimConfig cfg;
    cfg.fixed_durations = {2 * M_PI};
    Simulator sim(th.sig, cfg);
    auto traces = sim.run(tangential_pair(), th.progs.at("flight"));
    REQUIRE(traces.size() == 1);
    const double initial = separation(traces[0].first());
    double worst = 0;
    for (const auto& st : traces[0].segments[0].states) worst = std::max(worst, std::abs(separation(st) - initial));
    CHECK(initial == doctest::Approx(6.0));
    CHECK(worst < 1e-4);
}

TEST_CASE("integration error shrinks with the fourth power of the step") {
    const auto errors = testing::rotation_errors();
    REQUIRE(errors.size() == 4);
    for (std::size_t k = 1; k < errors.size(); ++k) CHECK(errors[k - 1] / errors[k] >= 12);
}

TEST_CASE("reachability examples") {
    Simulator sim(Signature{}, {});
    State s;
    s.tables["x"][{}] = 0;
    CHECK(sim.reach(s, parse_program("?0 >= 1")).empty());
    SimConfig zero;
    zero.loop_bound = 0;
    Simulator bounded(Signature{}, zero);
    auto r = bounded.reach(s, parse_program("(x := x + 1)*"));
    REQUIRE(r.size() == 1);
    CHECK(r[0] == s);
    auto r3 = sim.reach(s, parse_program("(x := x + 1)*"));
    CHECK(r3.size() == 4);
}

TEST_CASE("reachable pairs are the end points of terminating traces") {
    const auto st = testing::reachability_pairs(300);
    CHECK(st.compared == 300);
    CHECK(st.mismatches == 0);
}

TEST_CASE("trace and reachability valuations agree without temporal operators") {
    const auto st = testing::conservativity(200);
    CAPTURE(st.first_mismatch);
    CHECK(st.compared == 200);
    CHECK(st.mismatches == 0);
    CHECK(st.true_count > 20);
    CHECK(st.true_count < st.compared - 20);
}

TEST_CASE("trace composition is associative and abort is final") {
    int triples = 0;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        testing::GenOptions opt;
        opt.linear = true;
        testing::Gen gen(seed + 300, opt);
        std::mt19937_64 rng(seed);
        State s = fuzz_state(rng, 2);
        Simulator sim(testing::fuzz_signature(), small_config(seed));
        std::vector<Trace> all;
        try {
            auto p = gen.program({}, 3);
            all = sim.run(s, p);
            for (const auto& t : all) {
                // Abort only ever appears as the final point flow.
                for (std::size_t k = 0; k < t.segments.size(); ++k)
                    for (const auto& st : t.segments[k].states)
                        if (st.abort) CHECK((k + 1 == t.segments.size() && t.segments[k].states.size() == 1));
            }
            if (all.empty()) continue;
            const Trace& a = all.front();
            if (!a.terminates()) continue;
            auto second = sim.run(a.last(), gen.program({}, 2));
            if (second.empty()) continue;
            const Trace& b = second.back();
            auto third = sim.run(b.terminates() ? b.last() : s, gen.program({}, 2));
            if (third.empty()) continue;
            const Trace& c = third.front();
            auto ab = compose(a, b);
            auto bc = compose(b, c);
            if (ab && bc) {
                auto left = compose(*ab, c), right = compose(a, *bc);
                REQUIRE(left.has_value() == right.has_value());
                if (left) {
                    CHECK(left->segments.size() == right->segments.size());
                    CHECK(left->last() == right->last());
                    ++triples;
                }
            }
        } catch (const SimError&) {
        }
    }
    CHECK(triples > 50);
}

TEST_CASE("a nonterminating prefix absorbs the rest of a sequence") {
    Simulator sim(Signature{}, {});
    State s;
    s.tables["x"][{}] = 0;
    auto traces = sim.run(s, parse_program("?x >= 1; x := 5"));
    REQUIRE(traces.size() == 1);
    CHECK_FALSE(traces[0].terminates());
    CHECK(traces[0].segments.size() == 2);
}

TEST_CASE("clashing quantified assignment yields every outcome") {
    Signature sig;
    sig.add_sort("A");
    sig.add_function({"y", {}, kReal, false});
    sig.add_function({"x", {"A"}, kReal, false});
    Simulator sim(sig, {});
    State s;
    s.pools["A"] = {0, 1};
    s.tables["x"][{0}] = 3;
    s.tables["x"][{1}] = 4;
    s.tables["y"][{}] = 0;
    ParseContext ctx;
    ctx.sig = sig;
    auto states = sim.reach(s, parse_program("forall i:A y := x(i)", ctx));
    std::set<double> ys;
    for (const auto& t : states) ys.insert(t.tables.at("y").at({}));
    CHECK(ys == std::set<double>{3, 4});
}

TEST_CASE("new objects are fresh and distinct") {
    Signature sig;
    sig.add_sort("A");
    sig.add_function({"n", {}, "A", false});
    sig.add_function({"m", {}, "A", false});
    sig.add_function({"x", {"A"}, kReal, false});
    ParseContext ctx;
    ctx.sig = sig;
    SimConfig cfg;
    cfg.fresh_supply = false;
    Simulator sim(sig, cfg);
    State s;
    s.pools["A"] = {0, 1, 2, 3};
    for (double o : {0.0, 1.0, 2.0, 3.0}) s.tables["x"][{o}] = o;
    s.tables[kExistence][{0}] = 1;
    s.tables["n"][{}] = 0;
    s.tables["m"][{}] = 0;
    auto one = desugar_new(parse_program("n := new A", ctx), sig);
    auto traces = sim.run(s, one);
    int terminated = 0;
    for (const auto& t : traces) {
        if (!t.terminates()) continue;
        ++terminated;
        const double n = t.last().tables.at("n").at({});
        CHECK(n != 0);
        CHECK(t.last().tables.at(kExistence).at({n}) == 1);
    }
    CHECK(terminated == 3);

    auto two = desugar_new(parse_program("n := new A; m := new A", ctx), sig);
    terminated = 0;
    for (const auto& t : sim.run(s, two)) {
        if (!t.terminates()) continue;
        ++terminated;
        CHECK(t.last().tables.at("n").at({}) != t.last().tables.at("m").at({}));
    }
    CHECK(terminated == 6);
}

TEST_CASE("fresh supply creates an object when every one exists") {
    Signature sig;
    sig.add_sort("A");
    sig.add_function({"n", {}, "A", false});
    sig.add_function({"x", {"A"}, kReal, false});
    ParseContext ctx;
    ctx.sig = sig;
    Simulator sim(sig, {});
    State s;
    s.pools["A"] = {0};
    s.tables["x"][{0}] = 5;
    s.tables[kExistence][{0}] = 1;
    s.tables["n"][{}] = 0;
    auto traces = sim.run(s, parse_program("n := new A", ctx));
    int fresh = 0;
    for (const auto& t : traces)
        if (t.terminates()) {
            const double n = t.last().tables.at("n").at({});
            CHECK(n == 1);
            CHECK(t.last().tables.at("x").at({n}) == 0);
            CHECK(t.last().tables.at(kExistence).at({n}) == 1);
            ++fresh;
        }
    CHECK(fresh == 1);
}

TEST_CASE("conditional terms evaluate like their expansion") {
    int compared = 0;
    for (std::uint64_t seed = 0; seed < 400 && compared < 150; ++seed) {
        testing::GenOptions opt;
        opt.modalities = false;
        testing::Gen gen(seed + 11000, opt);
        auto f = gen.formula({}, 3, false);
        if (!contains_ite(f)) continue;
        std::mt19937_64 rng(seed);
        State s = fuzz_state(rng);
        Simulator sim(testing::fuzz_signature(), small_config());
        CHECK_MESSAGE(sim.holds(s, f) == sim.holds(s, desugar_conditional(f)), to_string(f));
        ++compared;
    }
    CHECK(compared >= 100);
}

TEST_CASE("falsifier finds the post-assignment violation") {
    Simulator sim(Signature{}, {});
    State s;
    s.tables["x"][{}] = 0;
    auto result = falsify(sim, [&](std::mt19937_64&) { return s; }, parse_formula("[x := 1] box x = 0"), 5);
    REQUIRE(result.counterexample);
    const auto& c = *result.counterexample;
    REQUIRE(c.trace);
    CHECK(c.trace->segments.size() == 2);
    CHECK(c.trace->last().tables.at("x").at({}) == 1);
    CHECK(c.sample == 0);
    auto json = to_json(c, sim.config());
    CHECK(json["trace"].size() == 2);
    CHECK(json["violated"]["path"] == "");
    CHECK(json.contains("seed"));
    CHECK(json["config"]["step"] == sim.config().step);
}

TEST_CASE("braking example survives falsification and its mutant does not") {
    auto th = theory(kCar);
    SimConfig cfg;
    cfg.step = 0.01;
    cfg.max_duration = 4;
    cfg.seed = 5;
    Simulator sim(th.sig, cfg);
    SamplerOptions opt;
    opt.objects = 2;
    opt.range = 3;
    auto sampler = [&](std::mt19937_64& rng) { return random_state(th.sig, rng, opt); };
    auto valid = falsify(sim, sampler, th.find("braking")->formula, 500);
    CHECK_FALSE(valid.counterexample);
    CHECK(valid.checked == 500);
    auto mutant = falsify(sim, sampler, th.find("braking_mutant")->formula, 500);
    REQUIRE(mutant.counterexample);
    CHECK(mutant.counterexample->path == "left.right.left");
    REQUIRE(mutant.counterexample->trace);
    // Replaying the reported sample gives the same verdict.
    auto again = falsify(sim, sampler, th.find("braking_mutant")->formula, 500);
    CHECK(again.counterexample->sample == mutant.counterexample->sample);
    CHECK(serialize(again.counterexample->initial) == serialize(mutant.counterexample->initial));
}

TEST_CASE("parallel falsification reports the same counterexample") {
    auto th = theory(kCar);
    SimConfig cfg;
    cfg.step = 0.02;
    cfg.max_duration = 4;
    Simulator sim(th.sig, cfg);
    SamplerOptions opt;
    auto sampler = [&](std::mt19937_64& rng) { return random_state(th.sig, rng, opt); };
    auto f = th.find("braking_mutant")->formula;
    auto one = falsify(sim, sampler, f, 100, 200, 1);
    auto three = falsify(sim, sampler, f, 100, 200, 3);
    REQUIRE(one.counterexample);
    REQUIRE(three.counterexample);
    CHECK(one.counterexample->sample == three.counterexample->sample);
}

TEST_CASE("rk4 step on a linear field") {
    auto field = [](const Eigen::VectorXd& y) { return Eigen::VectorXd(-y); };
    Eigen::VectorXd y(1);
    y << 1;
    auto end = rk4_integrate(field, y, 1.0, 0.01);
    CHECK(std::abs(end[0] - std::exp(-1.0)) < 1e-9);
}

}  // TEST_SUITE
