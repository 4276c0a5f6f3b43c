#include "properties.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace qdtl;
using namespace qdtl::testing;

TEST_SUITE("atc") {

TEST_CASE("manifests load with paths relative to the corpus") {
    const auto entries = atc::load_corpus(corpus_dir());
    std::vector<std::string> names;
    for (const auto& e : entries) names.push_back(e.name);
    CHECK(names == std::vector<std::string>{"atc_bounded", "atc_bounded_no_chi", "atc_bounded_no_eta", "atc_new",
                                            "atc_unbounded", "atc_unbounded_no_tangential", "cars", "cars_braking"});
    const auto e = corpus_entry("atc_unbounded");
    CHECK(e.theory == corpus_dir() / "atc_unbounded.qdtl");
    CHECK(e.script == corpus_dir() / "atc_unbounded.qpf");
    CHECK(e.expected == "proved");
    CHECK(e.max_rule_applications == 50);
    CHECK(e.max_seconds == doctest::Approx(5.0));
    REQUIRE(e.falsifiable.has_value());
    CHECK_FALSE(*e.falsifiable);
    CHECK(e.sampler == "atc");
    CHECK(corpus_entry("cars_braking").script.empty());
}

TEST_CASE("tangential velocities rotate the pairwise differences") {
    atc::Configuration c;
    c.omega = 0.7;
    c.aircraft = {{0, 0, 0, 0}, {3, -1, 0, 0}, {-2, 4, 0, 0}};
    atc::solve_tangential(c, 1.5, -0.5);
    for (const auto& a : c.aircraft)
        for (const auto& b : c.aircraft) {
            CHECK(a.d1 - b.d1 == doctest::Approx(-c.omega * (a.x2 - b.x2)));
            CHECK(a.d2 - b.d2 == doctest::Approx(c.omega * (a.x1 - b.x1)));
        }
}

TEST_CASE("two aircraft at the separation distance keep it over a revolution") {
    // p = 5, omega = 1: the pair circles its midpoint with the distance fixed at 5
    const auto c = atc::roundabout(2, 5.0, 1.0);
    REQUIRE(c.aircraft.size() == 2);
    CHECK(atc::min_separation(c) == doctest::Approx(5.0).epsilon(1e-12));
    const double sep = atc::flight_separation(c, 2 * std::numbers::pi, 1e-3);
    CHECK(sep >= 5.0 - 1e-6);
    CHECK(sep <= 5.0 + 1e-9);
}

TEST_CASE("roundabouts of several sizes stay separated") {
    for (int n : {2, 3, 5}) {
        CAPTURE(n);
        const auto c = atc::roundabout(n, 2.0, 0.5, 1.0);
        CHECK(atc::min_separation(c) == doctest::Approx(2.0));
        CHECK(atc::flight_separation(c, 2 * std::numbers::pi / 0.5, 1e-2) >= 2.0 - 1e-6);
    }
}

TEST_CASE("non-tangential flight loses separation") {
    atc::Configuration c;
    c.omega = 0;
    c.p = 1;
    c.aircraft = {{0, 0, 1, 0}, {4, 0, -1, 0}};
    CHECK(atc::flight_separation(c, 3, 1e-2) < 1);
}

TEST_CASE("the proof does not depend on the number of aircraft") {
    const auto e = corpus_entry("atc_unbounded");
    CHECK(replay(e).report.verdict == ProofVerdict::Proved);
    for (int n : {2, 3, 5}) {
        CAPTURE(n);
        auto r = falsify_entry(e, n, 30);
        CHECK_FALSE(r.counterexample);
        CHECK(r.checked == 30);
    }
}

TEST_CASE("falsifier expectations of the corpus") {
    for (const auto& e : atc::load_corpus(corpus_dir())) {
        if (!e.falsifiable) continue;
        CAPTURE(e.name);
        auto r = falsify_entry(e, 2, *e.falsifiable ? e.samples : std::min<std::size_t>(e.samples, 60));
        CHECK(r.counterexample.has_value() == *e.falsifiable);
    }
}

TEST_CASE("proved corpus entries have no counterexample and open mutants do") {
    const auto e = corpus_entry("atc_unbounded_no_tangential");
    CHECK(replay(e).report.verdict == ProofVerdict::Open);
    auto r = falsify_entry(e, 2, e.samples);
    REQUIRE(r.counterexample);
    // the counterexample state meets the hypothesis it was sampled under
    const auto c = atc::from_state(r.counterexample->initial);
    CHECK(atc::min_separation(c) >= c.p);
}

}  // TEST_SUITE
