#pragma once

// Roundabout collision-avoidance case study: corpus manifests, numeric
// configurations solving the tangential condition, and a state sampler.

#include "qdtl/sim.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace qdtl::atc {

/// One corpus entry as described by its manifest file.
struct CorpusEntry {
    std::string name;
    std::filesystem::path theory;
    std::filesystem::path script;   // empty for falsification-only entries
    std::string conjecture;
    std::string expected;           // "proved" or "open"
    std::size_t max_rule_applications = 0;  // 0: no bound
    double max_seconds = 0;
    /// Falsifier expectations; unset when the entry is not simulated.
    std::optional<bool> falsifiable;
    std::size_t samples = 200;
    std::string sampler = "uniform";  // uniform | atc | atc-free
};

/// Reads every *.json manifest of the directory, sorted by file name.
std::vector<CorpusEntry> load_corpus(const std::filesystem::path& dir);

struct Aircraft {
    double x1 = 0, x2 = 0, d1 = 0, d2 = 0;
};

struct Configuration {
    double omega = 1;
    double p = 1;
    std::vector<Aircraft> aircraft;
};

/// Velocities solving the tangential condition for the given positions:
/// d(i) = omega * rot90(x(i)) + common, which makes every pairwise difference
/// of velocities the rotated difference of positions.
void solve_tangential(Configuration& c, double common1 = 0, double common2 = 0);

/// n aircraft evenly spaced on a circle whose chord between neighbours is
/// margin * p, with tangential velocities.
Configuration roundabout(int n, double p, double omega, double margin = 1.0);

/// Smallest distance between distinct aircraft.
double min_separation(const Configuration& c);

/// Simulator state over sort A for the corpus signature.
sim::State to_state(const Configuration& c);
/// Reads the aircraft back from a state.
Configuration from_state(const sim::State& s);

struct SamplerOptions {
    int objects = 2;
    /// Velocities solve the tangential condition; otherwise they are random.
    bool tangential = true;
    double area = 20;
    double speed = 3;
};

/// States satisfying the separation hypothesis by construction.
sim::StateSampler sampler(const SamplerOptions& opt);

/// Sampler by name: uniform over the signature, atc (tangential aircraft) or
/// atc-free (random velocities). Throws std::invalid_argument otherwise.
sim::StateSampler named_sampler(const std::string& name, const Signature& sig, int objects, double range);

/// Minimal separation along a simulated flight of the given duration.
double flight_separation(const Configuration& c, double duration, double step = 1e-3);

}  // namespace qdtl::atc
