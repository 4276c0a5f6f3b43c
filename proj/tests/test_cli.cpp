#include "properties.hpp"

#include <doctest.h>

#include <array>
#include <cstdio>
#include <sys/wait.h>

using namespace qdtl::testing;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

/// Runs the command line tool with stderr folded into the captured output.
Run run(const std::string& args) {
    const std::string cmd = std::string(QDTL_CLI_PATH) + " " + args + " 2>&1";
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe);
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string corpus(const std::string& file) { return (corpus_dir() / file).string(); }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("a proved conjecture exits 0") {
    auto r = run(corpus("atc_unbounded.qdtl") + " " + corpus("atc_unbounded.qpf"));
    CHECK(r.code == 0);
    CHECK(r.out.find("proved") != std::string::npos);
}

TEST_CASE("an open proof exits 1") {
    auto r = run(corpus("atc_bounded_no_eta.qdtl") + " " + corpus("atc_bounded.qpf"));
    CHECK(r.code == 1);
    CHECK(r.out.find("open") != std::string::npos);
}

TEST_CASE("a misspelled rule exits 2 and names the nearest rule") {
    const std::string path = "cli_typo.qpf";
    {
        std::ofstream o(path);
        o << "proof atc_unbounded\n  @ [']bx R0\n";
    }
    auto r = run(corpus("atc_unbounded.qdtl") + " " + path);
    CHECK(r.code == 2);
    CHECK(r.out.find("nearest: [']box") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("usage and input errors exit 2") {
    CHECK(run("--mode nonsense x").code == 2);
    CHECK(run("missing.qdtl missing.qpf").code == 2);
    CHECK(run("--mode falsify --sampler atc --samples 0 " + corpus("atc_unbounded.qdtl")).code == 2);
}

TEST_CASE("a counterexample exits 3 and is written out") {
    const std::string out = "cli_counterexample.json";
    auto r = run("--mode falsify --sampler atc-free --samples 50 --step 0.01 --out " + out + " " +
                 corpus("atc_unbounded_no_tangential.qdtl"));
    CHECK(r.code == 3);
    CHECK(r.out.find("counterexample") != std::string::npos);
    auto doc = nlohmann::json::parse(read_file(out));
    CHECK(doc.at("conjecture") == "atc_unbounded");
    std::remove(out.c_str());
}

TEST_CASE("no counterexample exits 0") {
    auto r = run("--mode falsify --sampler atc --samples 20 --step 0.01 " + corpus("atc_unbounded.qdtl"));
    CHECK(r.code == 0);
}

TEST_CASE("json reports are byte-identical across runs and worker counts") {
    const std::string args = "--format json " + corpus("atc_bounded.qdtl") + " " + corpus("atc_bounded.qpf");
    auto a = run(args), b = run(args), c = run("--jobs 3 " + args);
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out == c.out);
    CHECK_FALSE(nlohmann::json::parse(a.out, nullptr, false).is_discarded());
    const std::string fargs = "--mode falsify --format json --sampler atc-free --samples 50 --step 0.01 " +
                              corpus("atc_unbounded_no_tangential.qdtl");
    auto f1 = run(fargs), f2 = run(fargs);
    CHECK(f1.code == 3);
    CHECK(f1.out == f2.out);
}

TEST_CASE("parse-only lists the conjectures") {
    auto r = run("--mode parse-only " + corpus("atc_new.qdtl") + " " + corpus("atc_new.qpf"));
    CHECK(r.code == 0);
    CHECK(r.out.find("conjecture atc_new") != std::string::npos);
    CHECK(r.out.find("proof atc_new") != std::string::npos);
}

}  // TEST_SUITE
