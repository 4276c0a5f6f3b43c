#include "qdtl/catalog.hpp"

#include "qdtl/hash.hpp"

#include <algorithm>
#include <limits>

namespace qdtl {

const std::vector<RuleInfo>& rule_catalog() {
    static const std::vector<RuleInfo> rules = {
        {"ax", "propositional", "close when a formula is on both sides"},
        {"notr", "propositional", "!p on the right moves p to the left"},
        {"notl", "propositional", "!p on the left moves p to the right"},
        {"andr", "propositional", "split a conjunction on the right"},
        {"andl", "propositional", "split a conjunction on the left"},
        {"cut", "propositional", "cut in the formula given as argument"},
        {"[;]", "program", "[a;b]p becomes [a][b]p"},
        {"<;>", "program", "<<a;b>>p becomes <<a>><<b>>p"},
        {"[++]", "program", "[a++b]p becomes [a]p & [b]p"},
        {"<++>", "program", "<<a++b>>p becomes <<a>>p | <<b>>p"},
        {"[?]", "program", "[?c]p becomes c -> p"},
        {"<?>", "program", "<<?c>>p becomes c & p"},
        {"[']", "program", "replace an ODE by its polynomial solution"},
        {"<'>", "program", "replace an ODE by its polynomial solution"},
        {"[:=]", "program", "substitute a quantified assignment into the postcondition"},
        {"<:=>", "program", "substitute a quantified assignment into the postcondition"},
        {"skip", "program", "move an assignment past a symbol it does not write"},
        {"[:*]", "program", "nondeterministic object assignment, universal"},
        {"<:*>", "program", "nondeterministic object assignment, existential"},
        {"ex", "program", "a fresh object exists"},
        {"allr", "quantifier", "skolemize a universal on the right"},
        {"existsr", "quantifier", "instantiate an existential on the right"},
        {"alll", "quantifier", "instantiate a universal on the left"},
        {"existsl", "quantifier", "skolemize an existential on the left"},
        {"iall", "quantifier", "unify two applications of one symbol under real quantifiers"},
        {"iexists", "quantifier", "merge goals under one existential real variable"},
        {"[]gen", "global", "generalize under a box"},
        {"<>gen", "global", "generalize under a diamond"},
        {"ind", "global", "loop induction with an invariant"},
        {"con", "global", "loop convergence with a variant"},
        {"DI", "differential", "differential invariant"},
        {"DC", "differential", "differential cut"},
        {"[++]box", "temporal", "always over a choice"},
        {"<++>dia", "temporal", "eventually over a choice"},
        {"[;]box", "temporal", "always over a sequence"},
        {"<;>dia", "temporal", "eventually over a sequence"},
        {"[?]box", "temporal", "always over a test"},
        {"<?>dia", "temporal", "eventually over a test"},
        {"[:=]box", "temporal", "always over an assignment"},
        {"<:=>dia", "temporal", "eventually over an assignment"},
        {"[']box", "temporal", "always over an ODE"},
        {"<'>dia", "temporal", "eventually over an ODE"},
        {"[*n]box", "temporal", "unwind a loop once under always"},
        {"<*n>dia", "temporal", "unwind a loop once under eventually"},
        {"[*]box", "temporal", "always over a loop via its iterations"},
        {"<*>dia", "temporal", "eventually over a loop via its iterations"},
        {"[;]dia", "liveness", "eventually along every terminating trace of a sequence"},
        {"[a]dia", "liveness", "eventually along every terminating trace, by monitoring"},
        {"R", "arithmetic", "real arithmetic oracle"},
    };
    return rules;
}

const RuleInfo* find_rule(const std::string& id) {
    for (const auto& r : rule_catalog())
        if (r.id == id) return &r;
    return nullptr;
}

namespace {
std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}
}  // namespace

std::string nearest_rule(const std::string& id) {
    std::string best;
    std::size_t best_d = std::numeric_limits<std::size_t>::max();
    for (const auto& r : rule_catalog()) {
        const std::size_t d = edit_distance(id, r.id);
        if (d < best_d) {
            best_d = d;
            best = r.id;
        }
    }
    return best;
}

std::string catalog_hash() {
    std::string text;
    for (const auto& r : rule_catalog()) text += r.id + "\t" + r.family + "\t" + r.summary + "\n";
    // bumped whenever a rule's premises change shape
    text += "revision 1\n";
    return sha256_hex(text);
}

}  // namespace qdtl
