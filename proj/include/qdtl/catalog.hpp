#pragma once

#include <string>
#include <vector>

namespace qdtl {

struct RuleInfo {
    std::string id;
    std::string family;  // propositional, program, temporal, quantifier, global, differential, arithmetic
    std::string summary;
};

const std::vector<RuleInfo>& rule_catalog();
const RuleInfo* find_rule(const std::string& id);
/// Catalog id closest in edit distance to `id`.
std::string nearest_rule(const std::string& id);
/// SHA-256 over the catalog text, in hex.
std::string catalog_hash();

}  // namespace qdtl
