#include "qdtl/sequent.hpp"

#include <algorithm>

namespace qdtl {

namespace {
void canonical(std::vector<FormulaPtr>& side) {
    std::vector<std::pair<std::string, FormulaPtr>> keyed;
    keyed.reserve(side.size());
    for (auto& f : side) keyed.emplace_back(to_string(f), f);
    std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    side.clear();
    for (std::size_t k = 0; k < keyed.size(); ++k) {
        if (k > 0 && keyed[k].first == keyed[k - 1].first) continue;
        side.push_back(keyed[k].second);
    }
}
}  // namespace

void Sequent::canonicalize() {
    canonical(ante);
    canonical(succ);
}

bool Sequent::operator==(const Sequent& o) const {
    if (ante.size() != o.ante.size() || succ.size() != o.succ.size()) return false;
    for (std::size_t k = 0; k < ante.size(); ++k)
        if (!equal(ante[k], o.ante[k])) return false;
    for (std::size_t k = 0; k < succ.size(); ++k)
        if (!equal(succ[k], o.succ[k])) return false;
    return true;
}

FormulaPtr Sequent::as_formula() const {
    FormulaPtr rhs = make_disj(succ);
    if (ante.empty()) return rhs;
    return make_implies(make_conj(ante), rhs);
}

std::string to_string(const Sequent& s) {
    std::string out;
    for (std::size_t k = 0; k < s.ante.size(); ++k) {
        if (k) out += ", ";
        out += to_string(s.ante[k]);
    }
    out += out.empty() ? "==>" : " ==>";
    for (std::size_t k = 0; k < s.succ.size(); ++k) out += (k ? ", " : " ") + to_string(s.succ[k]);
    return out;
}

}  // namespace qdtl
