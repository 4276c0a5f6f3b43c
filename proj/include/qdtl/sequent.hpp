#pragma once

#include "qdtl/printer.hpp"
#include "qdtl/syntax.hpp"

#include <string>
#include <vector>

namespace qdtl {

/// Γ ==> Δ with set semantics. Both sides are kept sorted by printed text and
/// free of duplicates, so positions L0, R1, ... are stable.
struct Sequent {
    std::vector<FormulaPtr> ante;
    std::vector<FormulaPtr> succ;

    Sequent() = default;
    Sequent(std::vector<FormulaPtr> a, std::vector<FormulaPtr> s) : ante(std::move(a)), succ(std::move(s)) {
        canonicalize();
    }

    void canonicalize();
    bool operator==(const Sequent& o) const;
    /// The formula  ∧Γ → ∨Δ.
    FormulaPtr as_formula() const;
};

std::string to_string(const Sequent& s);

}  // namespace qdtl
