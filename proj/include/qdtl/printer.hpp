#pragma once

#include "qdtl/syntax.hpp"

#include <string>

namespace qdtl {

// Concrete syntax accepted by the parser; printing then parsing gives back an equal AST.
std::string to_string(const TermPtr& t);
std::string to_string(const FormulaPtr& f);
std::string to_string(const ProgramPtr& p);

}  // namespace qdtl
