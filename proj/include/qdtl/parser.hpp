#pragma once

#include "qdtl/sequent.hpp"
#include "qdtl/syntax.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdtl {

class ParseError : public std::runtime_error {
public:
    enum class Kind { Syntax, UnknownSymbol, Type };
    ParseError(Kind k, const std::string& message, SourceSpan span)
        : std::runtime_error(format(message, span)), kind(k), span(std::move(span)), detail(message) {}

    Kind kind;
    SourceSpan span;
    std::string detail;

private:
    static std::string format(const std::string& message, const SourceSpan& s) {
        if (!s.valid()) return message;
        return s.file + ":" + std::to_string(s.line) + ":" + std::to_string(s.column) + ": " + message;
    }
};

struct FormulaMacro {
    std::vector<std::pair<std::string, std::string>> params;  // (name, sort)
    FormulaPtr body;
};

struct Conjecture {
    std::string name;
    FormulaPtr formula;
    SourceSpan span;
};

/// Contents of a .qdtl file.
struct Theory {
    Signature sig;
    std::map<std::string, FormulaMacro> defs;
    std::map<std::string, ProgramPtr> progs;
    std::vector<Conjecture> conjectures;

    const Conjecture* find(const std::string& name) const;
};

struct ParseContext {
    Signature sig;
    /// Undeclared sorts and functions are declared on first use (result sort R).
    bool infer = false;
    const Theory* macros = nullptr;
    /// Free variables the text may mention.
    VarSet free;
    std::string file = "<input>";
};

Theory parse_theory(const std::string& text, const std::string& file = "<input>");

TermPtr parse_term(const std::string& text, ParseContext& ctx);
FormulaPtr parse_formula(const std::string& text, ParseContext& ctx);
ProgramPtr parse_program(const std::string& text, ParseContext& ctx);
Sequent parse_sequent(const std::string& text, ParseContext& ctx);

// Convenience forms with symbol inference and no macros.
TermPtr parse_term(const std::string& text);
FormulaPtr parse_formula(const std::string& text);
ProgramPtr parse_program(const std::string& text);

// ---------------------------------------------------------------- proof scripts

/// A formula position: side, index after canonical ordering, and a path of
/// child indices inside the formula.
struct Position {
    bool succedent = true;
    std::size_t index = 0;
    std::vector<std::size_t> subpath;

    std::string text() const;
};

using GoalPath = std::vector<std::size_t>;
std::string path_text(const GoalPath& p);

struct ScriptArg {
    std::string text;
    SourceSpan span;
};

struct ScriptCommand {
    GoalPath goal;
    std::string rule;  // catalog id, or "show" for a checkpoint
    std::vector<Position> positions;
    std::vector<GoalPath> extra_goals;
    std::vector<ScriptArg> args;
    SourceSpan span;
};

struct ProofScript {
    std::string conjecture;
    std::vector<ScriptCommand> commands;
    SourceSpan span;
};

/// A .qpf file may hold several proofs. Unknown rule names and malformed
/// paths are syntax errors.
std::vector<ProofScript> parse_proof_scripts(const std::string& text, const std::string& file = "<input>");

}  // namespace qdtl
