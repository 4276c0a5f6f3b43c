#include "qdtl/parser.hpp"

#include "qdtl/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <optional>

namespace qdtl {

const Conjecture* Theory::find(const std::string& name) const {
    for (const auto& c : conjectures)
        if (c.name == name) return &c;
    return nullptr;
}

namespace {

// ---------------------------------------------------------------- lexer

struct Token {
    enum Kind { Ident, Number, Sym, End } kind = End;
    std::string text;
    std::size_t begin = 0, end = 0;
};

class Lines {
public:
    Lines(const std::string& text, std::string file) : file_(std::move(file)) {
        starts_.push_back(0);
        for (std::size_t k = 0; k < text.size(); ++k)
            if (text[k] == '\n') starts_.push_back(k + 1);
    }

    SourceSpan span(std::size_t begin, std::size_t end) const {
        SourceSpan s;
        s.file = file_;
        s.begin = begin;
        s.end = end;
        locate(begin, s.line, s.column);
        locate(end, s.end_line, s.end_column);
        return s;
    }

private:
    void locate(std::size_t off, int& line, int& col) const {
        auto it = std::upper_bound(starts_.begin(), starts_.end(), off);
        const std::size_t row = static_cast<std::size_t>(it - starts_.begin()) - 1;
        line = static_cast<int>(row) + 1;
        col = static_cast<int>(off - starts_[row]) + 1;
    }

    std::string file_;
    std::vector<std::size_t> starts_;
};

const std::vector<std::string> kSymbols = {"==>", "<->", "<<", ">>", ":=", "->", "!=", ">=", "<=", "++", "(", ")",
                                           "[",   "]",   "{",  "}",  ",",  ";",  ":",  "'",  "=",  ">",  "<",  "&",
                                           "|",   "!",   "+",  "-",  "*",  "^",  "?"};

std::vector<Token> lex(const std::string& text, const Lines& lines) {
    std::vector<Token> out;
    std::size_t k = 0;
    while (k < text.size()) {
        const char c = text[k];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++k;
            continue;
        }
        if (c == '/' && k + 1 < text.size() && text[k + 1] == '/') {
            while (k < text.size() && text[k] != '\n') ++k;
            continue;
        }
        Token t;
        t.begin = k;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (k < text.size() && (std::isalnum(static_cast<unsigned char>(text[k])) || text[k] == '_')) ++k;
            t.kind = Token::Ident;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            auto digits = [&] {
                while (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) ++k;
            };
            auto decimal = [&] {
                digits();
                if (k + 1 < text.size() && text[k] == '.' && std::isdigit(static_cast<unsigned char>(text[k + 1]))) {
                    ++k;
                    digits();
                }
            };
            decimal();
            if (k + 1 < text.size() && text[k] == '/' && std::isdigit(static_cast<unsigned char>(text[k + 1]))) {
                ++k;
                decimal();
            }
            t.kind = Token::Number;
        } else {
            bool found = false;
            for (const auto& s : kSymbols) {
                if (text.compare(k, s.size(), s) == 0) {
                    k += s.size();
                    found = true;
                    break;
                }
            }
            if (!found)
                throw ParseError(ParseError::Kind::Syntax, std::string("unexpected character '") + c + "'",
                                 lines.span(k, k + 1));
            t.kind = Token::Sym;
        }
        t.end = k;
        t.text = text.substr(t.begin, t.end - t.begin);
        out.push_back(t);
    }
    Token end;
    end.kind = Token::End;
    end.begin = end.end = text.size();
    out.push_back(end);
    return out;
}

const std::set<std::string> kKeywords = {"forall", "exists", "box", "dia", "true", "false", "if", "then", "else", "fi",
                                         "new", "sort", "func", "rigid", "def", "prog", "conjecture"};
const std::set<std::string> kStatementKeywords = {"sort", "func", "rigid", "def", "prog", "conjecture"};

template <typename T>
std::shared_ptr<const T> spanned(const std::shared_ptr<const T>& node, const SourceSpan& span) {
    auto copy = std::make_shared<T>(*node);
    copy->span = span;
    return copy;
}

// ---------------------------------------------------------------- parser

class Parser {
public:
    Parser(const std::string& text, ParseContext& ctx) : lines_(text, ctx.file), ctx_(ctx) {
        toks_ = lex(text, lines_);
        for (const auto& v : ctx.free) scope_.push_back(v);
    }

    bool at_end() const { return peek().kind == Token::End; }

    void expect_end() {
        if (!at_end()) fail("unexpected '" + peek().text + "'");
    }

    // ------------------------------------------------ terms

    TermPtr expr() {
        const std::size_t start = pos_;
        TermPtr lhs = product();
        while (is("+") || is("-")) {
            const bool plus = next().text == "+";
            TermPtr rhs = product();
            lhs = spanned(plus ? make_add(lhs, rhs) : make_sub(lhs, rhs), span_from(start));
        }
        return lhs;
    }

    // ------------------------------------------------ formulas

    FormulaPtr formula() {
        const std::size_t start = pos_;
        FormulaPtr lhs = disjunction();
        if (is("->")) {
            next();
            return spanned(make_implies(lhs, formula()), span_from(start));
        }
        if (is("<->")) {
            next();
            return spanned(make_iff(lhs, formula()), span_from(start));
        }
        return lhs;
    }

    // ------------------------------------------------ programs

    ProgramPtr program() {
        const std::size_t start = pos_;
        ProgramPtr lhs = sequence();
        if (is("++")) {
            next();
            return spanned(make_choice(lhs, program()), span_from(start));
        }
        return lhs;
    }

    Sequent sequent() {
        std::vector<FormulaPtr> ante, succ;
        if (!is("==>")) {
            ante.push_back(formula());
            while (is(",")) {
                next();
                ante.push_back(formula());
            }
        }
        expect("==>");
        if (!at_end()) {
            succ.push_back(formula());
            while (is(",")) {
                next();
                succ.push_back(formula());
            }
        }
        return Sequent(std::move(ante), std::move(succ));
    }

    // ------------------------------------------------ theory files

    Theory theory() {
        Theory th;
        ctx_.macros = &th;
        while (!at_end()) {
            const std::size_t start = pos_;
            bool rigid = false;
            if (is_kw("rigid")) {
                next();
                rigid = true;
                if (!is_kw("func")) fail("expected 'func' after 'rigid'");
            }
            const std::string kw = peek().kind == Token::Ident ? peek().text : "";
            if (kw == "sort") {
                next();
                const std::string name = ident("sort name");
                if (name == kReal) fail("sort R is built in");
                ctx_.sig.add_sort(name);
                expect(";");
            } else if (kw == "func") {
                next();
                FunctionSymbol f;
                f.name = ident("function name");
                f.rigid = rigid;
                if (f.name == kExistence) fail("E is built in");
                if (ctx_.sig.has_function(f.name)) fail("function '" + f.name + "' declared twice");
                if (is("(")) {
                    next();
                    f.arg_sorts.push_back(sort_name());
                    while (is(",")) {
                        next();
                        f.arg_sorts.push_back(sort_name());
                    }
                    expect(")");
                }
                expect(":");
                f.result_sort = sort_name();
                ctx_.sig.add_function(f);
                expect(";");
            } else if (kw == "def") {
                next();
                const std::string name = ident("definition name");
                FormulaMacro m;
                if (is("(")) {
                    next();
                    do {
                        if (is(",")) next();
                        const std::string v = ident("parameter");
                        expect(":");
                        m.params.emplace_back(v, sort_name());
                    } while (is(","));
                    expect(")");
                }
                expect(":=");
                const std::size_t depth = scope_.size();
                for (const auto& p : m.params) scope_.push_back(p);
                m.body = checked(formula(), start);
                scope_.resize(depth);
                expect(";");
                th.defs[name] = m;
            } else if (kw == "prog") {
                next();
                const std::string name = ident("program name");
                expect(":=");
                ProgramPtr p = program();
                auto tc = check_types(p, ctx_.sig);
                if (!tc.ok()) type_error(tc, start);
                th.progs[name] = p;
                expect(";");
            } else if (kw == "conjecture") {
                next();
                const std::string name = ident("conjecture name");
                if (th.find(name)) fail("conjecture '" + name + "' declared twice");
                expect(":=");
                FormulaPtr f = checked(formula(), start);
                th.conjectures.push_back({name, f, span_from(start)});
                expect(";");
            } else {
                fail("expected a declaration (sort, func, def, prog, conjecture)");
            }
        }
        th.sig = ctx_.sig;
        ctx_.macros = nullptr;
        return th;
    }

    FormulaPtr checked(const FormulaPtr& f, std::size_t start) {
        auto tc = check_types(f, ctx_.sig);
        if (!tc.ok()) type_error(tc, start);
        return f;
    }

    [[noreturn]] void type_error(const TypeCheck& tc, std::size_t start) {
        const auto kind =
            tc.kind == TypeErrorKind::UnknownSymbol ? ParseError::Kind::UnknownSymbol : ParseError::Kind::Type;
        throw ParseError(kind, tc.message + " (at " + tc.path + ")", span_from(start));
    }

    SourceSpan span_from(std::size_t start_tok) const {
        const std::size_t last = pos_ > start_tok ? pos_ - 1 : start_tok;
        return lines_.span(toks_[start_tok].begin, toks_[last].end);
    }

private:
    // ------------------------------------------------ token helpers

    const Token& peek(std::size_t ahead = 0) const {
        return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
    }
    bool is(const std::string& sym, std::size_t ahead = 0) const {
        const auto& t = peek(ahead);
        return t.kind == Token::Sym && t.text == sym;
    }
    bool is_kw(const std::string& kw, std::size_t ahead = 0) const {
        const auto& t = peek(ahead);
        return t.kind == Token::Ident && t.text == kw;
    }
    Token next() {
        Token t = peek();
        if (pos_ < toks_.size() - 1) ++pos_;
        return t;
    }
    void expect(const std::string& sym) {
        if (!is(sym)) fail("expected '" + sym + "' but found '" + describe(peek()) + "'");
        next();
    }
    static std::string describe(const Token& t) { return t.kind == Token::End ? "end of input" : t.text; }

    [[noreturn]] void fail(const std::string& msg, ParseError::Kind k = ParseError::Kind::Syntax) const {
        const auto& t = peek();
        throw ParseError(k, msg, lines_.span(t.begin, std::max(t.end, t.begin)));
    }

    std::string ident(const std::string& what) {
        if (peek().kind != Token::Ident || kKeywords.count(peek().text))
            fail("expected " + what + " but found '" + describe(peek()) + "'");
        return next().text;
    }

    std::string sort_name() {
        const std::string s = ident("sort");
        if (!ctx_.sig.has_sort(s)) {
            if (!ctx_.infer) {
                --pos_;
                fail("unknown sort '" + s + "'", ParseError::Kind::UnknownSymbol);
            }
            ctx_.sig.add_sort(s);
        }
        return s;
    }

    const std::pair<std::string, std::string>* lookup_var(const std::string& name) const {
        for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
            if (it->first == name) return &*it;
        return nullptr;
    }

    std::vector<TermPtr> arg_list() {
        std::vector<TermPtr> out;
        expect("(");
        if (!is(")")) {
            out.push_back(expr());
            while (is(",")) {
                next();
                out.push_back(expr());
            }
        }
        expect(")");
        return out;
    }

    std::optional<FunctionSymbol> resolve_function(const std::string& name, const std::vector<TermPtr>& args,
                                                   std::size_t at) {
        const std::string first = args.empty() ? "" : args[0]->sort;
        auto f = ctx_.sig.find(name, first);
        if (f) return f;
        if (!ctx_.infer) {
            pos_ = at;
            fail("unknown function symbol '" + name + "'", ParseError::Kind::UnknownSymbol);
        }
        FunctionSymbol decl;
        decl.name = name;
        for (const auto& a : args) decl.arg_sorts.push_back(a->sort);
        decl.result_sort = kReal;
        ctx_.sig.add_function(decl);
        return decl;
    }

    // ------------------------------------------------ terms

    TermPtr product() {
        const std::size_t start = pos_;
        TermPtr lhs = unary();
        while (is("*")) {
            next();
            TermPtr rhs = unary();
            lhs = spanned(make_mul(lhs, rhs), span_from(start));
        }
        return lhs;
    }

    TermPtr unary() {
        const std::size_t start = pos_;
        if (is("-")) {
            next();
            TermPtr a = unary();
            return spanned(make_neg(a), span_from(start));
        }
        return power();
    }

    TermPtr power() {
        const std::size_t start = pos_;
        TermPtr base = primary();
        while (is("^")) {
            next();
            if (peek().kind != Token::Number || peek().text.find_first_of("./") != std::string::npos)
                fail("exponent must be a natural number literal");
            const unsigned e = static_cast<unsigned>(std::stoul(next().text));
            base = spanned(make_pow(base, e), span_from(start));
        }
        return base;
    }

    TermPtr primary() {
        const std::size_t start = pos_;
        const Token& t = peek();
        if (t.kind == Token::Number) {
            next();
            Rational q;
            try {
                q = parse_rational(t.text);
            } catch (const std::invalid_argument& e) {
                --pos_;
                fail(e.what());
            }
            return spanned(make_lit(q), span_from(start));
        }
        if (is("(")) {
            next();
            TermPtr inner = expr();
            expect(")");
            return inner;
        }
        if (is_kw("if")) {
            next();
            FormulaPtr c = formula();
            if (!is_kw("then")) fail("expected 'then'");
            next();
            TermPtr a = expr();
            if (!is_kw("else")) fail("expected 'else'");
            next();
            TermPtr b = expr();
            if (!is_kw("fi")) fail("expected 'fi'");
            next();
            return spanned(make_ite(c, a, b), span_from(start));
        }
        if (t.kind != Token::Ident || kKeywords.count(t.text)) fail("expected a term but found '" + describe(t) + "'");
        const std::string name = next().text;
        if (const auto* v = lookup_var(name)) {
            if (is("(")) fail("variable '" + name + "' applied to arguments");
            if (is("'")) fail("variable '" + name + "' has no differential symbol");
            return spanned(make_var(name, v->second), span_from(start));
        }
        std::vector<TermPtr> args;
        if (is("(")) args = arg_list();
        auto f = resolve_function(name, args, start);
        if (is("'")) {
            next();
            return spanned(make_prime(name, args), span_from(start));
        }
        return spanned(make_app(name, args, f->result_sort), span_from(start));
    }

    // ------------------------------------------------ formulas

    FormulaPtr disjunction() {
        const std::size_t start = pos_;
        FormulaPtr lhs = conjunction();
        while (is("|")) {
            next();
            FormulaPtr rhs = conjunction();
            lhs = spanned(make_or(lhs, rhs), span_from(start));
        }
        return lhs;
    }

    FormulaPtr conjunction() {
        const std::size_t start = pos_;
        FormulaPtr lhs = unary_formula();
        while (is("&")) {
            next();
            FormulaPtr rhs = unary_formula();
            lhs = spanned(make_and(lhs, rhs), span_from(start));
        }
        return lhs;
    }

    Temporal temporal() {
        if (is_kw("box")) {
            next();
            return Temporal::Always;
        }
        if (is_kw("dia")) {
            next();
            return Temporal::Eventually;
        }
        return Temporal::None;
    }

    ProgramPtr modal_program(const std::string& close) {
        ProgramPtr p = program();
        expect(close);
        try {
            return desugar_new(p, ctx_.sig);
        } catch (const DesugarError& e) {
            fail(e.what(), ParseError::Kind::Type);
        }
    }

    FormulaPtr unary_formula() {
        const std::size_t start = pos_;
        if (is("!")) {
            next();
            FormulaPtr a = unary_formula();
            return spanned(make_not(a), span_from(start));
        }
        if (is_kw("forall") || is_kw("exists")) {
            const bool all = next().text == "forall";
            const std::string v = ident("bound variable");
            expect(":");
            const std::string s = sort_name();
            scope_.emplace_back(v, s);
            FormulaPtr body = unary_formula();
            scope_.pop_back();
            return spanned(all ? make_forall(v, s, body) : make_exists(v, s, body), span_from(start));
        }
        if (is("[")) {
            next();
            ProgramPtr p = modal_program("]");
            const Temporal t = temporal();
            FormulaPtr body = unary_formula();
            return spanned(make_box(p, body, t), span_from(start));
        }
        if (is("<<")) {
            next();
            ProgramPtr p = modal_program(">>");
            const Temporal t = temporal();
            FormulaPtr body = unary_formula();
            return spanned(make_diamond(p, body, t), span_from(start));
        }
        return atom_formula();
    }

    static bool continues_term(const Token& t) {
        static const std::set<std::string> ops = {"+", "-", "*", "^", "=", "!=", ">=", "<=", ">", "<"};
        return t.kind == Token::Sym && ops.count(t.text);
    }

    FormulaPtr atom_formula() {
        const std::size_t start = pos_;
        if (is_kw("true")) {
            next();
            return spanned(make_true(), span_from(start));
        }
        if (is_kw("false")) {
            next();
            return spanned(make_false(), span_from(start));
        }
        if (is("(")) {
            // A parenthesis opens either a formula or the left term of a comparison.
            std::optional<ParseError> first_error;
            std::size_t first_reach = 0;
            try {
                next();
                FormulaPtr inner = formula();
                expect(")");
                if (!continues_term(peek())) return inner;
            } catch (const ParseError& e) {
                first_error = e;
                first_reach = pos_;
            }
            pos_ = start;
            try {
                return comparison();
            } catch (const ParseError& e) {
                if (first_error && first_reach > pos_) throw *first_error;
                throw;
            }
        }
        if (peek().kind == Token::Ident && ctx_.macros && !lookup_var(peek().text)) {
            auto it = ctx_.macros->defs.find(peek().text);
            if (it != ctx_.macros->defs.end()) return expand_macro(it->first, it->second, start);
        }
        return comparison();
    }

    FormulaPtr expand_macro(const std::string& name, const FormulaMacro& m, std::size_t start) {
        next();
        std::vector<TermPtr> args;
        if (!m.params.empty()) args = arg_list();
        if (args.size() != m.params.size())
            fail("'" + name + "' expects " + std::to_string(m.params.size()) + " arguments");
        for (std::size_t k = 0; k < args.size(); ++k)
            if (args[k]->sort != m.params[k].second) {
                pos_ = start;
                fail("argument " + std::to_string(k) + " of '" + name + "' must have sort " + m.params[k].second,
                     ParseError::Kind::Type);
            }
        FormulaPtr body = m.body;
        try {
            std::set<std::string> used = names_in(body);
            for (const auto& a : args)
                for (const auto& v : free_vars(a)) used.insert(v.first);
            std::vector<std::string> temps;
            for (const auto& p : m.params) {
                temps.push_back(fresh_name(p.first + "_arg", used));
                used.insert(temps.back());
                body = substitute(body, p.first, make_var(temps.back(), p.second));
            }
            for (std::size_t k = 0; k < args.size(); ++k) body = substitute(body, temps[k], args[k]);
        } catch (const SubstitutionError& e) {
            pos_ = start;
            fail(e.what(), ParseError::Kind::Type);
        }
        return spanned(body, span_from(start));
    }

    FormulaPtr comparison() {
        const std::size_t start = pos_;
        TermPtr a = expr();
        const Token op = peek();
        if (op.kind != Token::Sym) fail("expected a comparison operator but found '" + describe(op) + "'");
        static const std::set<std::string> ops = {"=", "!=", ">=", "<=", ">", "<"};
        if (!ops.count(op.text)) fail("expected a comparison operator but found '" + describe(op) + "'");
        next();
        TermPtr b = expr();
        FormulaPtr f;
        if (op.text == "=") f = make_eq(a, b);
        else if (op.text == "!=") f = make_neq(a, b);
        else if (op.text == ">=") f = make_geq(a, b);
        else if (op.text == "<=") f = make_leq(a, b);
        else if (op.text == ">") f = make_gt(a, b);
        else f = make_lt(a, b);
        return spanned(f, span_from(start));
    }

    // ------------------------------------------------ programs

    bool ends_statement(std::size_t ahead) const {
        const auto& t = peek(ahead);
        return t.kind == Token::End || (t.kind == Token::Ident && kStatementKeywords.count(t.text));
    }

    ProgramPtr sequence() {
        const std::size_t start = pos_;
        ProgramPtr lhs = loop();
        if (is(";") && !ends_statement(1)) {
            next();
            return spanned(make_seq(lhs, sequence()), span_from(start));
        }
        return lhs;
    }

    ProgramPtr loop() {
        const std::size_t start = pos_;
        ProgramPtr p = program_atom();
        while (is("*")) {
            next();
            p = spanned(make_loop(p), span_from(start));
        }
        return p;
    }

    ProgramPtr program_atom() {
        const std::size_t start = pos_;
        if (is("(")) {
            next();
            ProgramPtr inner = program();
            expect(")");
            return inner;
        }
        if (is("?")) {
            next();
            FormulaPtr c = formula();
            return spanned(make_test(c), span_from(start));
        }
        if (is_kw("forall")) {
            next();
            const std::string v = ident("bound variable");
            expect(":");
            const std::string s = sort_name();
            scope_.emplace_back(v, s);
            ProgramPtr p = clauses(v, s, start);
            scope_.pop_back();
            return p;
        }
        if (peek().kind == Token::Ident && is(":=", 1) && is_kw("new", 2)) {
            const std::string target = next().text;
            next();
            next();
            const std::string s = ident("sort");
            if (s != kReal && !ctx_.sig.has_sort(s)) {
                --pos_;
                fail("unknown sort '" + s + "'", ParseError::Kind::UnknownSymbol);
            }
            if (s == kReal) {
                --pos_;
                fail("new requires an object sort, not R", ParseError::Kind::Type);
            }
            if (!ctx_.sig.find(target)) {
                pos_ = start;
                fail("unknown function symbol '" + target + "'", ParseError::Kind::UnknownSymbol);
            }
            return spanned(make_new(target, s), span_from(start));
        }
        if (peek().kind == Token::Ident && ctx_.macros) {
            auto it = ctx_.macros->progs.find(peek().text);
            const bool clause_follows = is("(", 1) || is("'", 1) || is(":=", 1) || is("=", 1);
            if (it != ctx_.macros->progs.end() && !clause_follows) {
                next();
                return spanned(it->second, span_from(start));
            }
        }
        return clauses("", "", start);
    }

    ProgramPtr clauses(const std::string& var, const std::string& sort, std::size_t start) {
        std::vector<Clause> cs;
        std::optional<bool> ode;
        do {
            if (!cs.empty()) next();  // the comma
            const std::size_t cstart = pos_;
            Clause c;
            c.fn = ident("assigned function symbol");
            if (lookup_var(c.fn)) fail("cannot assign to the variable '" + c.fn + "'");
            if (is("(")) c.args = arg_list();
            resolve_function(c.fn, c.args, cstart);
            bool primed = false;
            if (is("'")) {
                next();
                primed = true;
            }
            bool is_ode;
            if (is(":=")) {
                is_ode = false;
            } else if (is("=")) {
                if (!primed) fail("differential equation needs a primed left-hand side");
                is_ode = true;
            } else {
                fail("expected ':=' or '=' in program");
            }
            next();
            if (ode && *ode != is_ode) fail("assignments and differential equations cannot share one clause list");
            ode = is_ode;
            c.primed = is_ode ? false : primed;
            c.rhs = expr();
            cs.push_back(std::move(c));
        } while (is(","));
        FormulaPtr domain;
        if (*ode && is("&")) {
            next();
            domain = formula();
        }
        ProgramPtr p = *ode ? make_ode(var, sort, std::move(cs), domain) : make_assign(var, sort, std::move(cs));
        return spanned(p, span_from(start));
    }

    Lines lines_;
    ParseContext& ctx_;
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::vector<std::pair<std::string, std::string>> scope_;
};

template <typename F>
auto run(const std::string& text, ParseContext& ctx, F&& body) {
    Parser p(text, ctx);
    auto result = body(p);
    p.expect_end();
    return result;
}

}  // namespace

Theory parse_theory(const std::string& text, const std::string& file) {
    ParseContext ctx;
    ctx.file = file;
    Parser p(text, ctx);
    return p.theory();
}

TermPtr parse_term(const std::string& text, ParseContext& ctx) {
    return run(text, ctx, [&](Parser& p) {
        TermPtr t = p.expr();
        auto tc = check_types(t, ctx.sig);
        if (!tc.ok()) p.type_error(tc, 0);
        return t;
    });
}

FormulaPtr parse_formula(const std::string& text, ParseContext& ctx) {
    return run(text, ctx, [&](Parser& p) { return p.checked(p.formula(), 0); });
}

ProgramPtr parse_program(const std::string& text, ParseContext& ctx) {
    return run(text, ctx, [&](Parser& p) {
        ProgramPtr prog = p.program();
        auto tc = check_types(prog, ctx.sig);
        if (!tc.ok()) p.type_error(tc, 0);
        try {
            return desugar_new(prog, ctx.sig);
        } catch (const DesugarError& e) {
            throw ParseError(ParseError::Kind::Type, e.what(), p.span_from(0));
        }
    });
}

Sequent parse_sequent(const std::string& text, ParseContext& ctx) {
    return run(text, ctx, [&](Parser& p) {
        Sequent s = p.sequent();
        for (const auto& f : s.ante) p.checked(f, 0);
        for (const auto& f : s.succ) p.checked(f, 0);
        return s;
    });
}

TermPtr parse_term(const std::string& text) {
    ParseContext ctx;
    ctx.infer = true;
    return parse_term(text, ctx);
}

FormulaPtr parse_formula(const std::string& text) {
    ParseContext ctx;
    ctx.infer = true;
    return parse_formula(text, ctx);
}

ProgramPtr parse_program(const std::string& text) {
    ParseContext ctx;
    ctx.infer = true;
    return parse_program(text, ctx);
}

// ---------------------------------------------------------------- proof scripts

std::string Position::text() const {
    std::string out = (succedent ? "R" : "L") + std::to_string(index);
    for (auto k : subpath) out += "." + std::to_string(k);
    return out;
}

std::string path_text(const GoalPath& p) {
    std::string out = "@";
    for (std::size_t k = 0; k < p.size(); ++k) out += (k ? "." : "") + std::to_string(p[k]);
    return out;
}

namespace {

struct ScriptToken {
    std::string text;
    bool braced = false;
    std::size_t begin = 0, end = 0;
};

std::optional<std::vector<std::size_t>> dotted_numbers(const std::string& s) {
    std::vector<std::size_t> out;
    if (s.empty()) return out;
    std::size_t k = 0;
    while (true) {
        const std::size_t b = k;
        while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
        if (k == b || k - b > 6) return std::nullopt;
        out.push_back(std::stoul(s.substr(b, k - b)));
        if (k == s.size()) return out;
        if (s[k] != '.') return std::nullopt;
        ++k;
    }
}

std::string catalog_listing() {
    std::string out;
    for (const auto& r : rule_catalog()) out += (out.empty() ? "" : " ") + r.id;
    return out;
}

}  // namespace

std::vector<ProofScript> parse_proof_scripts(const std::string& text, const std::string& file) {
    Lines lines(text, file);
    std::vector<ScriptToken> toks;
    std::size_t k = 0;
    while (k < text.size()) {
        const char c = text[k];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++k;
            continue;
        }
        if (c == '/' && k + 1 < text.size() && text[k + 1] == '/') {
            while (k < text.size() && text[k] != '\n') ++k;
            continue;
        }
        ScriptToken t;
        t.begin = k;
        if (c == '{') {
            int depth = 0;
            std::size_t j = k;
            for (; j < text.size(); ++j) {
                if (text[j] == '{') ++depth;
                if (text[j] == '}' && --depth == 0) break;
            }
            if (j >= text.size())
                throw ParseError(ParseError::Kind::Syntax, "unterminated '{'", lines.span(k, k + 1));
            t.text = text.substr(k + 1, j - k - 1);
            t.braced = true;
            t.begin = k + 1;
            t.end = j;
            k = j + 1;
        } else if (c == '}') {
            throw ParseError(ParseError::Kind::Syntax, "unmatched '}'", lines.span(k, k + 1));
        } else {
            while (k < text.size() && !std::isspace(static_cast<unsigned char>(text[k])) && text[k] != '{') ++k;
            t.text = text.substr(t.begin, k - t.begin);
            t.end = k;
        }
        toks.push_back(t);
    }

    std::vector<ProofScript> out;
    std::size_t i = 0;
    auto err = [&](const std::string& msg, const ScriptToken& t) -> ParseError {
        return ParseError(ParseError::Kind::Syntax, msg, lines.span(t.begin, t.end));
    };
    while (i < toks.size()) {
        if (toks[i].braced || toks[i].text != "proof") throw err("expected 'proof'", toks[i]);
        if (i + 1 >= toks.size() || toks[i + 1].braced) throw err("expected a conjecture name after 'proof'", toks[i]);
        ProofScript script;
        script.conjecture = toks[i + 1].text;
        const std::size_t proof_begin = toks[i].begin;
        i += 2;
        bool closed = false;
        while (i < toks.size()) {
            const auto& t = toks[i];
            if (!t.braced && t.text == "end") {
                script.span = lines.span(proof_begin, t.end);
                ++i;
                closed = true;
                break;
            }
            if (t.braced || t.text.empty() || t.text[0] != '@') throw err("expected a goal path '@...'", t);
            ScriptCommand cmd;
            auto path = dotted_numbers(t.text.substr(1));
            if (!path) throw err("malformed goal path '" + t.text + "'", t);
            cmd.goal = *path;
            ++i;
            if (i >= toks.size() || toks[i].braced) throw err("expected a rule name", t);
            const auto& rt = toks[i];
            cmd.rule = rt.text;
            if (cmd.rule != "show" && !find_rule(cmd.rule))
                throw err("unknown rule '" + cmd.rule + "' (nearest: " + nearest_rule(cmd.rule) +
                              "); catalog: " + catalog_listing(),
                          rt);
            ++i;
            std::size_t last_end = rt.end;
            while (i < toks.size()) {
                const auto& a = toks[i];
                if (a.braced) {
                    cmd.args.push_back({a.text, lines.span(a.begin, a.end)});
                } else if (a.text == "end" || (!a.text.empty() && a.text[0] == '@')) {
                    break;
                } else if (a.text[0] == '+') {
                    auto extra = dotted_numbers(a.text.substr(1));
                    if (!extra) throw err("malformed goal path '" + a.text + "'", a);
                    cmd.extra_goals.push_back(*extra);
                } else if (a.text[0] == 'L' || a.text[0] == 'R') {
                    auto nums = dotted_numbers(a.text.substr(1));
                    if (!nums || nums->empty()) throw err("malformed position '" + a.text + "'", a);
                    Position p;
                    p.succedent = a.text[0] == 'R';
                    p.index = nums->front();
                    p.subpath.assign(nums->begin() + 1, nums->end());
                    cmd.positions.push_back(p);
                } else {
                    throw err("unexpected '" + a.text + "' in command", a);
                }
                last_end = a.end;
                ++i;
            }
            cmd.span = lines.span(t.begin, last_end);
            script.commands.push_back(std::move(cmd));
        }
        if (!closed) throw err("missing 'end' for proof " + script.conjecture, toks.back());
        out.push_back(std::move(script));
    }
    return out;
}

}  // namespace qdtl
