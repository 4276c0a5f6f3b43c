#include "qdtl/calculus.hpp"

#include "qdtl/catalog.hpp"
#include "qdtl/printer.hpp"

#include <algorithm>
#include <atomic>
#include <set>
#include <thread>

namespace qdtl {

std::string verdict_text(ProofVerdict v) {
    switch (v) {
        case ProofVerdict::Proved: return "proved";
        case ProofVerdict::Open: return "open";
        case ProofVerdict::Error: return "error";
    }
    return "?";
}

namespace {

ProofNode* find_node(ProofNode& root, const GoalPath& path, bool& behind_stuck) {
    ProofNode* cur = &root;
    behind_stuck = false;
    for (auto k : path) {
        if (cur->stuck || cur->closed) {
            behind_stuck = cur->stuck;
            return nullptr;
        }
        if (k >= cur->children.size()) return nullptr;
        cur = &cur->children[k];
    }
    return cur;
}

void open_leaves(ProofNode& n, std::vector<ProofNode*>& out) {
    if (n.children.empty()) {
        if (!n.closed) out.push_back(&n);
        return;
    }
    for (auto& c : n.children) open_leaves(c, out);
}

void count_rules(const ProofNode& n, std::size_t& count, std::set<std::string>& used) {
    if (!n.rule.empty() && (n.closed || !n.children.empty())) {
        ++count;
        used.insert(n.rule);
    }
    for (const auto& c : n.children) count_rules(c, count, used);
}

void attach(ProofNode& node, const std::string& rule, const RuleApplication& app, const RuleResult& r) {
    node.rule = rule;
    node.positions = app.positions;
    node.args = app.args;
    node.method = r.method;
    node.note = r.note;
    node.closed = r.premises.empty();
    for (std::size_t k = 0; k < r.premises.size(); ++k) {
        ProofNode c;
        c.sequent = r.premises[k];
        c.path = node.path;
        c.path.push_back(k);
        c.provenance = rule;
        node.children.push_back(std::move(c));
    }
}

void record(OracleStats& s, const OracleResult& r) {
    ++s.calls;
    if (r.verdict == Verdict::Valid) {
        ++s.valid;
        ++s.methods[method_name(r.method)];
    } else if (r.verdict == Verdict::Invalid) {
        ++s.invalid;
    } else {
        ++s.unknown;
    }
}

std::string oracle_note(const OracleResult& r) {
    std::string msg = "oracle " + verdict_name(r.verdict);
    if (!r.diagnostic.empty()) msg += ": " + r.diagnostic;
    return msg;
}

}  // namespace

ProofReport check_proof(const Theory& theory, const ProofScript& script, const CheckOptions& opt) {
    ProofReport rep;
    rep.conjecture = script.conjecture;
    const Conjecture* conj = theory.find(script.conjecture);
    if (!conj) {
        rep.error = "no conjecture named '" + script.conjecture + "'";
        return rep;
    }
    ProofContext ctx;
    ctx.sig = theory.sig;
    ctx.theory = &theory;
    ctx.oracle = opt.oracle;
    rep.root.sequent = root_goal(conj->formula, theory.sig);
    rep.root.provenance = "conjecture";

    auto fail = [&](const GoalPath& path, const std::string& msg, const SourceSpan& span) {
        rep.verdict = ProofVerdict::Error;
        rep.error_path = path;
        rep.error = (span.valid() ? span.file + ":" + std::to_string(span.line) + ": " : std::string()) + path_text(path) +
                    ": " + msg;
    };

    std::vector<ProofNode*> deferred;
    for (const auto& cmd : script.commands) {
        bool behind_stuck = false;
        ProofNode* node = find_node(rep.root, cmd.goal, behind_stuck);
        if (!node) {
            if (behind_stuck) continue;
            fail(cmd.goal, "no open goal at this path", cmd.span);
            return rep;
        }
        if (node->stuck) continue;
        if (!node->rule.empty() || node->closed || !node->children.empty()) {
            fail(cmd.goal, "goal already has a rule applied", cmd.span);
            return rep;
        }
        if (cmd.rule == "show") {
            ParseContext pc;
            pc.sig = ctx.sig;
            pc.macros = &theory;
            pc.file = cmd.span.file;
            for (const auto& f : node->sequent.ante)
                for (const auto& v : free_vars(f)) pc.free.insert(v);
            for (const auto& f : node->sequent.succ)
                for (const auto& v : free_vars(f)) pc.free.insert(v);
            if (cmd.args.empty()) {
                fail(cmd.goal, "show needs a sequent", cmd.span);
                return rep;
            }
            Sequent expected;
            try {
                expected = parse_sequent(cmd.args[0].text, pc);
            } catch (const ParseError& e) {
                fail(cmd.goal, std::string("checkpoint does not parse: ") + e.what(), cmd.span);
                return rep;
            }
            if (!(expected == node->sequent)) {
                node->stuck = true;
                node->note = "checkpoint mismatch: expected " + to_string(expected) + " but the goal is " +
                             to_string(node->sequent);
            }
            continue;
        }
        RuleApplication app{cmd.rule, cmd.positions, {}};
        for (const auto& a : cmd.args) app.args.push_back(a.text);
        if (cmd.rule == "R" && app.args.empty()) {
            node->rule = "R";
            deferred.push_back(node);
            continue;
        }
        try {
            if (cmd.rule == "iexists") {
                if (app.args.empty()) throw RuleError(RuleError::Kind::Argument, "iexists needs a variable");
                std::vector<ProofNode*> group{node};
                for (const auto& p : cmd.extra_goals) {
                    bool stuck = false;
                    ProofNode* other = find_node(rep.root, p, stuck);
                    if (!other || other->closed || !other->children.empty() || !other->rule.empty() || other->stuck)
                        throw RuleError(RuleError::Kind::Argument, "iexists: no open goal at " + path_text(p));
                    if (std::find(group.begin(), group.end(), other) != group.end())
                        throw RuleError(RuleError::Kind::Argument, "iexists: goal listed twice");
                    group.push_back(other);
                }
                std::vector<ProofNode*> leaves;
                open_leaves(rep.root, leaves);
                std::vector<Sequent> goals, others;
                for (auto* g : group) goals.push_back(g->sequent);
                for (auto* l : leaves)
                    if (std::find(group.begin(), group.end(), l) == group.end() && l->rule.empty())
                        others.push_back(l->sequent);
                Sequent premise = apply_iexists(ctx, goals, app.args[0], others);
                RuleResult r;
                r.premises.push_back(premise);
                attach(*node, cmd.rule, app, r);
                for (std::size_t k = 1; k < group.size(); ++k) {
                    group[k]->closed = true;
                    group[k]->rule = "iexists";
                    group[k]->note = "merged into " + path_text(node->path);
                }
                continue;
            }
            RuleResult r = apply_rule(ctx, node->sequent, app);
            if (cmd.rule == "R") {
                OracleResult ok;
                ok.verdict = Verdict::Valid;
                ok.method = r.method;
                record(rep.oracle, ok);
            }
            attach(*node, cmd.rule, app, r);
        } catch (const RuleError& e) {
            fail(cmd.goal, cmd.rule + ": " + rule_error_kind(e.kind) + ": " + e.what(), cmd.span);
            return rep;
        } catch (const OracleFailure& e) {
            record(rep.oracle, e.result);
            node->stuck = true;
            node->note = e.what();
        }
    }

    // Closing oracle calls are independent; results are merged by position in the list.
    std::vector<OracleResult> results(deferred.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < deferred.size(); k = next++)
            results[k] = decide_universal(deferred[k]->sequent.as_formula(), opt.oracle);
    };
    const int jobs = std::max(1, std::min<int>(opt.jobs, static_cast<int>(deferred.size())));
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < jobs; ++k) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (std::size_t k = 0; k < deferred.size(); ++k) {
        ProofNode* node = deferred[k];
        record(rep.oracle, results[k]);
        if (results[k].verdict == Verdict::Valid) {
            node->closed = true;
            node->method = results[k].method;
            node->note = method_name(results[k].method);
        } else {
            node->rule.clear();
            node->stuck = true;
            node->note = "R: " + oracle_note(results[k]);
        }
    }

    std::set<std::string> used;
    count_rules(rep.root, rep.rule_applications, used);
    rep.rules_used.assign(used.begin(), used.end());
    std::vector<ProofNode*> leaves;
    open_leaves(rep.root, leaves);
    for (auto* l : leaves) {
        OpenGoal g;
        g.path = l->path;
        g.sequent = to_string(l->sequent);
        g.diagnostic = l->note;
        ProofContext probe = ctx;
        g.suggestions = applicable_rules(probe, l->sequent);
        rep.open_goals.push_back(std::move(g));
    }
    rep.verdict = leaves.empty() ? ProofVerdict::Proved : ProofVerdict::Open;
    return rep;
}

// ---------------------------------------------------------------- reports

namespace {

std::string application_text(const ProofNode& n) {
    std::string out = n.rule;
    for (const auto& p : n.positions) out += " " + p.text();
    for (const auto& a : n.args) out += " {" + a + "}";
    return out;
}

void render_node(const ProofNode& n, int depth, std::string& out) {
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    out += pad + path_text(n.path) + "  " + to_string(n.sequent) + "\n";
    if (n.closed && n.rule == "iexists" && n.children.empty()) {
        out += pad + "  " + n.note + "\n";
        return;
    }
    if (!n.rule.empty()) {
        const RuleInfo* info = find_rule(n.rule);
        out += pad + "  by " + application_text(n) + (info ? "  (" + info->family + ")" : "");
        if (!n.note.empty()) out += "  [" + n.note + "]";
        out += "\n";
    } else if (!n.closed) {
        out += pad + "  open" + (n.note.empty() ? "" : ": " + n.note) + "\n";
    }
    for (const auto& c : n.children) render_node(c, depth + 1, out);
}

}  // namespace

std::string render_text(const ProofReport& r) {
    std::string out = "conjecture " + r.conjecture + ": " + verdict_text(r.verdict) + "\n";
    if (r.verdict == ProofVerdict::Error) {
        out += "error: " + r.error + "\n";
        if (r.root.sequent.succ.empty() && r.root.sequent.ante.empty()) return out;
    }
    render_node(r.root, 0, out);
    out += std::to_string(r.rule_applications) + " rule applications, " + std::to_string(r.open_goals.size()) +
           " open goal(s)\n";
    for (const auto& g : r.open_goals) {
        out += "open " + path_text(g.path) + ": " + g.sequent + "\n";
        if (!g.diagnostic.empty()) out += "  " + g.diagnostic + "\n";
        if (!g.suggestions.empty()) {
            out += "  applicable:";
            for (const auto& s : g.suggestions) out += " " + s;
            out += "\n";
        }
    }
    return out;
}

nlohmann::json render_json(const ProofReport& r) {
    nlohmann::json j;
    j["conjecture"] = r.conjecture;
    j["verdict"] = verdict_text(r.verdict);
    j["rule_applications"] = r.rule_applications;
    j["rules_used"] = r.rules_used;
    j["catalog_hash"] = catalog_hash();
    nlohmann::json open = nlohmann::json::array();
    for (const auto& g : r.open_goals)
        open.push_back({{"path", path_text(g.path)},
                        {"sequent", g.sequent},
                        {"diagnostic", g.diagnostic},
                        {"applicable", g.suggestions}});
    j["open_goals"] = open;
    nlohmann::json methods = nlohmann::json::object();
    for (const auto& [m, n] : r.oracle.methods) methods[m] = n;
    j["oracle"] = {{"calls", r.oracle.calls},
                   {"valid", r.oracle.valid},
                   {"invalid", r.oracle.invalid},
                   {"unknown", r.oracle.unknown},
                   {"methods", methods}};
    if (r.verdict == ProofVerdict::Error) j["error"] = {{"path", path_text(r.error_path)}, {"message", r.error}};
    return j;
}

// ---------------------------------------------------------------- automation

namespace {

const std::vector<std::vector<std::string>>& priority_groups() {
    static const std::vector<std::vector<std::string>> groups = {
        {"[++]box", "<++>dia", "[;]box", "<;>dia", "[?]box", "<?>dia", "[:=]box", "<:=>dia", "[']box", "<'>dia"},
        {"[;]", "<;>", "[++]", "<++>", "[?]", "<?>"},
        {"[:=]", "<:=>", "[:*]", "<:*>", "[']", "<'>"},
    };
    return groups;
}

std::vector<Position> top_positions(const Sequent& s) {
    std::vector<Position> out;
    for (std::size_t k = 0; k < s.succ.size(); ++k) out.push_back(Position{true, k, {}});
    for (std::size_t k = 0; k < s.ante.size(); ++k) out.push_back(Position{false, k, {}});
    return out;
}

std::optional<std::pair<RuleApplication, RuleResult>> try_rule(ProofContext& ctx, const Sequent& s,
                                                               const RuleApplication& app) {
    ProofContext probe = ctx;
    try {
        RuleResult r = apply_rule(probe, s, app);
        ctx = std::move(probe);
        return std::make_pair(app, std::move(r));
    } catch (const RuleError&) {
    } catch (const OracleFailure&) {
    }
    return std::nullopt;
}

std::optional<std::pair<RuleApplication, RuleResult>> next_step(ProofContext& ctx, const Sequent& s, bool oracle) {
    if (auto r = try_rule(ctx, s, {"ax", {}, {}})) return r;
    for (std::size_t k = 0; k < s.succ.size(); ++k)
        if (auto r = try_rule(ctx, s, {"notr", {Position{true, k, {}}}, {}})) return r;
    for (std::size_t k = 0; k < s.ante.size(); ++k) {
        if (auto r = try_rule(ctx, s, {"notl", {Position{false, k, {}}}, {}})) return r;
        if (auto r = try_rule(ctx, s, {"andl", {Position{false, k, {}}}, {}})) return r;
    }
    for (std::size_t k = 0; k < s.succ.size(); ++k)
        if (auto r = try_rule(ctx, s, {"andr", {Position{true, k, {}}}, {}})) return r;
    for (const auto& group : priority_groups())
        for (const auto& p : top_positions(s))
            for (const auto& rule : group)
                if (auto r = try_rule(ctx, s, {rule, {p}, {}})) return r;
    if (oracle)
        if (auto r = try_rule(ctx, s, {"R", {}, {}})) return r;
    return std::nullopt;
}

}  // namespace

std::vector<std::string> applicable_rules(ProofContext& ctx, const Sequent& goal) {
    std::vector<std::string> out;
    auto note = [&](const std::string& rule) {
        if (std::find(out.begin(), out.end(), rule) == out.end()) out.push_back(rule);
    };
    std::vector<std::string> rules = {"ax", "notr", "notl", "andl", "andr", "allr", "existsl", "DI"};
    for (const auto& g : priority_groups()) rules.insert(rules.end(), g.begin(), g.end());
    for (const auto& rule : rules) {
        if (rule == "ax") {
            if (try_rule(ctx, goal, {"ax", {}, {}})) note(rule);
            continue;
        }
        for (const auto& p : top_positions(goal)) {
            ProofContext probe = ctx;
            if (try_rule(probe, goal, {rule, {p}, {}})) {
                note(rule);
                break;
            }
        }
    }
    return out;
}

std::vector<PlannedStep> auto_tactic(ProofContext& ctx, const Sequent& goal, std::size_t max_steps) {
    std::vector<PlannedStep> plan;
    std::vector<std::pair<GoalPath, Sequent>> stack{{{}, goal}};
    while (!stack.empty() && plan.size() < max_steps) {
        auto [path, s] = stack.back();
        stack.pop_back();
        auto step = next_step(ctx, s, true);
        if (!step) continue;
        plan.push_back(PlannedStep{path, step->first});
        const auto& premises = step->second.premises;
        for (std::size_t k = premises.size(); k-- > 0;) {
            GoalPath p = path;
            p.push_back(k);
            stack.emplace_back(p, premises[k]);
        }
    }
    return plan;
}

}  // namespace qdtl
