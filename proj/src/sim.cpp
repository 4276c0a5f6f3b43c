#include "qdtl/sim.hpp"

#include "qdtl/printer.hpp"
#include "qdtl/rk4.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <thread>
#include <tuple>

namespace qdtl::sim {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string key_text(const Key& k) {
    std::string out = "(";
    for (std::size_t i = 0; i < k.size(); ++i) out += (i ? ", " : "") + num(k[i]);
    return out + ")";
}

std::string env_text(const Env& env) {
    std::string out;
    for (const auto& [k, v] : env) out += k + "=" + num(v) + ";";
    return out;
}

/// Mixed-radix enumeration of one choice per group, at most `cap` combinations.
std::vector<std::vector<std::size_t>> choices(const std::vector<std::size_t>& sizes, std::size_t cap) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> digit(sizes.size(), 0);
    for (std::size_t s : sizes)
        if (s == 0) return out;
    while (out.size() < cap) {
        out.push_back(digit);
        std::size_t i = 0;
        for (; i < digit.size(); ++i) {
            if (++digit[i] < sizes[i]) break;
            digit[i] = 0;
        }
        if (i == digit.size()) break;
    }
    return out;
}

void check_budget(std::size_t n, const SimConfig& cfg) {
    if (n > cfg.max_traces) throw BudgetExceeded("more than " + std::to_string(cfg.max_traces) + " traces");
}

/// Shared recursion of both valuations; they differ only at modalities.
bool value(const Simulator& sim, const State& s, const FormulaPtr& f, const Env& env, bool reachability) {
    switch (f->kind) {
        case FormulaKind::True: return true;
        case FormulaKind::False: return false;
        case FormulaKind::Eq: return sim.eval(s, f->lhs, env) == sim.eval(s, f->rhs, env);
        case FormulaKind::Geq: return sim.eval(s, f->lhs, env) >= sim.eval(s, f->rhs, env);
        case FormulaKind::Not: return !value(sim, s, f->left, env, reachability);
        case FormulaKind::And:
            return value(sim, s, f->left, env, reachability) && value(sim, s, f->right, env, reachability);
        case FormulaKind::Forall:
        case FormulaKind::Exists: {
            std::vector<double> domain;
            if (f->var_sort == kReal) {
                domain = sim.config().real_candidates;
            } else {
                auto it = s.pools.find(f->var_sort);
                if (it == s.pools.end() || it->second.empty())
                    throw SimError("empty object pool for sort " + f->var_sort);
                domain = it->second;
            }
            const bool universal = f->kind == FormulaKind::Forall;
            Env inner = env;
            for (double d : domain) {
                inner[f->var] = d;
                if (value(sim, s, f->left, inner, reachability) != universal) return !universal;
            }
            return universal;
        }
        case FormulaKind::Box:
        case FormulaKind::Diamond: {
            const bool box = f->kind == FormulaKind::Box;
            if (reachability) {
                if (f->temporal != Temporal::None)
                    throw SimError("temporal operator under reachability valuation");
                for (const State& t : sim.reach(s, f->program, env))
                    if (value(sim, t, f->left, env, true) != box) return !box;
                return box;
            }
            for (const Trace& tr : sim.run(s, f->program, env)) {
                auto v = sim.holds_on(tr, f->temporal, f->left, env);
                if (!v) continue;
                if (box && !*v) return false;
                if (!box && *v) return true;
            }
            return box;
        }
    }
    return false;
}

void add_segment_json(nlohmann::json& out, const Segment& seg) {
    nlohmann::json snaps = nlohmann::json::array();
    const std::size_t n = seg.states.size();
    std::vector<std::size_t> picks;
    if (n <= 101) {
        for (std::size_t i = 0; i < n; ++i) picks.push_back(i);
    } else {
        for (std::size_t i = 0; i <= 100; ++i) picks.push_back(i * (n - 1) / 100);
    }
    for (std::size_t i : picks) snaps.push_back({{"time", seg.times[i]}, {"state", to_json(seg.states[i])}});
    out.push_back({{"duration", seg.duration}, {"snapshots", std::move(snaps)}});
}

}  // namespace

// ---------------------------------------------------------------- states and traces

State State::lambda() {
    State s;
    s.abort = true;
    return s;
}

bool State::operator<(const State& o) const {
    return std::tie(abort, pools, tables, vars) < std::tie(o.abort, o.pools, o.tables, o.vars);
}

std::string serialize(const State& s) {
    if (s.abort) return "LAMBDA";
    std::string out;
    for (const auto& [sort, ids] : s.pools) {
        out += "pool " + sort + ":";
        for (double id : ids) out += " " + num(id);
        out += "\n";
    }
    for (const auto& [fn, table] : s.tables)
        for (const auto& [k, v] : table) out += fn + key_text(k) + "=" + num(v) + "\n";
    for (const auto& [name, v] : s.vars) out += name + "=" + num(v) + "\n";
    return out;
}

nlohmann::json to_json(const State& s) {
    if (s.abort) return {{"abort", true}};
    nlohmann::json pools = nlohmann::json::object();
    for (const auto& [sort, ids] : s.pools) pools[sort] = ids;
    nlohmann::json tables = nlohmann::json::object();
    for (const auto& [fn, table] : s.tables) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& [k, v] : table) rows.push_back({{"args", k}, {"value", v}});
        tables[fn] = std::move(rows);
    }
    return {{"abort", false}, {"pools", pools}, {"functions", tables}, {"vars", s.vars}};
}

Segment Segment::point(State s) {
    Segment seg;
    seg.times = {0.0};
    seg.states.push_back(std::move(s));
    return seg;
}

std::optional<Trace> compose(const Trace& a, const Trace& b) {
    if (!a.terminates()) return a;
    if (!(a.last() == b.first())) return std::nullopt;
    Trace out = a;
    out.segments.insert(out.segments.end(), b.segments.begin(), b.segments.end());
    return out;
}

nlohmann::json to_json(const SimConfig& c) {
    return {{"step", c.step},
            {"loop_bound", c.loop_bound},
            {"durations", c.durations},
            {"max_duration", c.max_duration},
            {"fixed_durations", c.fixed_durations},
            {"seed", c.seed},
            {"max_traces", c.max_traces},
            {"real_candidates", c.real_candidates}};
}

std::uint64_t stable_hash(const std::string& text, std::uint64_t seed) {
    std::uint64_t h = 1469598103934665603ULL ^ (seed * 0x9E3779B97F4A7C15ULL);
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// ---------------------------------------------------------------- evaluation

Simulator::Simulator(Signature sig, SimConfig cfg) : sig_(std::move(sig)), cfg_(std::move(cfg)) {}

std::vector<double> Simulator::pool(const State& s, const std::string& sort) const {
    auto it = s.pools.find(sort);
    return it == s.pools.end() ? std::vector<double>{} : it->second;
}

double Simulator::eval(const State& s, const TermPtr& t, const Env& env) const {
    switch (t->kind) {
        case TermKind::Var: {
            if (auto it = env.find(t->name); it != env.end()) return it->second;
            if (auto it = s.vars.find(t->name); it != s.vars.end()) return it->second;
            throw SimError("unbound variable " + t->name);
        }
        case TermKind::App:
        case TermKind::Prime: {
            Key k;
            k.reserve(t->args.size());
            for (const auto& a : t->args) k.push_back(eval(s, a, env));
            const std::string table = t->kind == TermKind::Prime ? t->name + "'" : t->name;
            if (auto tab = s.tables.find(table); tab != s.tables.end())
                if (auto it = tab->second.find(k); it != tab->second.end()) return it->second;
            if (t->kind == TermKind::App && t->name == kExistence) return 0.0;
            throw SimError("uninterpreted position " + table + key_text(k));
        }
        case TermKind::Lit: return to_double(t->value);
        case TermKind::Ite:
            return holds(s, t->cond, env) ? eval(s, t->args[0], env) : eval(s, t->args[1], env);
        case TermKind::Neg: return -eval(s, t->args[0], env);
        case TermKind::Add: return eval(s, t->args[0], env) + eval(s, t->args[1], env);
        case TermKind::Sub: return eval(s, t->args[0], env) - eval(s, t->args[1], env);
        case TermKind::Mul: return eval(s, t->args[0], env) * eval(s, t->args[1], env);
        case TermKind::Pow: {
            const double b = eval(s, t->args[0], env);
            double r = 1;
            for (unsigned i = 0; i < t->exponent; ++i) r *= b;
            return r;
        }
    }
    return 0;
}

bool Simulator::holds(const State& s, const FormulaPtr& f, const Env& env) const {
    return value(*this, s, f, env, false);
}

bool Simulator::holds_reach(const State& s, const FormulaPtr& f, const Env& env) const {
    return value(*this, s, f, env, true);
}

std::optional<bool> Simulator::holds_on(const Trace& t, Temporal temporal, const FormulaPtr& body,
                                        const Env& env) const {
    if (temporal == Temporal::None) {
        if (!t.terminates()) return std::nullopt;
        return holds(t.last(), body, env);
    }
    const bool always = temporal == Temporal::Always;
    for (const auto& seg : t.segments)
        for (const auto& st : seg.states) {
            if (st.abort) continue;
            if (holds(st, body, env) != always) return !always;
        }
    return always;
}

// ---------------------------------------------------------------- discrete and continuous steps

void Simulator::ensure_fresh(State& s, const std::string& sort) const {
    auto& ids = s.pools[sort];
    auto& existence = s.tables[kExistence];
    for (double id : ids) {
        auto it = existence.find({id});
        if (it == existence.end() || it->second == 0) return;
    }
    const double fresh = ids.empty() ? 0.0 : *std::max_element(ids.begin(), ids.end()) + 1;
    ids.push_back(fresh);
    existence[{fresh}] = 0;
    // The newcomer gets value 0 (or the first object of the result sort) at
    // every position that mentions it.
    for (const auto& [name, fn] : sig_.functions()) {
        bool relevant = false, supported = true;
        for (const auto& a : fn.arg_sorts) {
            relevant = relevant || a == sort;
            supported = supported && sig_.is_object_sort(a);
        }
        if (!relevant || !supported) continue;
        double filler = 0;
        if (fn.result_sort != kReal) {
            auto p = pool(s, fn.result_sort);
            if (!p.empty()) filler = p.front();
        }
        std::vector<std::size_t> sizes;
        for (const auto& a : fn.arg_sorts) sizes.push_back(s.pools[a].size());
        for (const auto& pick : choices(sizes, static_cast<std::size_t>(-1))) {
            Key k;
            bool mentions = false;
            for (std::size_t i = 0; i < pick.size(); ++i) {
                k.push_back(s.pools[fn.arg_sorts[i]][pick[i]]);
                mentions = mentions || (fn.arg_sorts[i] == sort && k.back() == fresh);
            }
            if (mentions) s.tables[name].emplace(k, filler);
        }
    }
}

std::vector<State> Simulator::assign(const State& s, const Program& a, const Env& env) const {
    State base = s;
    const bool quantified = !a.var.empty();
    if (cfg_.fresh_supply && quantified && sig_.is_object_sort(a.var_sort)) {
        for (const auto& c : a.clauses)
            if (c.rhs->kind == TermKind::Var && c.rhs->name == a.var) {
                ensure_fresh(base, a.var_sort);
                break;
            }
    }
    const std::vector<double> objects = quantified ? pool(base, a.var_sort) : std::vector<double>{0.0};

    // Positions in first-seen order with their distinct candidate values.
    std::vector<std::pair<std::string, Key>> positions;
    std::map<std::pair<std::string, Key>, std::vector<double>> values;
    for (const auto& c : a.clauses) {
        const std::string table = c.primed ? c.fn + "'" : c.fn;
        for (double e : objects) {
            Env inner = env;
            if (quantified) inner[a.var] = e;
            Key k;
            for (const auto& arg : c.args) k.push_back(eval(base, arg, inner));
            const double v = eval(base, c.rhs, inner);
            auto pos = std::make_pair(table, k);
            auto [it, inserted] = values.try_emplace(pos);
            if (inserted) positions.push_back(pos);
            if (std::find(it->second.begin(), it->second.end(), v) == it->second.end()) it->second.push_back(v);
        }
    }
    std::vector<std::size_t> sizes;
    for (const auto& p : positions) sizes.push_back(values[p].size());
    std::vector<State> out;
    for (const auto& pick : choices(sizes, cfg_.max_alternatives)) {
        State t = base;
        for (std::size_t i = 0; i < positions.size(); ++i)
            t.tables[positions[i].first][positions[i].second] = values[positions[i]][pick[i]];
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<Segment> Simulator::flows(const State& s, const Program& ode, const Env& env) const {
    const bool quantified = !ode.var.empty();
    const std::vector<double> objects = quantified ? pool(s, ode.var_sort) : std::vector<double>{0.0};

    struct Entry {
        TermPtr rhs;
        Env env;
        std::size_t clause;
        double object;
    };
    std::vector<std::pair<std::string, Key>> positions;
    std::map<std::pair<std::string, Key>, std::vector<Entry>> entries;
    for (std::size_t ci = 0; ci < ode.clauses.size(); ++ci) {
        const auto& c = ode.clauses[ci];
        const bool depends = quantified && free_vars(c.rhs).count({ode.var, ode.var_sort});
        for (double e : objects) {
            Env inner = env;
            if (quantified) inner[ode.var] = e;
            Key k;
            for (const auto& arg : c.args) k.push_back(eval(s, arg, inner));
            auto pos = std::make_pair(c.fn, k);
            auto [it, inserted] = entries.try_emplace(pos);
            if (inserted) {
                positions.push_back(pos);
                auto tab = s.tables.find(c.fn);
                if (tab == s.tables.end() || !tab->second.count(k))
                    throw SimError("uninterpreted position " + c.fn + key_text(k));
            }
            const double obj = depends ? e : 0.0;
            bool seen = false;
            for (const auto& en : it->second) seen = seen || (en.clause == ci && en.object == obj);
            if (!seen) it->second.push_back({c.rhs, inner, ci, obj});
        }
    }

    // Durations: 0 and samples from (0, max_duration], reproducible per start state.
    std::mt19937_64 rng(stable_hash(to_string(std::make_shared<const Program>(ode)) + "|" + serialize(s) + "|" +
                                        env_text(env),
                                    cfg_.seed));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> durations = {0.0};
    for (int i = 1; i < cfg_.durations; ++i) durations.push_back(cfg_.max_duration * (1.0 - unit(rng)));
    if (!cfg_.fixed_durations.empty()) durations = cfg_.fixed_durations;
    std::sort(durations.begin(), durations.end());

    const double h = cfg_.step;
    const std::size_t n = positions.size();
    std::vector<std::size_t> sizes;
    for (const auto& p : positions) sizes.push_back(entries[p].size());

    std::vector<Segment> out;
    for (const auto& pick : choices(sizes, cfg_.max_alternatives)) {
        State work = s;
        std::vector<double*> slots;
        std::vector<const Entry*> rhs;
        for (std::size_t i = 0; i < n; ++i) {
            slots.push_back(&work.tables[positions[i].first][positions[i].second]);
            rhs.push_back(&entries[positions[i]][pick[i]]);
        }
        auto load = [&](const Eigen::VectorXd& y) {
            for (std::size_t i = 0; i < n; ++i) *slots[i] = y[static_cast<Eigen::Index>(i)];
        };
        auto field = [&](const Eigen::VectorXd& y) {
            load(y);
            Eigen::VectorXd d(static_cast<Eigen::Index>(n));
            for (std::size_t i = 0; i < n; ++i) d[static_cast<Eigen::Index>(i)] = eval(work, rhs[i]->rhs, rhs[i]->env);
            return d;
        };
        auto inside = [&](const Eigen::VectorXd& y) {
            if (!ode.cond) return true;
            load(y);
            if (!quantified) return holds(work, ode.cond, env);
            Env inner = env;
            for (double e : objects) {
                inner[ode.var] = e;
                if (!holds(work, ode.cond, inner)) return false;
            }
            return true;
        };
        auto snapshot = [&](const Eigen::VectorXd& y) {
            load(y);
            return State(work);
        };
        // Largest step in [0, limit] from y that stays inside the domain at its end.
        auto exit_step = [&](const Eigen::VectorXd& y, double limit) {
            double lo = 0, hi = limit;
            while (hi - lo > h * 1e-3) {
                const double mid = (lo + hi) / 2;
                if (inside(rk4_step(field, y, mid))) lo = mid;
                else hi = mid;
            }
            return lo;
        };

        Eigen::VectorXd y0(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) y0[static_cast<Eigen::Index>(i)] = *slots[i];
        if (!inside(y0)) continue;

        // Grid states at multiples of h up to the longest duration or the domain exit.
        std::vector<Eigen::VectorXd> grid = {y0};
        double exit_time = durations.back();
        while (static_cast<double>(grid.size()) * h <= durations.back() + h * 1e-9) {
            Eigen::VectorXd next = rk4_step(field, grid.back(), h);
            if (!inside(next)) {
                exit_time = static_cast<double>(grid.size() - 1) * h + exit_step(grid.back(), h);
                break;
            }
            grid.push_back(std::move(next));
        }

        double previous = -1;
        for (double d : durations) {
            d = std::min(d, exit_time);
            if (d == previous) continue;
            Segment seg;
            std::size_t last = std::min(grid.size() - 1, static_cast<std::size_t>(std::floor(d / h + 1e-9)));
            for (std::size_t k = 0; k <= last; ++k) {
                seg.times.push_back(static_cast<double>(k) * h);
                seg.states.push_back(snapshot(grid[k]));
            }
            const double rest = d - static_cast<double>(last) * h;
            if (rest > h * 1e-9) {
                Eigen::VectorXd end = rk4_step(field, grid[last], rest);
                double taken = rest;
                if (!inside(end)) {
                    taken = exit_step(grid[last], rest);
                    end = rk4_step(field, grid[last], taken);
                    exit_time = static_cast<double>(last) * h + taken;
                    d = exit_time;
                }
                if (taken > 0) {
                    seg.times.push_back(d);
                    seg.states.push_back(snapshot(end));
                }
            }
            seg.duration = seg.times.back();
            previous = d;
            if (!out.empty() && out.back().duration == seg.duration && out.back().states.front() == seg.states.front())
                continue;
            out.push_back(std::move(seg));
        }
    }
    return out;
}

// ---------------------------------------------------------------- trace runs

std::vector<Trace> Simulator::run(const State& s, const ProgramPtr& p, const Env& env) const {
    std::vector<Trace> out;
    switch (p->kind) {
        case ProgramKind::Assign:
            for (auto& t : assign(s, *p, env)) out.push_back({{Segment::point(s), Segment::point(std::move(t))}});
            break;
        case ProgramKind::Ode:
            for (auto& seg : flows(s, *p, env)) out.push_back({{std::move(seg)}});
            break;
        case ProgramKind::Test:
            if (holds(s, p->cond, env)) out.push_back({{Segment::point(s)}});
            else out.push_back({{Segment::point(s), Segment::point(State::lambda())}});
            break;
        case ProgramKind::Choice:
            out = run(s, p->left, env);
            for (auto& t : run(s, p->right, env)) out.push_back(std::move(t));
            break;
        case ProgramKind::Seq:
            for (auto& first : run(s, p->left, env)) {
                if (!first.terminates()) {
                    out.push_back(std::move(first));
                    continue;
                }
                for (const auto& second : run(first.last(), p->right, env))
                    if (auto c = compose(first, second)) out.push_back(std::move(*c));
                check_budget(out.size(), cfg_);
            }
            break;
        case ProgramKind::Loop: out = run_loop(s, p->left, env); break;
        case ProgramKind::New: return run(s, desugar_new(p, sig_), env);
    }
    check_budget(out.size(), cfg_);
    return out;
}

std::vector<Trace> Simulator::run_loop(const State& s, const ProgramPtr& body, const Env& env) const {
    // Zero iterations behave like ?true; n+1 iterations extend the terminating
    // traces of n iterations.
    std::vector<Trace> out = {{{Segment::point(s)}}};
    if (cfg_.loop_bound < 1) return out;
    std::vector<Trace> level = run(s, body, env);
    out.insert(out.end(), level.begin(), level.end());
    for (int n = 2; n <= cfg_.loop_bound; ++n) {
        std::vector<Trace> next;
        for (const auto& t : level) {
            if (!t.terminates()) continue;
            for (const auto& more : run(t.last(), body, env))
                if (auto c = compose(t, more)) next.push_back(std::move(*c));
            check_budget(out.size() + next.size(), cfg_);
        }
        out.insert(out.end(), next.begin(), next.end());
        level = std::move(next);
    }
    return out;
}

std::vector<State> Simulator::reach(const State& s, const ProgramPtr& p, const Env& env) const {
    std::set<State> out;
    switch (p->kind) {
        case ProgramKind::Assign:
            for (auto& t : assign(s, *p, env)) out.insert(std::move(t));
            break;
        case ProgramKind::Ode:
            for (auto& seg : flows(s, *p, env)) out.insert(std::move(seg.states.back()));
            break;
        case ProgramKind::Test:
            if (holds_reach(s, p->cond, env)) out.insert(s);
            break;
        case ProgramKind::Choice:
            for (auto& t : reach(s, p->left, env)) out.insert(std::move(t));
            for (auto& t : reach(s, p->right, env)) out.insert(std::move(t));
            break;
        case ProgramKind::Seq:
            for (const auto& mid : reach(s, p->left, env)) {
                for (auto& t : reach(mid, p->right, env)) out.insert(std::move(t));
                check_budget(out.size(), cfg_);
            }
            break;
        case ProgramKind::Loop: {
            out.insert(s);
            std::set<State> frontier = {s};
            for (int n = 1; n <= cfg_.loop_bound; ++n) {
                std::set<State> next;
                for (const auto& z : frontier)
                    for (auto& t : reach(z, p->left, env)) next.insert(std::move(t));
                out.insert(next.begin(), next.end());
                check_budget(out.size(), cfg_);
                frontier = std::move(next);
            }
            break;
        }
        case ProgramKind::New: return reach(s, desugar_new(p, sig_), env);
    }
    check_budget(out.size(), cfg_);
    return {out.begin(), out.end()};
}

// ---------------------------------------------------------------- sampling

State random_state(const Signature& sig, std::mt19937_64& rng, const SamplerOptions& opt) {
    State s;
    for (const auto& sort : sig.object_sorts())
        for (int i = 0; i < opt.objects; ++i) s.pools[sort].push_back(i);
    auto real = [&](const std::string& name) {
        auto [lo, hi] = opt.ranges.count(name) ? opt.ranges.at(name) : std::make_pair(-opt.range, opt.range);
        if (opt.quarter_grid) {
            const int a = static_cast<int>(std::ceil(lo * 4)), b = static_cast<int>(std::floor(hi * 4));
            return std::uniform_int_distribution<int>(a, b)(rng) / 4.0;
        }
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    for (const auto& [name, fn] : sig.functions()) {
        bool supported = true;
        std::vector<std::size_t> sizes;
        for (const auto& a : fn.arg_sorts) {
            supported = supported && sig.is_object_sort(a);
            if (supported) sizes.push_back(s.pools[a].size());
        }
        if (!supported) continue;
        for (const auto& pick : choices(sizes, static_cast<std::size_t>(-1))) {
            Key k;
            for (std::size_t i = 0; i < pick.size(); ++i) k.push_back(s.pools[fn.arg_sorts[i]][pick[i]]);
            if (fn.result_sort == kReal) {
                s.tables[name][k] = real(name);
            } else {
                const auto& p = s.pools[fn.result_sort];
                if (p.empty()) continue;
                s.tables[name][k] = p[std::uniform_int_distribution<std::size_t>(0, p.size() - 1)(rng)];
            }
        }
    }
    for (const auto& sort : sig.object_sorts())
        for (double id : s.pools[sort])
            s.tables[kExistence][{id}] = opt.random_existence ? std::uniform_int_distribution<int>(0, 1)(rng) : 1;
    return s;
}

// ---------------------------------------------------------------- falsification

namespace {

/// Descends into a false formula to the innermost subformula that explains it.
Counterexample explain(const Simulator& sim, const State& s, const FormulaPtr& f, const Env& env, std::string path) {
    Counterexample c;
    c.path = path;
    c.formula = to_string(f);
    c.bindings = env;
    auto child = [&](const std::string& step) { return path.empty() ? step : path + "." + step; };
    switch (f->kind) {
        case FormulaKind::And:
            if (!sim.holds(s, f->left, env)) return explain(sim, s, f->left, env, child("left"));
            return explain(sim, s, f->right, env, child("right"));
        case FormulaKind::Not:
            // not(a & not b) is false when a holds and b fails.
            if (f->left->kind == FormulaKind::And && f->left->right->kind == FormulaKind::Not)
                return explain(sim, s, f->left->right->left, env, child("left.right.left"));
            return c;
        case FormulaKind::Forall: {
            std::vector<double> domain =
                f->var_sort == kReal ? sim.config().real_candidates : s.pools.at(f->var_sort);
            Env inner = env;
            for (double d : domain) {
                inner[f->var] = d;
                if (!sim.holds(s, f->left, inner)) return explain(sim, s, f->left, inner, child("left"));
            }
            return c;
        }
        case FormulaKind::Box:
            for (const Trace& tr : sim.run(s, f->program, env)) {
                auto v = sim.holds_on(tr, f->temporal, f->left, env);
                if (v && !*v) {
                    c.trace = tr;
                    return c;
                }
            }
            return c;
        default: return c;
    }
}

}  // namespace

FalsifyResult falsify(const Simulator& sim, const StateSampler& sampler, const FormulaPtr& f, std::size_t samples,
                      std::size_t attempts, int jobs) {
    FormulaPtr hypothesis, conclusion = f;
    std::string path;
    if (auto imp = as_implies(f)) {
        hypothesis = imp->first;
        conclusion = imp->second;
        path = "left.right.left";
    }
    const std::uint64_t seed = sim.config().seed;
    jobs = std::max(1, jobs);
    std::vector<FalsifyResult> partial(static_cast<std::size_t>(jobs));
    auto worker = [&](int w) {
        FalsifyResult& r = partial[static_cast<std::size_t>(w)];
        for (std::size_t k = static_cast<std::size_t>(w); k < samples; k += static_cast<std::size_t>(jobs)) {
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                              static_cast<std::uint32_t>(k)};
            std::mt19937_64 rng(seq);
            std::optional<State> start;
            for (std::size_t a = 0; a < attempts && !start; ++a) {
                State s = sampler(rng);
                if (!hypothesis || sim.holds(s, hypothesis)) start = std::move(s);
                else ++r.rejected;
            }
            if (!start) continue;
            ++r.checked;
            if (!sim.holds(*start, conclusion)) {
                Counterexample c = explain(sim, *start, conclusion, {}, path);
                c.seed = seed;
                c.sample = k;
                c.initial = *start;
                r.counterexample = std::move(c);
                return;
            }
        }
    };
    if (jobs == 1) {
        worker(0);
    } else {
        std::vector<std::thread> threads;
        for (int w = 0; w < jobs; ++w) threads.emplace_back(worker, w);
        for (auto& t : threads) t.join();
    }
    FalsifyResult out;
    for (auto& r : partial) {
        out.checked += r.checked;
        out.rejected += r.rejected;
        if (r.counterexample && (!out.counterexample || r.counterexample->sample < out.counterexample->sample))
            out.counterexample = std::move(r.counterexample);
    }
    return out;
}

nlohmann::json to_json(const Counterexample& c, const SimConfig& cfg) {
    nlohmann::json trace = nlohmann::json::array();
    if (c.trace)
        for (const auto& seg : c.trace->segments) add_segment_json(trace, seg);
    return {{"seed", c.seed},
            {"sample", c.sample},
            {"config", to_json(cfg)},
            {"initial_state", to_json(c.initial)},
            {"violated", {{"path", c.path}, {"formula", c.formula}, {"bindings", c.bindings}}},
            {"trace", c.trace ? trace : nlohmann::json(nullptr)}};
}

}  // namespace qdtl::sim
