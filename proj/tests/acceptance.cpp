// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include "kstep/envs.hpp"
#include "kstep/explain.hpp"
#include "kstep/oracle.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

using namespace kstep;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Tally {
    std::size_t checked = 0;
    std::size_t failed = 0;
    std::string first_failure;

    void check(bool ok, const std::string& what)
    {
        ++checked;
        if (!ok && failed++ == 0) {
            first_failure = what;
        }
    }
};

bool report(int n, bool ok, const std::string& detail)
{
    std::cout << "criterion " << n << ": " << (ok ? "PASS" : "FAIL") << "  " << detail << std::endl;
    return ok;
}

std::string detail(const Tally& t, const std::string& unit)
{
    std::ostringstream s;
    s << t.checked - t.failed << "/" << t.checked << " " << unit;
    if (t.failed) {
        s << "; first failure: " << t.first_failure;
    }
    return s.str();
}

ExplainOptions serial()
{
    ExplainOptions o;
    o.exec = kernels::Exec::Serial;
    o.solver.exec = kernels::Exec::Serial;
    return o;
}

// Brute force over transition-consistent prefixes that keep the execution's
// actions before their last step. Returns the set of steps at which some
// prefix respecting the pins of `fixed` first deviates.
std::set<std::size_t> deviation_steps(const ReactiveSystem& sys, const Network& net,
                                      const Execution& exec, const StepMask& fixed,
                                      std::size_t horizon)
{
    std::set<std::size_t> found;
    std::vector<RationalVector> xs;
    std::function<void(std::size_t)> extend = [&](std::size_t s) {
        if (s == horizon) {
            return;
        }
        RationalVector x(sys.m);
        std::function<void(std::size_t)> fill = [&](std::size_t f) {
            if (f == sys.m) {
                if (s > 0 && !sys.transitions[exec.actions[s - 1]].holds(xs[s - 1], x)) {
                    return;
                }
                if (deviates(forward(net, x), exec.actions[s], RivalMode::Weak)) {
                    found.insert(s);
                }
                if (classify(net, x) == exec.actions[s]) {
                    xs.push_back(x);
                    extend(s + 1);
                    xs.pop_back();
                }
                return;
            }
            if (fixed.contains(s, f)) {
                x[f] = exec.states[s][f];
                fill(f + 1);
                return;
            }
            for (const auto& v : sys.domains[f].values()) {
                x[f] = v;
                fill(f + 1);
            }
        };
        fill(0);
    };
    extend(0);
    return found;
}

std::string mask_text(const StepMask& m) { return to_string(m); }

StepMask random_superset(const StepMask& base, std::size_t m, std::mt19937_64& rng)
{
    StepMask out = base;
    for (std::size_t i = 0; i < out.k(); ++i) {
        for (std::size_t f = 0; f < m; ++f) {
            if (!out.contains(i, f) && rng() % 10 < 3) {
                out.steps[i].push_back(f);
            }
        }
        std::sort(out.steps[i].begin(), out.steps[i].end());
    }
    return out;
}

bool copies_equal(const ExplainResult& r, std::size_t want)
{
    for (const auto& q : r.log.records()) {
        if (q.copies != want) {
            return false;
        }
    }
    return true;
}

// Exhaustive check of a query over its finite state variables.
bool enumerate_query(const Query& q)
{
    std::vector<VarId> state;
    for (VarId v = 0; v < q.num_vars(); ++v) {
        if (q.variables()[v].role == VarRole::State) {
            state.push_back(v);
        }
    }
    RationalVector values(q.num_vars());
    std::function<bool(std::size_t)> go = [&](std::size_t i) {
        if (i == state.size()) {
            RationalVector copy = values;
            q.complete_assignment(copy);
            return q.satisfied_by(copy);
        }
        for (const auto& v : q.variables()[state[i]].domain->values()) {
            values[state[i]] = v;
            if (go(i + 1)) {
                return true;
            }
        }
        return false;
    };
    return go(0);
}

std::size_t space_size(const Query& q)
{
    std::size_t n = 1;
    for (const auto& v : q.variables()) {
        if (v.role == VarRole::State) {
            n *= v.domain->values().size();
        }
    }
    return n;
}

}  // namespace

int main()
{
    bool all = true;
    const auto opts = serial();
    const std::size_t kInstances = 120;
    std::vector<envs::Instance> instances;
    for (std::uint64_t seed = 1; seed <= kInstances; ++seed) {
        instances.push_back(envs::random_binary_instance(seed));
    }
    Tally economy;

    // 1. Minimum agreement.
    {
        auto t0 = Clock::now();
        Tally t;
        for (const auto& inst : instances) {
            std::size_t oracle = oracle_minimum_explanation_size(inst.sys, *inst.net, inst.exec);
            auto m1 = method1(inst.sys, inst.net, inst.exec, Target::Minimum, opts);
            auto m3 = method3_minimum(inst.sys, inst.net, inst.exec, opts);
            auto m4 = method4(inst.sys, inst.net, inst.exec, opts);
            std::ostringstream what;
            what << inst.name << ": oracle " << oracle << ", m1 " << m1.size() << ", m3 "
                 << m3.size() << ", m4 " << m4.size();
            t.check(m1.size() == oracle && m3.size() == oracle && m4.size() == oracle, what.str());
            economy.check(copies_equal(m1, inst.exec.k()), inst.name + ": method1 copies");
            economy.check(copies_equal(m3, 1), inst.name + ": method3_minimum copies");
            economy.check(copies_equal(m4, 1), inst.name + ": method4/rie copies");
        }
        double secs = since(t0);
        std::ostringstream d;
        d << detail(t, "instances with |m1| = |m3| = |m4| = oracle minimum") << " in " << secs
          << " s";
        all &= report(1, t.failed == 0 && t.checked >= 100 && secs < 600, d.str());
    }

    // 2. Minimality.
    {
        Tally t;
        for (const auto& inst : instances) {
            auto m1 = method1(inst.sys, inst.net, inst.exec, Target::Minimal, opts);
            auto m3 = method3_minimal(inst.sys, inst.net, inst.exec, opts);
            economy.check(copies_equal(m1, inst.exec.k()), inst.name + ": method1 copies");
            economy.check(copies_equal(m3, 1), inst.name + ": method3_minimal copies");
            for (const auto* r : {&m1, &m3}) {
                bool ok = is_explanation(inst.sys, inst.net, inst.exec, r->mask, opts) &&
                          is_minimal_explanation(inst.sys, inst.net, inst.exec, r->mask, opts) &&
                          oracle_is_explanation(inst.sys, *inst.net, inst.exec, r->mask);
                t.check(ok, inst.name + " " + r->method + " " + mask_text(r->mask));
            }
        }
        all &= report(2, t.failed == 0, detail(t, "minimal outputs pass the removal test"));
    }

    // 3. Duality.
    {
        Tally t;
        for (const auto& inst : instances) {
            CxpCatalog cxps = oracle_minimal_cxps(inst.sys, *inst.net, inst.exec);
            std::size_t universe = inst.exec.k() * inst.sys.m;
            ElementSet hs = minimum_hitting_set(cxps.family(inst.sys.m), universe);
            StepMask E = to_mask(hs, inst.exec.k(), inst.sys.m, MaskRole::Explanation);
            std::size_t oracle = oracle_minimum_explanation_size(inst.sys, *inst.net, inst.exec);
            auto bq = explanation_query_multi(inst.sys, inst.net, inst.exec, E);
            bool ok = solve(bq.query, opts.solver).verdict.unsat() && E.size() == oracle;
            t.check(ok, inst.name + " " + mask_text(E));
        }
        all &= report(3, t.failed == 0,
                      detail(t, "hitting sets of oracle CXPs are minimum explanations"));
    }

    // 4. Prefix properties and CXP shape by brute force.
    {
        Tally l1, l2, l3;
        std::mt19937_64 rng(4);
        for (const auto& inst : instances) {
            const std::size_t k = inst.exec.k();
            const std::size_t m = inst.sys.m;
            auto base = method3_minimal(inst.sys, inst.net, inst.exec, opts).mask;
            // An explanation keeps the first i actions when only its
            // first i steps are pinned and the rest is left free.
            for (int trial = 0; trial < 6; ++trial) {
                StepMask E = random_superset(base, m, rng);
                bool explains = deviation_steps(inst.sys, *inst.net, inst.exec, E, k).empty();
                bool ok = explains;
                for (std::size_t i = 1; ok && i < k; ++i) {
                    StepMask prefix = E;
                    for (std::size_t s = i; s < k; ++s) {
                        prefix.steps[s].clear();
                    }
                    auto dev = deviation_steps(inst.sys, *inst.net, inst.exec, prefix, i);
                    ok = dev.empty();
                }
                l1.check(ok, inst.name + " " + mask_text(E));
            }
            // With steps < i explained and the suffix fully fixed,
            // any deviation happens at step i, and the one-copy prefix query
            // sees it.
            for (std::size_t n = 0; n < 2 * k; ++n) {
                std::size_t i = n / 2;
                StepMask E = base;
                E.steps[i].clear();
                for (std::size_t f = 0; f < m; ++f) {
                    if (rng() % 2) {
                        E.steps[i].push_back(f);
                    }
                }
                for (std::size_t s = i + 1; s < k; ++s) {
                    E.steps[s] = complement({}, m);
                }
                auto dev = deviation_steps(inst.sys, *inst.net, inst.exec, E, k);
                bool only_i = dev.empty() || (dev.size() == 1 && *dev.begin() == i);
                auto bq = explanation_query_prefix(inst.sys, inst.net, inst.exec, E, i);
                bool prefix_sat = solve(bq.query, opts.solver).verdict.sat();
                l2.check(only_i && prefix_sat == !dev.empty(),
                         inst.name + " step " + std::to_string(i) + " " + mask_text(E));
            }
            // Shape of every minimal CXP.
            CxpCatalog cxps = oracle_minimal_cxps(inst.sys, *inst.net, inst.exec);
            for (const auto& C : cxps.members) {
                auto dev = deviation_steps(inst.sys, *inst.net, inst.exec, C.complement(m), k);
                bool ok = !dev.empty();
                if (ok) {
                    std::size_t t = *dev.begin();
                    ok = !C.steps[t].empty();
                    for (std::size_t s = t + 1; s < k; ++s) {
                        ok = ok && C.steps[s].empty();
                    }
                    bool started = false;
                    bool ended = false;
                    for (std::size_t s = 0; s <= t; ++s) {
                        bool nonempty = !C.steps[s].empty();
                        if (nonempty && ended) {
                            ok = false;
                        }
                        if (started && !nonempty) {
                            ended = true;
                        }
                        started = started || nonempty;
                    }
                    ok = ok && !ended;
                }
                l3.check(ok, inst.name + " " + mask_text(C));
            }
        }
        std::size_t trials = l1.checked + l2.checked + l3.checked;
        std::size_t failures = l1.failed + l2.failed + l3.failed;
        std::ostringstream d;
        d << "prefix kept " << detail(l1, "masks") << "; deviation at i " << detail(l2, "masks")
          << "; CXP shape " << detail(l3, "CXPs") << "; " << trials << " trials";
        all &= report(4, failures == 0 && trials >= 1000, d.str());
    }

    // 5. Size ordering on desk GridWorld.
    {
        auto t0 = Clock::now();
        auto sys = envs::fixture_system(envs::AgentKind::GridWorld);
        auto step = envs::step_function(envs::AgentKind::GridWorld);
        auto starts = envs::fixture_starts(envs::AgentKind::GridWorld);
        Tally t;
        std::size_t strict = 0;
        std::size_t s4 = 0, s3 = 0, s2 = 0;
        ExplainOptions par;
        for (std::uint64_t seed = 1; t.checked < 30 && seed < 200; ++seed) {
            auto agent = envs::make_fixture_agent(envs::AgentKind::GridWorld, seed);
            if (agent.seed != seed) {
                continue;
            }
            std::size_t taken = 0;
            for (std::size_t s = 0; s < starts.size() && taken < 3 && t.checked < 30; ++s) {
                std::size_t k = 2 + t.checked % 4;
                Execution exec;
                try {
                    exec = simulate(sys, *agent.net, step, starts[s], k);
                    require_explainable(sys, *agent.net, exec, RivalMode::Weak);
                } catch (const std::exception&) {
                    continue;
                }
                ++taken;
                auto m4 = method4(sys, agent.net, exec, par);
                auto m3 = method3_minimal(sys, agent.net, exec, par);
                auto m2 = method2(sys, agent.net, exec, Target::Minimal, par);
                economy.check(copies_equal(m4, 1), "gridworld method4/rie copies");
                economy.check(copies_equal(m3, 1), "gridworld method3_minimal copies");
                s4 += m4.size();
                s3 += m3.size();
                s2 += m2.size();
                strict += m2.size() > m4.size();
                std::ostringstream what;
                what << "agent " << seed << " start " << s << " k " << k << ": m4 " << m4.size()
                     << ", m3 " << m3.size() << ", m2 " << m2.size();
                t.check(m4.size() <= m3.size() && m3.size() <= m2.size(), what.str());
            }
        }
        double n = t.checked ? static_cast<double>(t.checked) : 1.0;
        std::ostringstream d;
        d << detail(t, "executions ordered m4 <= m3 <= m2") << "; m2 > m4 on " << strict << "/"
          << t.checked << "; avg sizes m4 " << static_cast<double>(s4) / n << ", m3 "
          << static_cast<double>(s3) / n << ", m2 " << static_cast<double>(s2) / n << " in "
          << since(t0) << " s";
        all &= report(5, t.failed == 0 && t.checked >= 30 && 10 * strict >= 3 * t.checked, d.str());
    }

    // 6. Query economy, collected from every run above.
    all &= report(6, economy.failed == 0 && economy.checked > 0,
                  detail(economy, "runs with the expected network copies per query"));

    // 7. Verifier against enumeration.
    {
        Tally t;
        std::size_t sat = 0;
        std::mt19937_64 rng(7);
        auto check_query = [&](const Query& q, const std::string& name) {
            if (space_size(q) > 4096) {
                return;
            }
            bool expected = enumerate_query(q);
            sat += expected;
            for (std::size_t threshold : {std::size_t{4096}, std::size_t{1}, std::size_t{0}}) {
                SolverOptions so;
                so.enumeration_threshold = threshold;
                auto r = solve(q, so);
                bool ok = r.verdict.status != Status::Timeout && r.verdict.sat() == expected;
                if (ok && r.verdict.sat()) {
                    ok = q.satisfied_by(*r.verdict.witness);
                }
                t.check(ok, name + " threshold " + std::to_string(threshold));
            }
        };
        for (const auto& inst : instances) {
            const std::size_t k = inst.exec.k();
            const std::size_t m = inst.sys.m;
            for (int trial = 0; trial < 3; ++trial) {
                StepMask M = StepMask::empty(k);
                for (std::size_t i = 0; i < k; ++i) {
                    for (std::size_t f = 0; f < m; ++f) {
                        if (rng() % 2) {
                            M.steps[i].push_back(f);
                        }
                    }
                }
                std::size_t i = rng() % k;
                check_query(explanation_query_multi(inst.sys, inst.net, inst.exec, M).query,
                            inst.name + " multi");
                check_query(explanation_query_prefix(inst.sys, inst.net, inst.exec, M, i).query,
                            inst.name + " prefix");
                StepMask C = M;
                C.role = MaskRole::Contrastive;
                check_query(contrastive_query_multi(inst.sys, inst.net, inst.exec, C).query,
                            inst.name + " contrastive");
                std::size_t j = rng() % (i + 1);
                check_query(contrastive_query_window(inst.sys, inst.net, inst.exec, C, j, i).query,
                            inst.name + " window");
            }
        }
        auto gsys = envs::fixture_system(envs::AgentKind::GridWorld);
        auto agent = envs::make_fixture_agent(envs::AgentKind::GridWorld, 1);
        auto starts = envs::fixture_starts(envs::AgentKind::GridWorld);
        for (std::size_t s = 0; s < starts.size(); s += 3) {
            Action a = classify(*agent.net, starts[s]);
            FeatureSet C;
            for (std::size_t f = 0; f < gsys.m; ++f) {
                if (rng() % 2) {
                    C.push_back(f);
                }
            }
            check_query(contrastive_query_single(agent.net, gsys.domains, starts[s], a, C).query,
                        "gridworld single start " + std::to_string(s));
        }
        std::ostringstream d;
        d << detail(t, "solver runs match enumeration") << " (" << sat * 3 << " SAT runs)";
        all &= report(7, t.failed == 0 && sat > 0 && sat * 3 < t.checked, d.str());
    }

    // 8. Minimum hitting sets.
    {
        Tally t;
        std::mt19937_64 rng(8);
        for (int trial = 0; trial < 200; ++trial) {
            std::size_t universe = 1 + rng() % 12;
            std::size_t members = 1 + rng() % 15;
            std::vector<ElementSet> family;
            for (std::size_t i = 0; i < members; ++i) {
                ElementSet s;
                for (std::size_t e = 0; e < universe; ++e) {
                    if (rng() % 4 == 0) {
                        s.push_back(e);
                    }
                }
                if (s.empty()) {
                    s.push_back(rng() % universe);
                }
                family.push_back(std::move(s));
            }
            ElementSet hs = minimum_hitting_set(family, universe);
            t.check(hits_all(hs, family) && hs.size() == brute_force_hitting_set_size(family),
                    "family " + std::to_string(trial));
        }
        all &= report(8, t.failed == 0 && t.checked == 200,
                      detail(t, "families solved at the exhaustive minimum"));
    }

    // 9. Environment transcription and the full right turn.
    {
        Tally t;
        auto label_family = [](const StateAtom& atom) {
            const std::string& l = atom_label(atom);
            return l.substr(0, l.rfind(' '));
        };
        auto counts = [&](const ConstraintSet& cs) {
            std::map<std::string, int> c;
            for (const auto& a : cs.atoms) {
                c[label_family(a)]++;
            }
            return c;
        };
        const std::map<std::string, int> grid_expected = {
            {"move", 1}, {"keep", 1}, {"target", 2}, {"sensor ahead", 2},
            {"sensor ahead sum", 1}, {"sensor behind", 2}, {"sensor behind sum", 1}};
        auto grid = envs::gridworld_system(envs::GridWorldSpec{});
        for (Action a = 0; a < 4; ++a) {
            t.check(counts(grid.transitions[a]) == grid_expected,
                    "gridworld action " + grid.actions[a]);
        }
        const std::map<std::string, int> turn_expected = {
            {"lidar bound", 14}, {"distance bound", 2}, {"angle bound", 2},
            {"sliding", 6},      {"turn", 1},           {"distance invariant", 1}};
        auto spec = envs::turtlebot_default_spec();
        auto bot = envs::turtlebot_system(spec);
        for (Action a : {envs::TurnLeft, envs::TurnRight}) {
            t.check(counts(bot.transitions[a]) == turn_expected, "turtlebot action " + bot.actions[a]);
        }
        RationalVector cur = envs::turtlebot_state(spec, 1, make_rational(1, 2));
        Rational start = cur[7];
        bool consistent = true;
        for (int i = 0; i < 12; ++i) {
            RationalVector next = envs::turtlebot_step(spec, cur, envs::TurnRight);
            consistent = consistent && bot.transitions[envs::TurnRight].holds(cur, next);
            cur = next;
        }
        t.check(consistent && cur[7] - start == -1, "12 RIGHT turns change x7 by " +
                                                        to_string(Rational(cur[7] - start)));
        all &= report(9, t.failed == 0, detail(t, "transcription and turn checks"));
    }

    std::cout << (all ? "ALL CRITERIA PASS" : "SOME CRITERIA FAIL") << std::endl;
    return all ? 0 : 1;
}
