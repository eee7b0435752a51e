#include "kstep/explain.hpp"

#include <algorithm>
#include <chrono>

namespace kstep {

std::string_view to_string(Target t)
{
    return t == Target::Minimal ? "minimal" : "minimum";
}

std::string_view to_string(Guarantee g)
{
    switch (g) {
    case Guarantee::Minimal: return "minimal";
    case Guarantee::Minimum: return "minimum";
    case Guarantee::None: return "none";
    }
    return "?";
}

bool CxpCatalog::has_subset_of(const StepMask& c) const
{
    return std::any_of(members.begin(), members.end(),
                       [&](const StepMask& m) { return m.subset_of(c); });
}

bool CxpCatalog::add(const StepMask& c)
{
    if (has_subset_of(c)) {
        return false;
    }
    members.erase(std::remove_if(members.begin(), members.end(),
                                 [&](const StepMask& m) { return c.subset_of(m); }),
                  members.end());
    StepMask copy = c;
    copy.role = MaskRole::Contrastive;
    members.push_back(std::move(copy));
    return true;
}

std::vector<ElementSet> CxpCatalog::family(std::size_t m) const
{
    std::vector<ElementSet> out;
    for (const auto& c : members) {
        out.push_back(to_elements(c, m));
    }
    return out;
}

SolveStats ExplainResult::totals() const
{
    SolveStats total;
    for (const auto& r : log.records()) {
        total += r.stats;
    }
    return total;
}

ElementSet to_elements(const StepMask& mask, std::size_t m)
{
    ElementSet out;
    for (std::size_t s = 0; s < mask.k(); ++s) {
        for (std::size_t f : mask.steps[s]) {
            out.push_back(s * m + f);
        }
    }
    return out;
}

StepMask to_mask(const ElementSet& elements, std::size_t k, std::size_t m, MaskRole role)
{
    StepMask mask = StepMask::empty(k, role);
    for (std::size_t e : elements) {
        mask.steps.at(e / m).push_back(e % m);
    }
    for (auto& step : mask.steps) {
        std::sort(step.begin(), step.end());
    }
    return mask;
}

void require_explainable(const ReactiveSystem& sys, const Network& net, const Execution& exec,
                         RivalMode mode)
{
    if (auto check = validate_execution(sys, net, exec); !check) {
        throw ExplainError("invalid execution: " + check.problem);
    }
    for (std::size_t i = 0; i < exec.k(); ++i) {
        if (deviates(forward(net, exec.states[i]), exec.actions[i], mode)) {
            throw ExplainError("step " + std::to_string(i) +
                               ": the chosen action ties with a rival, so not even the full "
                               "mask is an explanation");
        }
    }
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

SolveResult dispatch(const BuiltQuery& bq, const char* kind, std::size_t step,
                     const ExplainOptions& opts, QueryLog* log)
{
    SolveResult r = solve(bq.query, opts.solver);
    if (log) {
        log->add({kind, step, bq.query.network_copy_count(), r.verdict.status, r.stats});
    }
    if (r.verdict.status == Status::Timeout) {
        throw ExplainTimeout(std::string(kind) + " query at step " + std::to_string(step) +
                             " exhausted its budget");
    }
    return r;
}

/// Lexicographic k-subsets of {0..m-1}.
std::vector<FeatureSet> subsets_of_size(std::size_t m, std::size_t size)
{
    std::vector<FeatureSet> out;
    if (size > m) {
        return out;
    }
    FeatureSet cur(size);
    for (std::size_t i = 0; i < size; ++i) {
        cur[i] = i;
    }
    while (true) {
        out.push_back(cur);
        std::size_t i = size;
        while (i > 0 && cur[i - 1] == m - size + i - 1) {
            --i;
        }
        if (i == 0) {
            return out;
        }
        ++cur[i - 1];
        for (std::size_t j = i; j < size; ++j) {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

bool is_subset(const FeatureSet& a, const FeatureSet& b)
{
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

ElementSet without(const ElementSet& set, std::size_t e)
{
    ElementSet out;
    for (std::size_t x : set) {
        if (x != e) {
            out.push_back(x);
        }
    }
    return out;
}

ElementSet all_elements(std::size_t n)
{
    ElementSet out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = i;
    }
    return out;
}

// Explanation search over an abstract element universe.
struct Engine {
    std::size_t universe = 0;
    // Nullopt when `fixed` is an explanation; otherwise the freed elements the
    // counterexample changes (a contrastive set disjoint from `fixed`).
    std::function<std::optional<ElementSet>(const ElementSet& fixed)> counterexample;
    std::function<bool(const ElementSet& freed)> contrastive;
};

ElementSet greedy_deletion(const Engine& engine)
{
    ElementSet fixed = all_elements(engine.universe);
    for (std::size_t e = 0; e < engine.universe; ++e) {
        ElementSet trial = without(fixed, e);
        if (!engine.counterexample(trial)) {
            fixed = std::move(trial);
        }
    }
    return fixed;
}

ElementSet shrink_contrastive(const Engine& engine, ElementSet c)
{
    for (std::size_t e : ElementSet(c)) {
        ElementSet trial = without(c, e);
        if (!trial.empty() && engine.contrastive(trial)) {
            c = std::move(trial);
        }
    }
    return c;
}

ElementSet implicit_hitting_set(const Engine& engine, std::vector<ElementSet>* found = nullptr)
{
    std::vector<ElementSet> gamma;
    while (true) {
        ElementSet h = minimum_hitting_set(gamma, engine.universe);
        auto cex = engine.counterexample(h);
        if (!cex) {
            if (found) {
                *found = std::move(gamma);
            }
            return h;
        }
        if (cex->empty()) {
            throw std::logic_error("counterexample changes no freed feature");
        }
        gamma.push_back(shrink_contrastive(engine, std::move(*cex)));
    }
}

Engine single_engine(std::shared_ptr<const Network> net, const std::vector<FeatureDomain>& domains,
                     std::span<const Rational> v, Action c, const ExplainOptions& opts,
                     QueryLog* log, std::size_t step)
{
    RationalVector point(v.begin(), v.end());
    Engine e;
    e.universe = domains.size();
    e.counterexample = [=, &domains, &opts](const ElementSet& fixed) -> std::optional<ElementSet> {
        auto bq = explanation_query_single(net, domains, point, c, fixed, opts.query);
        auto r = dispatch(bq, "single", step, opts, log);
        if (!r.verdict.sat()) {
            return std::nullopt;
        }
        ElementSet diff;
        for (std::size_t f = 0; f < domains.size(); ++f) {
            if ((*r.verdict.witness)[bq.blocks[0][f]] != point[f]) {
                diff.push_back(f);
            }
        }
        return diff;
    };
    e.contrastive = [=, &domains, &opts](const ElementSet& freed) {
        auto bq = contrastive_query_single(net, domains, point, c, freed, opts.query);
        return dispatch(bq, "single", step, opts, log).verdict.sat();
    };
    return e;
}

Engine multi_engine(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                    const Execution& exec, const ExplainOptions& opts, QueryLog* log)
{
    const std::size_t k = exec.k();
    const std::size_t m = sys.m;
    Engine e;
    e.universe = k * m;
    e.counterexample = [=, &sys, &exec, &opts](const ElementSet& fixed) -> std::optional<ElementSet> {
        StepMask E = to_mask(fixed, k, m, MaskRole::Explanation);
        auto bq = explanation_query_multi(sys, net, exec, E, opts.query);
        auto r = dispatch(bq, "multi", k - 1, opts, log);
        if (!r.verdict.sat()) {
            return std::nullopt;
        }
        const auto& w = *r.verdict.witness;
        auto dev = deviation_step(sys, *net, exec, bq, w, opts.query.rival);
        if (!dev) {
            throw std::logic_error("multi-step witness has no transition-consistent deviation");
        }
        ElementSet diff;
        for (std::size_t s = 0; s <= *dev; ++s) {
            for (std::size_t f = 0; f < m; ++f) {
                if (!E.contains(s, f) && w[bq.blocks[s][f]] != exec.states[s][f]) {
                    diff.push_back(s * m + f);
                }
            }
        }
        return diff;
    };
    e.contrastive = [=, &sys, &exec, &opts](const ElementSet& freed) {
        StepMask C = to_mask(freed, k, m, MaskRole::Contrastive);
        auto bq = contrastive_query_multi(sys, net, exec, C, opts.query);
        return dispatch(bq, "contrastive_multi", k - 1, opts, log).verdict.sat();
    };
    return e;
}

// Same questions as multi_engine, asked one horizon at a time with a single
// network copy each: E fails iff some prefix query is SAT, and C is
// contrastive iff some window 0..i with C freed is SAT.
Engine prefix_engine(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                     const Execution& exec, const ExplainOptions& opts, QueryLog* log)
{
    const std::size_t k = exec.k();
    const std::size_t m = sys.m;
    Engine e;
    e.universe = k * m;
    e.counterexample = [=, &sys, &exec, &opts](const ElementSet& fixed) -> std::optional<ElementSet> {
        StepMask E = to_mask(fixed, k, m, MaskRole::Explanation);
        for (std::size_t i = 0; i < k; ++i) {
            auto bq = explanation_query_prefix(sys, net, exec, E, i, opts.query);
            auto r = dispatch(bq, "prefix", i, opts, log);
            if (!r.verdict.sat()) {
                continue;
            }
            const auto& w = *r.verdict.witness;
            ElementSet diff;
            for (std::size_t s = 0; s <= i; ++s) {
                for (std::size_t f = 0; f < m; ++f) {
                    if (!E.contains(s, f) && w[bq.blocks[s][f]] != exec.states[s][f]) {
                        diff.push_back(s * m + f);
                    }
                }
            }
            return diff;
        }
        return std::nullopt;
    };
    e.contrastive = [=, &sys, &exec, &opts](const ElementSet& freed) {
        StepMask C = to_mask(freed, k, m, MaskRole::Contrastive);
        for (std::size_t i = 0; i < k; ++i) {
            auto bq = contrastive_query_window(sys, net, exec, C, 0, i, opts.query);
            if (dispatch(bq, "window", i, opts, log).verdict.sat()) {
                return true;
            }
        }
        return false;
    };
    return e;
}

FeatureSet to_feature_set(const ElementSet& e)
{
    return FeatureSet(e.begin(), e.end());
}

// True when the prefix query for step i is UNSAT, i.e. steps 0..i of E force a_i.
bool prefix_holds(const ReactiveSystem& sys, const std::shared_ptr<const Network>& net,
                  const Execution& exec, const StepMask& E, std::size_t i,
                  const ExplainOptions& opts, QueryLog* log)
{
    auto bq = explanation_query_prefix(sys, net, exec, E, i, opts.query);
    return dispatch(bq, "prefix", i, opts, log).verdict.unsat();
}

// Runs check(i) for every candidate index, concurrently when configured, and
// returns the results in candidate order.
std::vector<char> batch(std::size_t n, const ExplainOptions& opts,
                        const std::function<bool(std::size_t)>& check)
{
    std::vector<char> out(n, 0);
    kernels::for_each(opts.exec, n, [&](std::size_t idx) { out[idx] = check(idx) ? 1 : 0; });
    return out;
}

class Method3Minimum {
public:
    Method3Minimum(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                   const Execution& exec, const ExplainOptions& opts, QueryLog* log,
                   StepMask seed)
        : sys_(sys), net_(std::move(net)), exec_(exec), opts_(opts), log_(log),
          best_(std::move(seed)), best_size_(best_.size())
    {}

    StepMask run()
    {
        StepMask E = StepMask::full(exec_.k(), sys_.m);
        search(E, 0, 0);
        return best_;
    }

private:
    void search(StepMask& E, std::size_t i, std::size_t cost)
    {
        if (i == exec_.k()) {
            if (cost < best_size_) {
                best_ = E;
                best_size_ = cost;
            }
            return;
        }
        const std::size_t m = sys_.m;
        // Subsets of a non-forcing set never force either.
        std::vector<FeatureSet> failing;
        for (std::size_t card = 0; card <= m; ++card) {
            if (cost + card >= best_size_) {
                return;
            }
            std::vector<FeatureSet> candidates;
            for (auto& c : subsets_of_size(m, card)) {
                bool dominated = std::any_of(failing.begin(), failing.end(),
                                             [&](const FeatureSet& f) { return is_subset(c, f); });
                if (!dominated) {
                    candidates.push_back(std::move(c));
                }
            }
            auto holds = batch(candidates.size(), opts_, [&](std::size_t idx) {
                StepMask trial = E;
                trial.steps[i] = candidates[idx];
                return prefix_holds(sys_, net_, exec_, trial, i, opts_, log_);
            });
            for (std::size_t idx = 0; idx < candidates.size(); ++idx) {
                if (!holds[idx]) {
                    failing.push_back(candidates[idx]);
                    continue;
                }
                if (cost + card >= best_size_) {
                    break;
                }
                FeatureSet saved = E.steps[i];
                E.steps[i] = candidates[idx];
                search(E, i + 1, cost + card);
                E.steps[i] = std::move(saved);
            }
        }
    }

    const ReactiveSystem& sys_;
    std::shared_ptr<const Network> net_;
    const Execution& exec_;
    const ExplainOptions& opts_;
    QueryLog* log_;
    StepMask best_;
    std::size_t best_size_;
};

StepMask single_step_mask(std::size_t k, std::size_t step, FeatureSet features)
{
    StepMask mask = StepMask::empty(k, MaskRole::Contrastive);
    mask.steps[step] = std::move(features);
    return mask;
}

}  // namespace

FeatureSet greedy_minimal_single(std::shared_ptr<const Network> net,
                                 const std::vector<FeatureDomain>& domains,
                                 std::span<const Rational> v, Action c, const ExplainOptions& opts,
                                 QueryLog* log)
{
    return to_feature_set(greedy_deletion(single_engine(std::move(net), domains, v, c, opts, log, 0)));
}

FeatureSet minimum_single(std::shared_ptr<const Network> net,
                          const std::vector<FeatureDomain>& domains, std::span<const Rational> v,
                          Action c, const ExplainOptions& opts, QueryLog* log)
{
    return to_feature_set(
        implicit_hitting_set(single_engine(std::move(net), domains, v, c, opts, log, 0)));
}

std::vector<FeatureSet> enumerate_cxps_single(const ReactiveSystem& sys,
                                              std::shared_ptr<const Network> net,
                                              const Execution& exec, std::size_t i,
                                              const ExplainOptions& opts, QueryLog* log)
{
    if (i >= exec.k()) {
        throw ExplainError("step index out of range");
    }
    std::vector<FeatureSet> found;
    for (std::size_t card = 1; card <= sys.m; ++card) {
        std::vector<FeatureSet> candidates;
        for (auto& c : subsets_of_size(sys.m, card)) {
            bool skip = std::any_of(found.begin(), found.end(),
                                    [&](const FeatureSet& f) { return is_subset(f, c); });
            if (!skip) {
                candidates.push_back(std::move(c));
            }
        }
        auto sat = batch(candidates.size(), opts, [&](std::size_t idx) {
            auto bq = contrastive_query_single(net, sys.domains, exec.states[i], exec.actions[i],
                                               candidates[idx], opts.query);
            return dispatch(bq, "single", i, opts, log).verdict.sat();
        });
        for (std::size_t idx = 0; idx < candidates.size(); ++idx) {
            if (sat[idx]) {
                found.push_back(candidates[idx]);
            }
        }
    }
    return found;
}

ExplainResult method1(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                      const Execution& exec, Target target, const ExplainOptions& opts)
{
    require_explainable(sys, *net, exec, opts.query.rival);
    auto start = Clock::now();
    ExplainResult res;
    res.method = "method1";
    res.target = target;
    Engine engine = multi_engine(sys, net, exec, opts, &res.log);
    ElementSet e = target == Target::Minimal ? greedy_deletion(engine) : implicit_hitting_set(engine);
    res.mask = to_mask(e, exec.k(), sys.m, MaskRole::Explanation);
    res.guarantee = target == Target::Minimal ? Guarantee::Minimal : Guarantee::Minimum;
    res.seconds = seconds_since(start);
    return res;
}

ExplainResult method2(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                      const Execution& exec, Target target, const ExplainOptions& opts)
{
    require_explainable(sys, *net, exec, opts.query.rival);
    auto start = Clock::now();
    ExplainResult res;
    res.method = "method2";
    res.target = target;
    res.mask = StepMask::empty(exec.k());
    for (std::size_t i = 0; i < exec.k(); ++i) {
        Engine engine =
            single_engine(net, sys.domains, exec.states[i], exec.actions[i], opts, &res.log, i);
        ElementSet e =
            target == Target::Minimal ? greedy_deletion(engine) : implicit_hitting_set(engine);
        res.mask.steps[i] = to_feature_set(e);
    }
    res.guarantee = Guarantee::None;
    res.seconds = seconds_since(start);
    return res;
}

ExplainResult method3_minimal(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                              const Execution& exec, const ExplainOptions& opts)
{
    require_explainable(sys, *net, exec, opts.query.rival);
    auto start = Clock::now();
    ExplainResult res;
    res.method = "method3";
    res.target = Target::Minimal;
    StepMask E = StepMask::full(exec.k(), sys.m);
    for (std::size_t i = 0; i < exec.k(); ++i) {
        for (std::size_t f = 0; f < sys.m; ++f) {
            StepMask trial = E;
            auto& step = trial.steps[i];
            step.erase(std::remove(step.begin(), step.end(), f), step.end());
            if (prefix_holds(sys, net, exec, trial, i, opts, &res.log)) {
                E = std::move(trial);
            }
        }
    }
    res.mask = std::move(E);
    res.guarantee = Guarantee::Minimal;
    res.seconds = seconds_since(start);
    return res;
}

ExplainResult method3_minimum(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                              const Execution& exec, const ExplainOptions& opts)
{
    auto start = Clock::now();
    ExplainResult res = method3_minimal(sys, net, exec, opts);
    Method3Minimum search(sys, net, exec, opts, &res.log, res.mask);
    res.mask = search.run();
    res.target = Target::Minimum;
    res.guarantee = Guarantee::Minimum;
    res.seconds = seconds_since(start);
    return res;
}

namespace {

// Features of step j-1 connected, through atoms of T for `action`, to the
// freed features of step j.
FeatureSet linked_predecessors(const ReactiveSystem& sys, Action action, const FeatureSet& freed)
{
    const auto& atoms = sys.transitions[action].atoms;
    std::vector<char> linked(sys.m, 0);
    std::vector<char> used(atoms.size(), 0);
    for (bool grew = true; grew;) {
        grew = false;
        for (std::size_t a = 0; a < atoms.size(); ++a) {
            if (used[a]) {
                continue;
            }
            const auto& terms = std::visit(
                [](const auto& x) -> const std::vector<Term<StateVar>>& { return x.terms; }, atoms[a]);
            bool touches = std::any_of(terms.begin(), terms.end(), [&](const Term<StateVar>& t) {
                return t.var.block == Block::Current
                           ? static_cast<bool>(linked[t.var.feature])
                           : std::binary_search(freed.begin(), freed.end(), t.var.feature);
            });
            if (!touches) {
                continue;
            }
            used[a] = 1;
            for (const auto& t : terms) {
                if (t.var.block == Block::Current && !linked[t.var.feature]) {
                    linked[t.var.feature] = 1;
                    grew = true;
                }
            }
        }
    }
    FeatureSet out;
    for (std::size_t f = 0; f < sys.m; ++f) {
        if (linked[f]) {
            out.push_back(f);
        }
    }
    return out;
}

}  // namespace

std::vector<StepMask> rie(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                          const Execution& exec, const StepMask& window, std::size_t i,
                          std::size_t j, const CxpCatalog& known, const ExplainOptions& opts,
                          QueryLog* log)
{
    if (j > i || i >= exec.k() || window.k() != exec.k()) {
        throw ExplainError("rie: bad window");
    }
    if (j == 0) {
        return {window};
    }
    // Independent: reachable with step j-1 left exactly as executed.
    {
        auto bq = contrastive_query_window(sys, net, exec, window, j - 1, i, opts.query);
        if (dispatch(bq, "window", i, opts, log).verdict.sat()) {
            return {window};
        }
    }
    // Only features linked to the freed features of step j through the
    // transition into j can matter; any other freed feature sits in a
    // component the execution itself satisfies.
    const FeatureSet linked = linked_predecessors(sys, exec.actions[j - 1], window.steps[j]);
    {
        StepMask widest = window;
        widest.steps[j - 1] = linked;
        auto bq = contrastive_query_window(sys, net, exec, widest, j - 1, i, opts.query);
        if (linked.empty() || !dispatch(bq, "window", i, opts, log).verdict.sat()) {
            return {};
        }
    }
    std::vector<StepMask> results;
    std::vector<FeatureSet> reachable;
    for (std::size_t card = 1; card <= linked.size(); ++card) {
        std::vector<StepMask> candidates;
        for (auto& c : subsets_of_size(linked.size(), card)) {
            for (auto& f : c) {
                f = linked[f];
            }
            if (std::any_of(reachable.begin(), reachable.end(),
                            [&](const FeatureSet& r) { return is_subset(r, c); })) {
                continue;
            }
            StepMask extended = window;
            extended.steps[j - 1] = std::move(c);
            bool covered = known.has_subset_of(extended) ||
                           std::any_of(results.begin(), results.end(),
                                       [&](const StepMask& r) { return r.subset_of(extended); });
            if (!covered) {
                candidates.push_back(std::move(extended));
            }
        }
        auto sat = batch(candidates.size(), opts, [&](std::size_t idx) {
            auto bq = contrastive_query_window(sys, net, exec, candidates[idx], j - 1, i, opts.query);
            return dispatch(bq, "window", i, opts, log).verdict.sat();
        });
        for (std::size_t idx = 0; idx < candidates.size(); ++idx) {
            if (!sat[idx]) {
                continue;
            }
            reachable.push_back(candidates[idx].steps[j - 1]);
            for (auto& r : rie(sys, net, exec, candidates[idx], i, j - 1, known, opts, log)) {
                results.push_back(std::move(r));
            }
        }
    }
    return results;
}

ExplainResult method4(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                      const Execution& exec, const ExplainOptions& opts)
{
    require_explainable(sys, *net, exec, opts.query.rival);
    auto start = Clock::now();
    ExplainResult res;
    res.method = "method4";
    res.target = Target::Minimum;
    const std::size_t k = exec.k();
    const std::size_t m = sys.m;
    CxpCatalog catalog;
    for (std::size_t i = 0; i < k; ++i) {
        for (auto& c : enumerate_cxps_single(sys, net, exec, i, opts, &res.log)) {
            StepMask window = single_step_mask(k, i, std::move(c));
            if (catalog.has_subset_of(window)) {
                continue;
            }
            for (auto& found : rie(sys, net, exec, window, i, i, catalog, opts, &res.log)) {
                catalog.add(found);
            }
        }
    }
    // The catalog can miss members or hold non-minimal ones when the
    // backward enumeration skips candidates; counterexamples repair it.
    Engine engine = prefix_engine(sys, net, exec, opts, &res.log);
    while (true) {
        ElementSet h = minimum_hitting_set(catalog.family(m), k * m);
        auto cex = engine.counterexample(h);
        if (!cex) {
            res.mask = to_mask(h, k, m, MaskRole::Explanation);
            break;
        }
        ++res.repair_rounds;
        catalog.add(to_mask(shrink_contrastive(engine, std::move(*cex)), k, m, MaskRole::Contrastive));
    }
    res.catalog = std::move(catalog);
    res.guarantee = Guarantee::Minimum;
    res.seconds = seconds_since(start);
    return res;
}

bool is_explanation(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                    const Execution& exec, const StepMask& E, const ExplainOptions& opts)
{
    auto bq = explanation_query_multi(sys, std::move(net), exec, E, opts.query);
    return dispatch(bq, "multi", exec.k() - 1, opts, nullptr).verdict.unsat();
}

bool is_contrastive(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                    const Execution& exec, const StepMask& C, const ExplainOptions& opts)
{
    auto bq = contrastive_query_multi(sys, std::move(net), exec, C, opts.query);
    return dispatch(bq, "contrastive_multi", exec.k() - 1, opts, nullptr).verdict.sat();
}

bool is_minimal_explanation(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                            const Execution& exec, const StepMask& E, const ExplainOptions& opts)
{
    if (!is_explanation(sys, net, exec, E, opts)) {
        return false;
    }
    for (std::size_t s = 0; s < E.k(); ++s) {
        for (std::size_t f : E.steps[s]) {
            StepMask trial = E;
            auto& step = trial.steps[s];
            step.erase(std::remove(step.begin(), step.end(), f), step.end());
            if (is_explanation(sys, net, exec, trial, opts)) {
                return false;
            }
        }
    }
    return true;
}

bool validate_candidate(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                        const Execution& exec, const StepMask& mask, const CxpCatalog* catalog,
                        const ExplainOptions& opts)
{
    mask.validate(exec.k(), sys.m);
    if (catalog) {
        return hits_all(to_elements(mask, sys.m), catalog->family(sys.m));
    }
    return is_explanation(sys, std::move(net), exec, mask, opts);
}

}  // namespace kstep
