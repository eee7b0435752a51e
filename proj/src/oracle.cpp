#include "kstep/oracle.hpp"

#include <algorithm>
#include <set>

namespace kstep {

namespace {

void require_finite(const ReactiveSystem& sys)
{
    for (std::size_t f = 0; f < sys.m; ++f) {
        if (!sys.domains[f].is_finite()) {
            throw OracleCapExceeded("oracle needs finite domains; feature " + std::to_string(f) +
                                    " is an interval");
        }
    }
}

// Atoms of one action's constraint set, grouped by the last next-state
// feature they mention so that successors can be pruned feature by feature.
struct Staged {
    std::vector<std::vector<const StateAtom*>> after;  // index f+1: checked once f is set
};

Staged stage(const ConstraintSet& cs, std::size_t m)
{
    Staged st;
    st.after.resize(m + 1);
    for (const auto& atom : cs.atoms) {
        std::size_t last = 0;
        std::visit(
            [&](const auto& a) {
                for (const auto& t : a.terms) {
                    if (t.var.block == Block::Next) {
                        last = std::max(last, t.var.feature + 1);
                    }
                }
            },
            atom);
        st.after[last].push_back(&atom);
    }
    return st;
}

class Enumerator {
public:
    Enumerator(const ReactiveSystem& sys, const OracleOptions& opts) : sys_(sys), opts_(opts)
    {
        require_finite(sys);
        for (const auto& t : sys.transitions) {
            staged_.push_back(stage(t, sys.m));
        }
    }

    void charge(std::uint64_t n = 1)
    {
        used_ += n;
        if (used_ > opts_.cap) {
            throw OracleCapExceeded("oracle evaluation cap of " + std::to_string(opts_.cap) +
                                    " exceeded");
        }
    }

    /// Calls visit(next) for every state next with T_a(current, next).
    template <class Visit>
    void successors(const RationalVector& current, Action a, Visit&& visit)
    {
        RationalVector next(sys_.m);
        const Staged& st = staged_[a];
        auto ok = [&](std::size_t level) {
            auto value_of = [&](const StateVar& v) -> const Rational& {
                return v.block == Block::Current ? current[v.feature] : next[v.feature];
            };
            for (const StateAtom* atom : st.after[level]) {
                if (!holds(*atom, value_of)) {
                    return false;
                }
            }
            return true;
        };
        if (!ok(0)) {
            return;
        }
        assign(0, next, ok, visit);
    }

    template <class Visit>
    void all_states(Visit&& visit)
    {
        RationalVector s(sys_.m);
        auto ok = [](std::size_t) { return true; };
        assign(0, s, ok, visit);
    }

private:
    template <class Ok, class Visit>
    void assign(std::size_t f, RationalVector& next, Ok& ok, Visit& visit)
    {
        if (f == sys_.m) {
            visit(const_cast<const RationalVector&>(next));
            return;
        }
        for (const auto& v : sys_.domains[f].values()) {
            next[f] = v;
            if (ok(f + 1)) {
                assign(f + 1, next, ok, visit);
            }
        }
    }

    const ReactiveSystem& sys_;
    const OracleOptions& opts_;
    std::vector<Staged> staged_;
    std::uint64_t used_ = 0;
};

ElementSet sorted_unique(ElementSet s)
{
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

bool disjoint(const ElementSet& a, const ElementSet& b)
{
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i == *j) {
            return false;
        }
        *i < *j ? ++i : ++j;
    }
    return true;
}

bool hs_search(const std::vector<ElementSet>& family, std::vector<std::size_t>& chosen,
               std::size_t budget)
{
    for (const auto& member : family) {
        if (disjoint(member, sorted_unique(chosen))) {
            if (budget == 0) {
                return false;
            }
            for (std::size_t e : member) {
                chosen.push_back(e);
                bool found = hs_search(family, chosen, budget - 1);
                chosen.pop_back();
                if (found) {
                    return true;
                }
            }
            return false;
        }
    }
    return true;
}

}  // namespace

std::vector<Deviation> oracle_deviations(const ReactiveSystem& sys, const Network& net,
                                         const Execution& exec, const OracleOptions& opts)
{
    if (auto check = validate_execution(sys, net, exec); !check) {
        throw ModelError("oracle: invalid execution: " + check.problem);
    }
    Enumerator en(sys, opts);
    const std::size_t m = sys.m;
    std::set<Deviation> found;
    ElementSet diff;
    std::function<void(const RationalVector&, std::size_t)> visit_state =
        [&](const RationalVector& x, std::size_t step) {
            en.charge();
            std::size_t mark = diff.size();
            for (std::size_t f = 0; f < m; ++f) {
                if (x[f] != exec.states[step][f]) {
                    diff.push_back(step * m + f);
                }
            }
            if (deviates(forward(net, x), exec.actions[step], opts.rival)) {
                found.insert({diff, step});
            } else if (step + 1 < exec.k()) {
                en.successors(x, exec.actions[step],
                              [&](const RationalVector& next) { visit_state(next, step + 1); });
            }
            diff.resize(mark);
        };
    en.all_states([&](const RationalVector& x) { visit_state(x, 0); });
    return {found.begin(), found.end()};
}

std::vector<Sequence> oracle_all_sequences(const ReactiveSystem& sys, const Network& net,
                                           std::size_t k, const OracleOptions& opts)
{
    require_finite(sys);
    sys.validate_against(net);
    if (k == 0) {
        throw ModelError("oracle: k must be positive");
    }
    // |F|^k must fit under the cap before anything is enumerated.
    long double total = 1;
    for (const auto& d : sys.domains) {
        total *= static_cast<long double>(d.values().size());
    }
    long double power = 1;
    for (std::size_t i = 0; i < k; ++i) {
        power *= total;
    }
    if (power > static_cast<long double>(opts.cap)) {
        throw OracleCapExceeded("oracle: |F|^k exceeds the cap of " + std::to_string(opts.cap));
    }
    Enumerator en(sys, opts);
    std::vector<Sequence> out;
    Sequence cur;
    std::function<void(const RationalVector&)> visit = [&](const RationalVector& x) {
        en.charge();
        Action a = classify(net, x);
        cur.states.push_back(x);
        cur.actions.push_back(a);
        if (cur.states.size() == k) {
            out.push_back(cur);
        } else {
            en.successors(x, a, visit);
        }
        cur.states.pop_back();
        cur.actions.pop_back();
    };
    en.all_states([&](const RationalVector& x) {
        if (sys.initial.holds(x, {})) {
            visit(x);
        }
    });
    return out;
}

bool oracle_is_explanation(const ReactiveSystem& sys, const Network& net, const Execution& exec,
                           const StepMask& mask, const OracleOptions& opts)
{
    mask.validate(exec.k(), sys.m);
    ElementSet fixed = to_elements(mask, sys.m);
    for (const auto& d : oracle_deviations(sys, net, exec, opts)) {
        if (disjoint(d.diff, fixed)) {
            return false;
        }
    }
    return true;
}

bool oracle_is_contrastive(const ReactiveSystem& sys, const Network& net, const Execution& exec,
                           const StepMask& mask, const OracleOptions& opts)
{
    mask.validate(exec.k(), sys.m);
    ElementSet freed = to_elements(mask, sys.m);
    for (const auto& d : oracle_deviations(sys, net, exec, opts)) {
        if (std::includes(freed.begin(), freed.end(), d.diff.begin(), d.diff.end())) {
            return true;
        }
    }
    return false;
}

std::vector<ElementSet> minimal_sets(std::vector<ElementSet> family)
{
    std::sort(family.begin(), family.end(), [](const ElementSet& a, const ElementSet& b) {
        return a.size() != b.size() ? a.size() < b.size() : a < b;
    });
    family.erase(std::unique(family.begin(), family.end()), family.end());
    std::vector<ElementSet> out;
    for (auto& s : family) {
        bool dominated = std::any_of(out.begin(), out.end(), [&](const ElementSet& small) {
            return std::includes(s.begin(), s.end(), small.begin(), small.end());
        });
        if (!dominated) {
            out.push_back(std::move(s));
        }
    }
    return out;
}

std::size_t brute_force_hitting_set_size(const std::vector<ElementSet>& family)
{
    for (const auto& s : family) {
        if (s.empty()) {
            throw std::invalid_argument("empty member has no hitting set");
        }
    }
    std::vector<std::size_t> chosen;
    for (std::size_t budget = 0;; ++budget) {
        if (hs_search(family, chosen, budget)) {
            return budget;
        }
    }
}

std::size_t oracle_minimum_explanation_size(const ReactiveSystem& sys, const Network& net,
                                            const Execution& exec, const OracleOptions& opts)
{
    std::vector<ElementSet> diffs;
    for (auto& d : oracle_deviations(sys, net, exec, opts)) {
        diffs.push_back(std::move(d.diff));
    }
    auto family = minimal_sets(std::move(diffs));
    for (const auto& s : family) {
        if (s.empty()) {
            throw ModelError("oracle: the execution deviates with nothing freed (tied decision)");
        }
    }
    return brute_force_hitting_set_size(family);
}

CxpCatalog oracle_minimal_cxps(const ReactiveSystem& sys, const Network& net,
                               const Execution& exec, const OracleOptions& opts)
{
    std::vector<ElementSet> diffs;
    for (auto& d : oracle_deviations(sys, net, exec, opts)) {
        diffs.push_back(std::move(d.diff));
    }
    CxpCatalog catalog;
    for (const auto& s : minimal_sets(std::move(diffs))) {
        catalog.members.push_back(to_mask(s, exec.k(), sys.m, MaskRole::Contrastive));
    }
    return catalog;
}

namespace {

// Features (as element indices) that differ from v at every deviating input.
std::vector<ElementSet> single_deviation_diffs(const Network& net,
                                               const std::vector<FeatureDomain>& domains,
                                               std::span<const Rational> v, Action c,
                                               const OracleOptions& opts)
{
    ReactiveSystem sys;
    sys.m = domains.size();
    sys.domains = domains;
    require_finite(sys);
    Enumerator en(sys, opts);
    std::vector<ElementSet> diffs;
    en.all_states([&](const RationalVector& x) {
        en.charge();
        if (deviates(forward(net, x), c, opts.rival)) {
            ElementSet d;
            for (std::size_t f = 0; f < x.size(); ++f) {
                if (x[f] != v[f]) {
                    d.push_back(f);
                }
            }
            diffs.push_back(std::move(d));
        }
    });
    return diffs;
}

}  // namespace

std::vector<FeatureSet> oracle_single_minimal_cxps(const Network& net,
                                                   const std::vector<FeatureDomain>& domains,
                                                   std::span<const Rational> v, Action c,
                                                   const OracleOptions& opts)
{
    auto mins = minimal_sets(single_deviation_diffs(net, domains, v, c, opts));
    std::vector<FeatureSet> out;
    for (auto& s : mins) {
        out.push_back(FeatureSet(s.begin(), s.end()));
    }
    return out;
}

bool oracle_single_is_explanation(const Network& net, const std::vector<FeatureDomain>& domains,
                                  std::span<const Rational> v, Action c, const FeatureSet& E,
                                  const OracleOptions& opts)
{
    ElementSet fixed(E.begin(), E.end());
    for (const auto& d : single_deviation_diffs(net, domains, v, c, opts)) {
        if (disjoint(d, fixed)) {
            return false;
        }
    }
    return true;
}

std::size_t oracle_single_minimum_size(const Network& net,
                                       const std::vector<FeatureDomain>& domains,
                                       std::span<const Rational> v, Action c,
                                       const OracleOptions& opts)
{
    auto family = minimal_sets(single_deviation_diffs(net, domains, v, c, opts));
    return brute_force_hitting_set_size(family);
}

}  // namespace kstep
