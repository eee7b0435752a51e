#include "doctest.h"
#include "kstep/envs.hpp"
#include "kstep/oracle.hpp"
#include "kstep/queries.hpp"
#include "kstep/verifier.hpp"
#include "support.hpp"

using namespace kstep;

namespace {

bool sat(const BuiltQuery& q)
{
    auto r = solve(q.query);
    REQUIRE(r.verdict.status != Status::Timeout);
    return r.verdict.sat();
}

std::vector<FeatureSet> all_subsets(std::size_t m)
{
    std::vector<FeatureSet> out;
    for (std::size_t bits = 0; bits < (std::size_t{1} << m); ++bits) {
        FeatureSet s;
        for (std::size_t f = 0; f < m; ++f) {
            if (bits >> f & 1U) {
                s.push_back(f);
            }
        }
        out.push_back(s);
    }
    return out;
}

std::vector<StepMask> all_masks(std::size_t k, std::size_t m, MaskRole role)
{
    std::vector<StepMask> out{StepMask::empty(k, role)};
    auto subsets = all_subsets(m);
    for (std::size_t s = 0; s < k; ++s) {
        std::vector<StepMask> next;
        for (const auto& base : out) {
            for (const auto& sub : subsets) {
                StepMask mk = base;
                mk.steps[s] = sub;
                next.push_back(mk);
            }
        }
        out = std::move(next);
    }
    return out;
}

// Brute force of the single-step definition: every completion of the free
// features keeps c strictly ahead (weak rivals).
bool brute_explains(const Network& net, const std::vector<FeatureDomain>& domains,
                    const RationalVector& v, Action c, const FeatureSet& E)
{
    bool ok = true;
    testing::for_each_point(domains, [&](const RationalVector& x) {
        for (std::size_t f : E) {
            if (x[f] != v[f]) {
                return;
            }
        }
        ok = ok && !deviates(forward(net, x), c, RivalMode::Weak);
    });
    return ok;
}

}  // namespace

TEST_CASE("single-step builders on toy3 match enumeration")
{
    auto net = envs::toy3();
    std::vector<FeatureDomain> domains(3, testing::binary());
    testing::for_each_point(domains, [&](const RationalVector& v) {
        Action c = classify(*net, v);
        for (const auto& E : all_subsets(3)) {
            bool expl = brute_explains(*net, domains, v, c, E);
            CHECK(sat(explanation_query_single(net, domains, v, c, E)) == !expl);
            // Freeing C is contrastive iff pinning the complement is not an explanation.
            FeatureSet rest = complement(E, 3);
            CHECK(sat(contrastive_query_single(net, domains, v, c, rest)) == !expl);
        }
        CHECK_FALSE(sat(explanation_query_single(net, domains, v, c, {0, 1, 2})));
        CHECK_FALSE(sat(contrastive_query_single(net, domains, v, c, {})));
    });
    CHECK_THROWS(explanation_query_single(net, domains, RationalVector{1, 1, 1}, 0, {3}));
}

TEST_CASE("constant network needs no pins")
{
    Layer out{{{0, 0}, {0, 0}}, {1, 0}, false};
    auto net = std::make_shared<const Network>(std::vector<Layer>{out});
    std::vector<FeatureDomain> domains(2, testing::binary());
    CHECK_FALSE(sat(explanation_query_single(net, domains, RationalVector{0, 1}, 0, {})));
}

TEST_CASE("copy-transition multi-step verdicts")
{
    auto inst = envs::copy_transition_instance();
    const auto& [name, sys, net, exec] = inst;
    StepMask e{{{2}, {}}, MaskRole::Explanation};
    CHECK_FALSE(sat(explanation_query_multi(sys, net, exec, e)));
    CHECK(oracle_is_explanation(sys, *net, exec, e));
    CHECK_FALSE(sat(explanation_query_multi(sys, net, exec, StepMask::full(2, 3))));

    StepMask both{{{2}, {2}}, MaskRole::Contrastive};
    StepMask late{{{}, {2}}, MaskRole::Contrastive};
    CHECK(sat(contrastive_query_multi(sys, net, exec, both)));
    CHECK(oracle_is_contrastive(sys, *net, exec, both));
    CHECK(sat(contrastive_query_multi(sys, net, exec, late)) ==
          oracle_is_contrastive(sys, *net, exec, late));
    CHECK_FALSE(sat(contrastive_query_multi(sys, net, exec, late)));
    CHECK_FALSE(sat(contrastive_query_multi(sys, net, exec, StepMask::empty(2))));

    auto ind = envs::independent_instance();
    CHECK(sat(contrastive_query_multi(ind.sys, ind.net, ind.exec, late)));
    CHECK(sat(contrastive_query_multi(ind.sys, ind.net, ind.exec,
                                      StepMask::full(2, 3, MaskRole::Contrastive))));
    CHECK_THROWS(explanation_query_multi(sys, net, exec, StepMask::full(3, 3)));
}

TEST_CASE("window queries")
{
    auto inst = envs::copy_transition_instance();
    const auto& [name, sys, net, exec] = inst;
    // A window of one step is the single-step query.
    for (const auto& C : all_subsets(3)) {
        for (std::size_t i = 0; i < 2; ++i) {
            StepMask mask = StepMask::empty(2, MaskRole::Contrastive);
            mask.steps[i] = C;
            CHECK(sat(contrastive_query_window(sys, net, exec, mask, i, i)) ==
                  sat(contrastive_query_single(net, sys.domains, exec.states[i], exec.actions[i], C)));
        }
    }
    StepMask late{{{}, {2}}, MaskRole::Contrastive};
    CHECK_FALSE(sat(contrastive_query_window(sys, net, exec, late, 0, 1)));
    auto ind = envs::independent_instance();
    CHECK(sat(contrastive_query_window(ind.sys, ind.net, ind.exec, late, 0, 1)));

    auto sp = envs::spurious_instance();
    for (const auto& C0 : all_subsets(3)) {
        StepMask mask{{C0, {2}}, MaskRole::Contrastive};
        CHECK_FALSE(sat(contrastive_query_window(sp.sys, sp.net, sp.exec, mask, 0, 1)));
    }
    CHECK_THROWS(contrastive_query_window(sys, net, exec, late, 1, 0));
    CHECK_THROWS(contrastive_query_window(sys, net, exec, late, 0, 2));
}

TEST_CASE("multi-step builders match the oracle, duality and monotonicity")
{
    std::mt19937_64 rng(3);
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        auto inst = envs::random_binary_instance(seed);
        const auto& sys = inst.sys;
        const auto& net = inst.net;
        const auto& exec = inst.exec;
        const std::size_t k = exec.k();
        const std::size_t m = sys.m;
        auto masks = all_masks(k, m, MaskRole::Explanation);
        std::shuffle(masks.begin(), masks.end(), rng);
        masks.resize(std::min<std::size_t>(masks.size(), 12));
        for (const auto& E : masks) {
            CAPTURE(seed);
            CAPTURE(to_string(E));
            bool not_expl = sat(explanation_query_multi(sys, net, exec, E));
            CHECK(not_expl == !oracle_is_explanation(sys, *net, exec, E));
            StepMask C = E.complement(m);
            CHECK(sat(contrastive_query_multi(sys, net, exec, C)) == not_expl);
            CHECK(oracle_is_contrastive(sys, *net, exec, C) == not_expl);
            // Adding one element never breaks an explanation.
            if (!not_expl) {
                for (std::size_t s = 0; s < k; ++s) {
                    StepMask bigger = E;
                    bigger.steps[s] = complement({}, m);
                    CHECK_FALSE(sat(explanation_query_multi(sys, net, exec, bigger)));
                }
            }
            if (k == 1) {
                CHECK(not_expl == sat(explanation_query_single(net, sys.domains, exec.states[0],
                                                               exec.actions[0], E.steps[0])));
            }
            // Prefix query under a fully fixed suffix agrees with the multi-step query.
            for (std::size_t i = 0; i < k; ++i) {
                StepMask fixed_suffix = E;
                for (std::size_t s = i + 1; s < k; ++s) {
                    fixed_suffix.steps[s] = complement({}, m);
                }
                auto prefix = explanation_query_prefix(sys, net, exec, fixed_suffix, i);
                CHECK(prefix.query.network_copy_count() == 1);
                bool any_earlier = false;
                for (std::size_t l = 0; l < i; ++l) {
                    any_earlier = any_earlier || sat(explanation_query_prefix(sys, net, exec, fixed_suffix, l));
                }
                if (!any_earlier) {
                    CHECK(sat(prefix) == sat(explanation_query_multi(sys, net, exec, fixed_suffix)));
                }
            }
            ++checked;
        }
        auto full = explanation_query_multi(sys, net, exec, StepMask::full(k, m));
        CHECK(full.query.network_copy_count() == k);
        CHECK_FALSE(sat(full));
        CHECK(sat(explanation_query_prefix(sys, net, exec, StepMask::full(k, m), 0)) == false);
    }
    CHECK(checked > 200);
}
