#include "doctest.h"
#include "kstep/model.hpp"
#include "support.hpp"

using namespace kstep;
using kstep::testing::binary;

namespace {

Network identity3()
{
    Layer l;
    for (int r = 0; r < 3; ++r) {
        RationalVector row(3, Rational(0));
        row[r] = 1;
        l.weights.push_back(row);
        l.bias.push_back(0);
    }
    return Network({l});
}

// Two-state counter: feature 0 toggles under action 0, stays under action 1.
ReactiveSystem toggle_system()
{
    ReactiveSystem sys;
    sys.m = 2;
    sys.domains = {binary(), binary()};
    sys.actions = {"flip", "stay"};
    ConstraintSet flip;
    flip.atoms.push_back(LinearAtom<StateVar>{{{cur(0), 1}, {nxt(0), 1}}, Cmp::Eq, 1, "flip"});
    flip.atoms.push_back(LinearAtom<StateVar>{{{cur(1), 1}, {nxt(1), -1}}, Cmp::Eq, 0, "keep1"});
    ConstraintSet stay;
    stay.atoms.push_back(LinearAtom<StateVar>{{{cur(0), 1}, {nxt(0), -1}}, Cmp::Eq, 0, "keep0"});
    sys.transitions = {flip, stay};
    return sys;
}

// Chooses "flip" (0) when x0 = 0, else "stay".
Network toggle_policy()
{
    Layer l;
    l.weights = {{Rational(-1), Rational(0)}, {Rational(1), Rational(0)}};
    l.bias = {Rational(1, 2), Rational(0)};
    return Network({l});
}

RationalVector toggle_step(std::span<const Rational> s, Action a)
{
    RationalVector n(s.begin(), s.end());
    if (a == 0) {
        n[0] = 1 - n[0];
    }
    return n;
}

}  // namespace

TEST_CASE("forward: zero and identity networks")
{
    Layer zero;
    zero.weights = {{0, 0}, {0, 0}};
    zero.bias = {0, 0};
    Network z({zero});
    RationalVector in = {Rational(3), Rational(-7, 2)};
    CHECK(forward(z, in) == RationalVector{0, 0});
    RationalVector x = {Rational(1, 3), Rational(-2), Rational(5)};
    CHECK(forward(identity3(), x) == x);
    CHECK_THROWS_AS(forward(identity3(), in), ModelError);
}

TEST_CASE("argmax breaks ties toward the lowest index")
{
    CHECK(argmax(RationalVector{15, -4}) == 0);
    CHECK(argmax(RationalVector{1, 1}) == 0);
    CHECK(argmax(RationalVector{0, 5}) == 1);
    CHECK(deviates(RationalVector{1, 1}, 0, RivalMode::Weak));
    CHECK_FALSE(deviates(RationalVector{1, 1}, 0, RivalMode::Strict));
}

TEST_CASE("network validation")
{
    Layer hidden;
    hidden.weights = {{1, 1}};
    hidden.bias = {0};
    hidden.relu = true;
    CHECK_THROWS_AS(Network({hidden}), ModelError);  // last layer with ReLU
    Layer out;
    out.weights = {{1, 2, 3}};
    out.bias = {0};
    CHECK_THROWS_AS(Network({hidden, out}), ModelError);  // width mismatch
}

TEST_CASE("property: forward is deterministic and argmax is shift invariant")
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        auto net = kstep::testing::random_net(rng, {3, 4, 3});
        RationalVector x = {kstep::testing::small_rational(rng), kstep::testing::small_rational(rng),
                            kstep::testing::small_rational(rng)};
        CHECK(forward(*net, x) == forward(*net, x));
        auto layers = net->layers();
        Rational shift = kstep::testing::small_rational(rng);
        for (auto& b : layers.back().bias) {
            b += shift;
        }
        CHECK(classify(Network(layers), x) == classify(*net, x));
    }
}

TEST_CASE("simulate and validate_execution")
{
    auto sys = toggle_system();
    auto net = toggle_policy();
    SUBCASE("k = 1 has no transitions")
    {
        auto e = simulate(sys, net, toggle_step, {0, 1}, 1);
        CHECK(e.k() == 1);
        CHECK(e.actions == std::vector<Action>{0});
    }
    SUBCASE("longer runs validate")
    {
        auto e = simulate(sys, net, toggle_step, {0, 1}, 3);
        REQUIRE(e.k() == 3);
        CHECK(e.states[1] == RationalVector{1, 1});
        CHECK(e.actions == std::vector<Action>{0, 1, 1});
        CHECK(validate_execution(sys, net, e));
        CHECK(e.prefix(2).k() == 2);

        auto wrong_action = e;
        wrong_action.actions[1] = 0;
        auto c = validate_execution(sys, net, wrong_action);
        CHECK_FALSE(c);
        CHECK(c.problem.find("step 2") != std::string::npos);

        auto broken = e;
        broken.states[1][1] = 0;
        c = validate_execution(sys, net, broken);
        CHECK_FALSE(c);
        CHECK(c.problem.find("keep") != std::string::npos);
    }
    SUBCASE("a step function that breaks T is reported")
    {
        auto bad = [](std::span<const Rational> s, Action) {
            RationalVector n(s.begin(), s.end());
            n[0] = 1 - n[0];
            n[1] = 1 - n[1];
            return n;
        };
        CHECK_THROWS_WITH_AS(simulate(sys, net, bad, {0, 1}, 2), doctest::Contains("keep1"),
                             TransitionViolation);
    }
    SUBCASE("initial predicate")
    {
        sys.initial.atoms.push_back(LinearAtom<StateVar>{{{cur(1), 1}}, Cmp::Eq, 1, "init"});
        CHECK_THROWS_AS(simulate(sys, net, toggle_step, {0, 0}, 2), TransitionViolation);
    }
}

TEST_CASE("step masks")
{
    auto full = StepMask::full(2, 3);
    CHECK(full.size() == 6);
    auto c = full.complement(3);
    CHECK(c.size() == 0);
    CHECK(c.role == MaskRole::Contrastive);
    StepMask m{{{2}, {}}, MaskRole::Explanation};
    CHECK(m.subset_of(full));
    CHECK_FALSE(full.subset_of(m));
    CHECK(to_string(m) == "({2}, {})");
    CHECK_THROWS(StepMask{{{3}}, MaskRole::Explanation}.validate(1, 3));
}
