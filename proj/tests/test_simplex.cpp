#include "doctest.h"
#include "kstep/simplex.hpp"

#include <random>

using namespace kstep;

namespace {

using Row = std::vector<std::pair<std::size_t, Rational>>;

}  // namespace

TEST_CASE("empty box is infeasible")
{
    ExactLp lp(1);
    lp.tighten_lower(0, Rational(1));
    lp.tighten_upper(0, Rational(0));
    CHECK_FALSE(lp.check());
}

TEST_CASE("strict bounds use the infinitesimal")
{
    // x + y < 1, x > 0, y > 0 is feasible; x + y < 0 with x,y >= 0 is not.
    ExactLp lp(2);
    lp.tighten_lower(0, DeltaRational(0, 1));
    lp.tighten_lower(1, DeltaRational(0, 1));
    lp.add_row({{0, 1}, {1, 1}}, std::nullopt, DeltaRational(1, -1));
    REQUIRE(lp.check());
    auto x = lp.model();
    CHECK(x[0] > 0);
    CHECK(x[1] > 0);
    CHECK(x[0] + x[1] < 1);

    ExactLp bad(2);
    bad.tighten_lower(0, Rational(0));
    bad.tighten_lower(1, Rational(0));
    bad.add_row({{0, 1}, {1, 1}}, std::nullopt, DeltaRational(0, -1));
    CHECK_FALSE(bad.check());
}

TEST_CASE("equalities chain")
{
    // x = 2y, y = z + 1, z >= 3, x <= 8 -> z in [3, 3]
    ExactLp lp(3);
    lp.add_row({{0, 1}, {1, -2}}, Rational(0), Rational(0));
    lp.add_row({{1, 1}, {2, -1}}, Rational(1), Rational(1));
    lp.tighten_lower(2, Rational(3));
    lp.tighten_upper(0, Rational(8));
    REQUIRE(lp.check());
    auto x = lp.model();
    CHECK(x[2] == 3);
    CHECK(x[0] == 8);
    lp.tighten_upper(0, Rational(7));
    CHECK_FALSE(lp.check());
}

TEST_CASE("random systems built around a known point are feasible and models satisfy them")
{
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> coef(-3, 3);
    std::uniform_int_distribution<int> slack(0, 2);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + trial % 5;
        std::vector<Rational> point(n);
        for (auto& p : point) {
            p = make_rational(coef(rng), 2);
        }
        ExactLp lp(n);
        std::vector<std::pair<Row, std::pair<Rational, Rational>>> rows;
        for (int r = 0; r < 4; ++r) {
            Row row;
            Rational value = 0;
            for (std::size_t j = 0; j < n; ++j) {
                int c = coef(rng);
                if (c) {
                    row.emplace_back(j, Rational(c));
                    value += c * point[j];
                }
            }
            Rational lo = value - slack(rng);
            Rational hi = value + slack(rng);
            lp.add_row(row, DeltaRational(lo), DeltaRational(hi));
            rows.push_back({row, {lo, hi}});
        }
        REQUIRE(lp.check());
        auto x = lp.model();
        for (const auto& [row, bounds] : rows) {
            Rational v = 0;
            for (const auto& [j, c] : row) {
                v += c * x[j];
            }
            CHECK(bounds.first <= v);
            CHECK(v <= bounds.second);
        }
        // A contradictory pair on the first nonempty row makes it infeasible.
        for (const auto& [row, bounds] : rows) {
            if (row.empty()) {
                continue;
            }
            ExactLp copy(n);
            for (const auto& [r2, b2] : rows) {
                copy.add_row(r2, DeltaRational(b2.first), DeltaRational(b2.second));
            }
            copy.add_row(row, DeltaRational(bounds.second, 1), std::nullopt);
            CHECK_FALSE(copy.check());
            break;
        }
    }
}
