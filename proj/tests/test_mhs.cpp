#include "doctest.h"
#include "kstep/oracle.hpp"

#include <random>

using namespace kstep;

TEST_CASE("small families")
{
    CHECK(minimum_hitting_set({{1}, {2}}, 3) == ElementSet{1, 2});
    CHECK(minimum_hitting_set({{1, 2}, {2, 3}}, 4) == ElementSet{2});
    CHECK(minimum_hitting_set({}, 4).empty());
    CHECK_THROWS_AS(minimum_hitting_set({{1}, {}}, 4), std::invalid_argument);
    CHECK(hits_all({2}, {{1, 2}, {2, 3}}));
    CHECK_FALSE(hits_all({1}, {{1, 2}, {2, 3}}));
}

TEST_CASE("random families match exhaustive search")
{
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t universe = 1 + rng() % 12;
        std::size_t count = rng() % 11;
        std::vector<ElementSet> family;
        for (std::size_t i = 0; i < count; ++i) {
            ElementSet s;
            for (std::size_t e = 0; e < universe; ++e) {
                if (rng() % 4 == 0) {
                    s.push_back(e);
                }
            }
            if (s.empty()) {
                s.push_back(rng() % universe);
            }
            family.push_back(s);
        }
        HittingSetStats stats;
        auto h = minimum_hitting_set(family, universe, &stats);
        CAPTURE(trial);
        CHECK(hits_all(h, family));
        CHECK(h.size() == brute_force_hitting_set_size(family));
        CHECK(std::is_sorted(h.begin(), h.end()));
        CHECK(minimum_hitting_set(family, universe) == h);
    }
}

TEST_CASE("minimal_sets keeps only inclusion-minimal members")
{
    auto out = minimal_sets({{1, 2}, {1}, {2, 3}, {1, 2, 3}, {1}});
    CHECK(out == std::vector<ElementSet>{{1}, {2, 3}});
}
