#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace kstep {

using ElementSet = std::vector<std::size_t>;  // sorted, unique

struct HittingSetStats {
    std::size_t nodes = 0;
};

/// Smallest set meeting every member of `family`. Members are sets over
/// {0..universe-1}; an empty member throws std::invalid_argument. Branch and
/// bound: greedy upper bound, disjoint-member lower bound, branching on the
/// smallest unhit member with elements ordered by frequency then index.
ElementSet minimum_hitting_set(const std::vector<ElementSet>& family, std::size_t universe,
                               HittingSetStats* stats = nullptr);

bool hits_all(const ElementSet& candidate, const std::vector<ElementSet>& family);

}  // namespace kstep
