#pragma once

// Exhaustive reference implementations over finite feature domains. Nothing
// here calls the verifier or the explanation search.

#include "kstep/explain.hpp"

#include <cstdint>

namespace kstep {

struct OracleOptions {
    std::uint64_t cap = std::uint64_t{1} << 20;  // visited states / evaluations
    RivalMode rival = RivalMode::Weak;
};

class OracleCapExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A transition-consistent prefix x_0..x_step that deviates at `step`:
/// `diff` lists the (step * m + feature) elements where it differs from the
/// execution.
struct Deviation {
    ElementSet diff;
    std::size_t step = 0;
    friend bool operator<(const Deviation& a, const Deviation& b)
    {
        return a.step != b.step ? a.step < b.step : a.diff < b.diff;
    }
    friend bool operator==(const Deviation&, const Deviation&) = default;
};

/// Every distinct deviation of the execution, sorted.
std::vector<Deviation> oracle_deviations(const ReactiveSystem& sys, const Network& net,
                                         const Execution& exec, const OracleOptions& opts = {});

struct Sequence {
    std::vector<RationalVector> states;
    std::vector<Action> actions;
};

/// All length-k sequences starting in I whose actions are the network's
/// choices and whose consecutive states satisfy the chosen action's T.
std::vector<Sequence> oracle_all_sequences(const ReactiveSystem& sys, const Network& net,
                                           std::size_t k, const OracleOptions& opts = {});

bool oracle_is_explanation(const ReactiveSystem& sys, const Network& net, const Execution& exec,
                           const StepMask& mask, const OracleOptions& opts = {});
bool oracle_is_contrastive(const ReactiveSystem& sys, const Network& net, const Execution& exec,
                           const StepMask& mask, const OracleOptions& opts = {});

std::size_t oracle_minimum_explanation_size(const ReactiveSystem& sys, const Network& net,
                                            const Execution& exec, const OracleOptions& opts = {});

/// Minimal multi-step contrastive examples, sorted by size then elements.
CxpCatalog oracle_minimal_cxps(const ReactiveSystem& sys, const Network& net,
                               const Execution& exec, const OracleOptions& opts = {});

/// Minimal elements of a family of sets (used on deviation diffs).
std::vector<ElementSet> minimal_sets(std::vector<ElementSet> family);

/// Size of a smallest hitting set by iterative deepening. Independent of the
/// branch-and-bound solver on purpose.
std::size_t brute_force_hitting_set_size(const std::vector<ElementSet>& family);

/// Minimal single-step explanations/CXPs over one network evaluation, by
/// enumerating every subset of features.
std::vector<FeatureSet> oracle_single_minimal_cxps(const Network& net,
                                                   const std::vector<FeatureDomain>& domains,
                                                   std::span<const Rational> v, Action c,
                                                   const OracleOptions& opts = {});
bool oracle_single_is_explanation(const Network& net, const std::vector<FeatureDomain>& domains,
                                  std::span<const Rational> v, Action c, const FeatureSet& E,
                                  const OracleOptions& opts = {});
std::size_t oracle_single_minimum_size(const Network& net,
                                       const std::vector<FeatureDomain>& domains,
                                       std::span<const Rational> v, Action c,
                                       const OracleOptions& opts = {});

}  // namespace kstep
