#pragma once

// Builders that turn explanation and contrastive candidates into verifier
// queries. Every builder answers the negated question: SAT means "not an
// explanation" or, for the contrastive builders, "is a contrastive example".
//
// Multi-step queries use first-deviation semantics: a counterexample is a
// prefix x_1..x_i that respects the pins, links consecutive blocks through
// the transitions of the known actions, and makes the network deviate at
// step i. Blocks after i are unconstrained.

#include "kstep/query.hpp"

namespace kstep {

struct QueryOptions {
    RivalMode rival = RivalMode::Weak;
};

struct BuiltQuery {
    Query query;
    std::size_t first_step = 0;              // execution step of blocks[0]
    std::vector<std::vector<VarId>> blocks;  // state variables per step
    std::vector<std::size_t> copy_of_block;  // network copy index, or no_copy
};

inline constexpr std::size_t no_copy = static_cast<std::size_t>(-1);

/// Rival atoms for one step: c != a with y[c] >= y[a] (or > under Strict).
DisjunctionGroup rival_group(const std::vector<VarId>& outputs, Action a, RivalMode mode,
                             std::string label);

QueryAtom instantiate(const StateAtom& atom, const std::vector<VarId>& current,
                      const std::vector<VarId>& next);

BuiltQuery explanation_query_single(std::shared_ptr<const Network> net,
                                    const std::vector<FeatureDomain>& domains,
                                    std::span<const Rational> v, Action c, const FeatureSet& E,
                                    const QueryOptions& opts = {});

BuiltQuery contrastive_query_single(std::shared_ptr<const Network> net,
                                    const std::vector<FeatureDomain>& domains,
                                    std::span<const Rational> v, Action c, const FeatureSet& C,
                                    const QueryOptions& opts = {});

/// k chained copies with unconditional transitions for the given actions.
BuiltQuery encode_unrolled(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                           std::span<const Action> actions);

BuiltQuery explanation_query_multi(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                                   const Execution& exec, const StepMask& E,
                                   const QueryOptions& opts = {});

/// Steps 0..i of E pinned, transitions for steps < i, one network copy at i.
BuiltQuery explanation_query_prefix(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                                    const Execution& exec, const StepMask& E, std::size_t i,
                                    const QueryOptions& opts = {});

BuiltQuery contrastive_query_multi(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                                   const Execution& exec, const StepMask& C,
                                   const QueryOptions& opts = {});

/// Steps j..i of C freed (complements pinned), transitions inside the window
/// only, one network copy at step i. C is a full-length mask; steps outside
/// the window are ignored.
BuiltQuery contrastive_query_window(const ReactiveSystem& sys, std::shared_ptr<const Network> net,
                                    const Execution& exec, const StepMask& C, std::size_t j,
                                    std::size_t i, const QueryOptions& opts = {});

/// First step at which a witness of a multi-step or window query deviates
/// along a transition-consistent prefix, if any.
std::optional<std::size_t> deviation_step(const ReactiveSystem& sys, const Network& net,
                                          const Execution& exec, const BuiltQuery& q,
                                          std::span<const Rational> witness, RivalMode mode);

}  // namespace kstep
