#pragma once

// Exhaustive search for queries whose state variables all have finite
// domains. Network outputs are first estimated in double precision; a point
// is discarded on that estimate only when some atom is violated by far more
// than any rounding error could explain. Every surviving point is decided
// with exact rationals.

#include "kstep/verifier.hpp"

#include <atomic>

namespace kstep::detail {

struct TimeoutSignal {};

class Budget {
public:
    Budget(const SolverOptions& opts);
    /// Counts one node and `branches` splits; throws TimeoutSignal when spent.
    void tick(std::uint64_t branches);
    std::uint64_t nodes() const { return nodes_.load(); }
    std::uint64_t branches() const { return branches_.load(); }

private:
    std::optional<std::uint64_t> max_splits_;
    std::optional<std::chrono::steady_clock::time_point> deadline_;
    std::atomic<std::uint64_t> nodes_{0};
    std::atomic<std::uint64_t> branches_{0};
};

class FloatShadow {
public:
    explicit FloatShadow(const Query& q);

    std::size_t atom_count() const { return atoms_.size(); }
    /// Top-level atoms first, then every group alternative's atoms in order.
    const QueryAtom& atom(std::size_t i) const { return *atoms_[i].source; }
    std::size_t top_level_count() const { return top_level_; }
    /// Indices of the atoms of group g, alternative a.
    const std::vector<std::size_t>& alternative(std::size_t g, std::size_t a) const
    {
        return groups_[g][a];
    }
    const std::vector<VarId>& vars_of(std::size_t i) const { return atoms_[i].vars; }
    bool state_only(std::size_t i) const { return atoms_[i].state_only; }

    void evaluate_copy(std::size_t c, std::vector<double>& fv) const;
    bool clearly_violated(std::size_t i, const std::vector<double>& fv) const;

private:
    struct FAtom {
        const QueryAtom* source = nullptr;
        std::vector<std::pair<VarId, double>> terms;
        std::vector<VarId> vars;
        Cmp cmp = Cmp::Le;
        double rhs = 0;
        std::vector<double> values;
        bool membership = false;
        bool state_only = true;
    };
    struct FLayer {
        std::vector<std::vector<double>> weights;
        std::vector<double> bias;
        bool relu = false;
    };
    void add(const QueryAtom& a, const Query& q);

    const Query& q_;
    std::vector<FAtom> atoms_;
    std::size_t top_level_ = 0;
    std::vector<std::vector<std::vector<std::size_t>>> groups_;
    std::vector<std::vector<FLayer>> nets_;
};

/// Candidate values per state variable after single-variable top-level atoms,
/// or nullopt if some state variable is not finite.
std::optional<std::vector<std::vector<Rational>>> finite_candidates(const Query& q);

/// Exact point check with the float prefilter. `values` holds the state
/// variables; hidden and output entries are filled in on success.
bool accept_point(const Query& q, const FloatShadow& shadow, RationalVector& values,
                  std::vector<double>& scratch);

/// Backtracking over the state variables in id order, alternative by
/// alternative for disjunction groups, branching only on variables that can
/// influence the chosen alternative.
std::optional<RationalVector> backtrack(const Query& q,
                                        const std::vector<std::vector<Rational>>& candidates,
                                        const SolverOptions& opts, Budget& budget,
                                        SolveStats& stats);

}  // namespace kstep::detail
