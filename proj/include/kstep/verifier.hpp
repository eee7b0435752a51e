#pragma once

#include "kstep/kernels.hpp"
#include "kstep/query.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>

namespace kstep {

struct SolverOptions {
    /// Queries whose free state variables are all finite and whose candidate
    /// product is at most this many points are decided by enumeration.
    std::size_t enumeration_threshold = 4096;
    kernels::Exec exec = kernels::Exec::Parallel;
    std::optional<std::uint64_t> max_splits;
    std::optional<std::chrono::milliseconds> time_limit;
};

enum class Status { Sat, Unsat, Timeout };

std::string_view to_string(Status status);

struct Verdict {
    Status status = Status::Unsat;
    std::optional<RationalVector> witness;  // present iff Sat

    bool sat() const { return status == Status::Sat; }
    bool unsat() const { return status == Status::Unsat; }
};

struct SolveStats {
    std::uint64_t relu_splits = 0;
    std::uint64_t membership_branches = 0;
    std::uint64_t disjunction_branches = 0;
    std::uint64_t lp_calls = 0;
    std::uint64_t nodes = 0;
    std::uint64_t enumerated_points = 0;
    bool enumerated = false;
    double wall_seconds = 0;

    std::uint64_t splits() const
    {
        return relu_splits + membership_branches + disjunction_branches;
    }
    SolveStats& operator+=(const SolveStats& other);
};

std::string to_json(const SolveStats& stats);

struct SolveResult {
    Verdict verdict;
    SolveStats stats;
};

/// Complete decision procedure: exhaustive enumeration for small finite
/// queries, otherwise DPLL-style branching on membership values, disjunction
/// alternatives and ReLU phases with exact simplex at the leaves. Every SAT
/// witness is re-checked exactly before it is returned.
SolveResult solve(const Query& query, const SolverOptions& options = {});

}  // namespace kstep
