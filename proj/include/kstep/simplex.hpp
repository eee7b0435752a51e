#pragma once

#include "kstep/rational.hpp"

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace kstep {

/// c + k*delta for an infinitesimal delta > 0. Strict bounds become
/// non-strict bounds on these.
struct DeltaRational {
    Rational c;
    Rational k;

    DeltaRational() = default;
    DeltaRational(Rational c_, Rational k_ = 0) : c(std::move(c_)), k(std::move(k_)) {}

    friend bool operator<(const DeltaRational& a, const DeltaRational& b)
    {
        return a.c < b.c || (a.c == b.c && a.k < b.k);
    }
    friend bool operator>(const DeltaRational& a, const DeltaRational& b) { return b < a; }
    friend bool operator<=(const DeltaRational& a, const DeltaRational& b) { return !(b < a); }
    friend bool operator>=(const DeltaRational& a, const DeltaRational& b) { return !(a < b); }
    friend bool operator==(const DeltaRational& a, const DeltaRational& b)
    {
        return a.c == b.c && a.k == b.k;
    }
};

/// Exact feasibility check for a system of bounded linear rows
///   lower_r <= sum_j a_rj x_j <= upper_r,  lower_j <= x_j <= upper_j
/// using the bounded-variable primal simplex with Bland's rule.
class ExactLp {
public:
    explicit ExactLp(std::size_t num_vars);

    void tighten_lower(std::size_t var, DeltaRational value);
    void tighten_upper(std::size_t var, DeltaRational value);
    void add_row(std::vector<std::pair<std::size_t, Rational>> coeffs,
                 std::optional<DeltaRational> lower, std::optional<DeltaRational> upper);

    /// Runs the simplex; returns false iff the system is infeasible.
    bool check();

    /// Concrete rational values for the structural variables after a
    /// successful check, with delta replaced by a small enough positive value.
    std::vector<Rational> model() const;

    std::size_t pivots() const { return pivots_; }

private:
    void pivot(std::size_t row, std::size_t entering);
    void update_nonbasic(std::size_t var, const DeltaRational& value);

    std::size_t num_structural_;
    std::size_t num_total_ = 0;
    std::vector<std::optional<DeltaRational>> lower_;
    std::vector<std::optional<DeltaRational>> upper_;
    std::vector<DeltaRational> value_;
    std::vector<long> row_of_;          // -1 when nonbasic
    std::vector<std::size_t> basic_of_;  // per row
    std::vector<std::vector<Rational>> tableau_;  // row r: x_basic = sum_j t_rj x_j
    std::vector<std::vector<std::pair<std::size_t, Rational>>> pending_rows_;
    bool trivially_infeasible_ = false;
    std::size_t pivots_ = 0;
};

}  // namespace kstep
