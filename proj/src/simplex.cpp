#include "kstep/simplex.hpp"

#include <algorithm>

namespace kstep {

namespace {

DeltaRational add_scaled(const DeltaRational& a, const Rational& s, const DeltaRational& b)
{
    return DeltaRational(a.c + s * b.c, a.k + s * b.k);
}

}  // namespace

ExactLp::ExactLp(std::size_t num_vars)
    : num_structural_(num_vars), lower_(num_vars), upper_(num_vars)
{}

void ExactLp::tighten_lower(std::size_t var, DeltaRational value)
{
    if (!lower_[var] || *lower_[var] < value) {
        lower_[var] = std::move(value);
    }
}

void ExactLp::tighten_upper(std::size_t var, DeltaRational value)
{
    if (!upper_[var] || value < *upper_[var]) {
        upper_[var] = std::move(value);
    }
}

void ExactLp::add_row(std::vector<std::pair<std::size_t, Rational>> coeffs,
                      std::optional<DeltaRational> lower, std::optional<DeltaRational> upper)
{
    coeffs.erase(std::remove_if(coeffs.begin(), coeffs.end(),
                                [](const auto& p) { return p.second == 0; }),
                 coeffs.end());
    if (coeffs.empty()) {
        DeltaRational zero;
        if ((lower && zero < *lower) || (upper && *upper < zero)) {
            trivially_infeasible_ = true;
        }
        return;
    }
    pending_rows_.push_back(std::move(coeffs));
    lower_.push_back(std::move(lower));
    upper_.push_back(std::move(upper));
}

void ExactLp::update_nonbasic(std::size_t var, const DeltaRational& v)
{
    DeltaRational diff(v.c - value_[var].c, v.k - value_[var].k);
    for (std::size_t r = 0; r < tableau_.size(); ++r) {
        const Rational& a = tableau_[r][var];
        if (a != 0) {
            value_[basic_of_[r]] = add_scaled(value_[basic_of_[r]], a, diff);
        }
    }
    value_[var] = v;
}

void ExactLp::pivot(std::size_t row, std::size_t entering)
{
    ++pivots_;
    std::size_t leaving = basic_of_[row];
    std::vector<Rational>& pr = tableau_[row];
    Rational a = pr[entering];
    // x_leaving = a*x_entering + rest  =>  x_entering = (x_leaving - rest)/a
    for (std::size_t j = 0; j < num_total_; ++j) {
        if (pr[j] != 0) {
            pr[j] = -pr[j] / a;
        }
    }
    pr[entering] = 0;
    pr[leaving] = 1 / a;
    for (std::size_t r = 0; r < tableau_.size(); ++r) {
        if (r == row) {
            continue;
        }
        std::vector<Rational>& other = tableau_[r];
        if (other[entering] == 0) {
            continue;
        }
        Rational c = other[entering];
        other[entering] = 0;
        for (std::size_t j = 0; j < num_total_; ++j) {
            if (pr[j] != 0) {
                other[j] += c * pr[j];
            }
        }
    }
    basic_of_[row] = entering;
    row_of_[entering] = static_cast<long>(row);
    row_of_[leaving] = -1;
}

bool ExactLp::check()
{
    if (trivially_infeasible_) {
        return false;
    }
    num_total_ = num_structural_ + pending_rows_.size();
    for (std::size_t v = 0; v < num_total_; ++v) {
        if (lower_[v] && upper_[v] && *upper_[v] < *lower_[v]) {
            return false;
        }
    }
    value_.assign(num_total_, DeltaRational());
    row_of_.assign(num_total_, -1);
    basic_of_.clear();
    tableau_.clear();
    for (std::size_t v = 0; v < num_structural_; ++v) {
        if (lower_[v]) {
            value_[v] = *lower_[v];
        } else if (upper_[v]) {
            value_[v] = *upper_[v];
        }
    }
    for (std::size_t r = 0; r < pending_rows_.size(); ++r) {
        std::vector<Rational> row(num_total_);
        DeltaRational sum;
        for (const auto& [var, coeff] : pending_rows_[r]) {
            row[var] += coeff;
        }
        for (std::size_t v = 0; v < num_structural_; ++v) {
            if (row[v] != 0) {
                sum = add_scaled(sum, row[v], value_[v]);
            }
        }
        std::size_t slack = num_structural_ + r;
        value_[slack] = sum;
        row_of_[slack] = static_cast<long>(r);
        basic_of_.push_back(slack);
        tableau_.push_back(std::move(row));
    }

    while (true) {
        // Bland: smallest violating basic variable.
        std::size_t best_row = tableau_.size();
        std::size_t best_var = num_total_;
        for (std::size_t r = 0; r < tableau_.size(); ++r) {
            std::size_t b = basic_of_[r];
            bool low = lower_[b] && value_[b] < *lower_[b];
            bool high = upper_[b] && *upper_[b] < value_[b];
            if ((low || high) && b < best_var) {
                best_var = b;
                best_row = r;
            }
        }
        if (best_row == tableau_.size()) {
            return true;
        }
        const std::vector<Rational>& row = tableau_[best_row];
        bool increase = lower_[best_var] && value_[best_var] < *lower_[best_var];
        std::size_t entering = num_total_;
        for (std::size_t j = 0; j < num_total_; ++j) {
            if (row[j] == 0 || row_of_[j] >= 0) {
                continue;
            }
            bool can_up = !upper_[j] || value_[j] < *upper_[j];
            bool can_down = !lower_[j] || *lower_[j] < value_[j];
            bool positive = row[j] > 0;
            if ((increase && ((positive && can_up) || (!positive && can_down))) ||
                (!increase && ((!positive && can_up) || (positive && can_down)))) {
                entering = j;
                break;
            }
        }
        if (entering == num_total_) {
            return false;
        }
        const DeltaRational& target = increase ? *lower_[best_var] : *upper_[best_var];
        Rational a = row[entering];
        DeltaRational theta((target.c - value_[best_var].c) / a, (target.k - value_[best_var].k) / a);
        DeltaRational new_entering(value_[entering].c + theta.c, value_[entering].k + theta.k);
        update_nonbasic(entering, new_entering);
        pivot(best_row, entering);
    }
}

std::vector<Rational> ExactLp::model() const
{
    Rational delta = 1;
    auto limit = [&](const DeltaRational& lo, const DeltaRational& hi) {
        // need lo.c + lo.k*d <= hi.c + hi.k*d
        if (lo.c < hi.c && lo.k > hi.k) {
            Rational bound = (hi.c - lo.c) / (lo.k - hi.k);
            if (bound < delta) {
                delta = bound;
            }
        }
    };
    for (std::size_t v = 0; v < num_total_; ++v) {
        if (lower_[v]) {
            limit(*lower_[v], value_[v]);
        }
        if (upper_[v]) {
            limit(value_[v], *upper_[v]);
        }
    }
    std::vector<Rational> out(num_structural_);
    for (std::size_t v = 0; v < num_structural_; ++v) {
        out[v] = value_[v].c + value_[v].k * delta;
    }
    return out;
}

}  // namespace kstep
