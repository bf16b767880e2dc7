#pragma once

#include <absplace/errors.hpp>
#include <absplace/matrix.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace absplace {

/// Capacity C (terminals x grid points), backhaul per grid point, target
/// rate, and per-column sparsity weights.
struct PlacementProblem {
    Matrix capacity;
    std::vector<double> backhaul;
    double min_rate = 0.0;
    std::vector<double> weights;

    PlacementProblem() = default;

    PlacementProblem(Matrix c, std::vector<double> bh, double r_min)
        : capacity(std::move(c)), backhaul(std::move(bh)), min_rate(r_min), weights(capacity.cols(), 1.0)
    {
        validate();
    }

    PlacementProblem(Matrix c, std::vector<double> bh, double r_min, std::vector<double> w)
        : capacity(std::move(c)), backhaul(std::move(bh)), min_rate(r_min), weights(std::move(w))
    {
        validate();
    }

    std::size_t num_gts() const noexcept { return capacity.rows(); }
    std::size_t num_points() const noexcept { return capacity.cols(); }

    void validate() const
    {
        if (backhaul.size() != capacity.cols())
            throw DomainError("problem: backhaul length " + std::to_string(backhaul.size()) +
                              " does not match " + std::to_string(capacity.cols()) + " grid points");
        if (weights.size() != capacity.cols())
            throw DomainError("problem: weight vector length does not match grid points");
        if (!std::isfinite(min_rate) || min_rate < 0.0)
            throw DomainError("problem: min_rate must be finite and non-negative");
        for (double v : capacity.data())
            if (!std::isfinite(v) || v < 0.0)
                throw DomainError("problem: capacities must be finite and non-negative");
        for (double v : backhaul)
            if (!std::isfinite(v) || v < 0.0)
                throw DomainError("problem: backhaul must be finite and non-negative");
        for (double v : weights)
            if (!std::isfinite(v) || v < 0.0)
                throw DomainError("problem: weights must be finite and non-negative");
    }

    /// Same problem with all rates divided by `unit`; weights unchanged.
    PlacementProblem rescaled(double unit) const
    {
        PlacementProblem p = *this;
        for (double& v : p.capacity.data())
            v /= unit;
        for (double& v : p.backhaul)
            v /= unit;
        p.min_rate /= unit;
        return p;
    }

    /// Restriction to the listed grid points.
    PlacementProblem restricted(std::span<const std::size_t> cols) const
    {
        PlacementProblem p;
        p.capacity = capacity.select_cols(cols);
        p.min_rate = min_rate;
        for (auto c : cols) {
            p.backhaul.push_back(backhaul[c]);
            p.weights.push_back(weights[c]);
        }
        return p;
    }
};

struct PlacementSolution {
    std::vector<std::size_t> active_columns; // sorted
    Matrix rates;                            // terminals x active_columns
    std::size_t iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    bool converged = true;
    bool feasible = false;

    std::size_t count() const noexcept { return active_columns.size(); }
};

enum class ViolationKind { row_sum, column_sum, capacity, negative_rate, bad_column };

inline const char* to_string(ViolationKind k)
{
    switch (k) {
    case ViolationKind::row_sum: return "row_sum";
    case ViolationKind::column_sum: return "column_sum";
    case ViolationKind::capacity: return "capacity";
    case ViolationKind::negative_rate: return "negative_rate";
    case ViolationKind::bad_column: return "bad_column";
    }
    return "unknown";
}

struct Violation {
    ViolationKind kind;
    std::size_t row = 0;    // terminal index (row_sum, capacity, negative_rate)
    std::size_t column = 0; // grid-point index
    double value = 0.0;
    double limit = 0.0;
};

struct FeasibilityReport {
    std::vector<Violation> violations;

    bool ok() const noexcept { return violations.empty(); }
    explicit operator bool() const noexcept { return ok(); }
};

/// Checks row sums >= R^min, column sums <= backhaul and 0 <= r <= c with
/// relative tolerance `rel_tol`.
inline FeasibilityReport verify_feasibility(const PlacementProblem& problem, const PlacementSolution& sol,
                                            double rel_tol = 1e-6)
{
    FeasibilityReport rep;
    const std::size_t m_count = problem.num_gts();
    const std::size_t n = sol.active_columns.size();
    if (sol.rates.rows() != m_count || sol.rates.cols() != n) {
        rep.violations.push_back({ViolationKind::bad_column, 0, 0, static_cast<double>(sol.rates.cols()),
                                  static_cast<double>(n)});
        return rep;
    }
    for (std::size_t k = 0; k < n; ++k)
        if (sol.active_columns[k] >= problem.num_points() || (k > 0 && sol.active_columns[k] <= sol.active_columns[k - 1]))
            rep.violations.push_back({ViolationKind::bad_column, 0, sol.active_columns[k], 0.0, 0.0});
    if (!rep.ok())
        return rep;

    const double r_min = problem.min_rate;
    for (std::size_t m = 0; m < m_count; ++m) {
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t g = sol.active_columns[k];
            double r = sol.rates(m, k);
            double c = problem.capacity(m, g);
            sum += r;
            if (r < -rel_tol * r_min)
                rep.violations.push_back({ViolationKind::negative_rate, m, g, r, 0.0});
            if (r > c + rel_tol * std::max(c, r_min))
                rep.violations.push_back({ViolationKind::capacity, m, g, r, c});
        }
        if (sum < r_min * (1.0 - rel_tol))
            rep.violations.push_back({ViolationKind::row_sum, m, 0, sum, r_min});
    }
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t g = sol.active_columns[k];
        double sum = 0.0;
        for (std::size_t m = 0; m < m_count; ++m)
            sum += sol.rates(m, k);
        double cap = problem.backhaul[g];
        if (sum > cap + rel_tol * std::max(cap, r_min))
            rep.violations.push_back({ViolationKind::column_sum, 0, g, sum, cap});
    }
    return rep;
}

} // namespace absplace
