#pragma once

// Variants of the allocation problem for a fixed set of N deployed ABSs:
// fewest GT-ABS links, and most GTs served when not everyone can be.

#include <absplace/errors.hpp>
#include <absplace/lp.hpp>
#include <absplace/matrix.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace absplace {

struct ConnectionResult {
    Matrix rates;                 // M x N, native units
    std::size_t connections = 0;  // entries above 1e-9 * min_rate
    std::size_t lp_solves = 0;
};

struct ServedResult {
    Matrix rates;                 // M x N, native units
    std::vector<double> shortfall; // y: min_rate minus row sum, clipped at 0
    double objective = 0.0;       // sum of shortfall
    double lp_objective = 0.0;    // optimum of the shortfall LP before completion
    std::size_t served = 0;
    std::vector<bool> is_served;
};

inline constexpr double kLinkThreshold = 1e-9;

namespace detail {

inline void check_allocation_dims(const Matrix& c, std::span<const double> bh, double min_rate, const char* who)
{
    if (c.cols() != bh.size())
        throw DomainError(std::string(who) + ": backhaul length " + std::to_string(bh.size()) +
                          " does not match " + std::to_string(c.cols()) + " ABSs");
    if (!(min_rate >= 0.0) || !std::isfinite(min_rate))
        throw DomainError(std::string(who) + ": min_rate must be finite and non-negative");
    for (double v : c.data())
        if (!(v >= 0.0) || !std::isfinite(v))
            throw DomainError(std::string(who) + ": capacities must be finite and non-negative");
    for (double v : bh)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw DomainError(std::string(who) + ": backhaul must be finite and non-negative");
}

inline std::size_t count_links(const Matrix& r, double min_rate)
{
    return static_cast<std::size_t>(std::count_if(r.data().begin(), r.data().end(),
                                                  [&](double v) { return v > kLinkThreshold * min_rate; }));
}

} // namespace detail

/// Weighted link-minimization LP in units of min_rate. Row sums are pinned
/// to 1; with positive weights every optimum has this property anyway.
inline LinearProgram build_connections_lp(const Matrix& c, std::span<const double> bh, double min_rate,
                                          const Matrix& weights)
{
    const std::size_t m_count = c.rows(), n = c.cols();
    LinearProgram lp(m_count * n);
    for (std::size_t m = 0; m < m_count; ++m)
        for (std::size_t k = 0; k < n; ++k) {
            lp.objective[m * n + k] = weights(m, k);
            double cap = c(m, k) / min_rate;
            if (cap < 1.0)
                lp.upper[m * n + k] = cap;
        }
    lp.a_eq = Matrix(m_count, lp.num_vars());
    lp.b_eq.assign(m_count, 1.0);
    for (std::size_t m = 0; m < m_count; ++m)
        for (std::size_t k = 0; k < n; ++k)
            lp.a_eq(m, m * n + k) = 1.0;
    lp.a_ub = Matrix(n, lp.num_vars());
    lp.b_ub.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t m = 0; m < m_count; ++m)
            lp.a_ub(k, m * n + k) = 1.0;
        lp.b_ub[k] = bh[k] / min_rate;
    }
    return lp;
}

/// One ABS per GT, as a 0/1 matrix in units of min_rate, or nullopt when no
/// such assignment respects capacity and backhaul. Every GT asks for the same
/// rate, so this is a bipartite b-matching; its constraint matrix is totally
/// unimodular and the simplex vertex is integral.
inline std::optional<Matrix> single_assignment(const Matrix& c, std::span<const double> bh, double min_rate)
{
    const std::size_t m_count = c.rows(), n = c.cols();
    LinearProgram lp(m_count * n);
    for (std::size_t m = 0; m < m_count; ++m)
        for (std::size_t k = 0; k < n; ++k)
            lp.upper[m * n + k] = c(m, k) >= min_rate ? 1.0 : 0.0;
    lp.a_eq = Matrix(m_count, lp.num_vars());
    lp.b_eq.assign(m_count, 1.0);
    for (std::size_t m = 0; m < m_count; ++m)
        for (std::size_t k = 0; k < n; ++k)
            lp.a_eq(m, m * n + k) = 1.0;
    lp.a_ub = Matrix(n, lp.num_vars());
    lp.b_ub.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t m = 0; m < m_count; ++m)
            lp.a_ub(k, m * n + k) = 1.0;
        lp.b_ub[k] = std::floor(bh[k] / min_rate * (1.0 + 1e-12));
    }
    auto sol = solve_lp(lp);
    if (sol.status != LpStatus::optimal)
        return std::nullopt;
    Matrix r(m_count, n);
    for (std::size_t i = 0; i < r.data().size(); ++i)
        r.data()[i] = std::round(sol.x[i]);
    return r;
}

/// Rates that give every GT min_rate with as few GT-ABS links as the
/// reweighted LP finds. Round 0 uses unit weights; each later round uses
/// 1/(r + epsilon). The sparsest iterate is returned; if it still has more
/// than M links, an exact single-ABS-per-GT assignment is tried as well.
inline ConnectionResult min_connections(const Matrix& c, std::span<const double> bh, double min_rate,
                                        std::size_t reweight_rounds = 2, double epsilon_frac = 1e-3)
{
    detail::check_allocation_dims(c, bh, min_rate, "min_connections");
    const std::size_t m_count = c.rows(), n = c.cols();
    ConnectionResult best;
    best.rates = Matrix(m_count, n);
    if (m_count == 0 || min_rate == 0.0)
        return best;
    for (std::size_t m = 0; m < m_count; ++m) {
        double total = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            total += c(m, k);
        if (total < min_rate)
            throw InfeasibleError("min_connections: GT " + std::to_string(m) + " has total capacity " +
                                      std::to_string(total) + " below min_rate",
                                  m);
    }

    Matrix weights(m_count, n, 1.0);
    bool have = false;
    for (std::size_t round = 0; round <= reweight_rounds; ++round) {
        auto sol = solve_lp(build_connections_lp(c, bh, min_rate, weights));
        ++best.lp_solves;
        if (sol.status != LpStatus::optimal) {
            if (round == 0)
                throw InfeasibleError("min_connections: backhaul cannot carry every GT at min_rate");
            break;
        }
        Matrix r(m_count, n);
        for (std::size_t i = 0; i < r.data().size(); ++i)
            r.data()[i] = std::clamp(sol.x[i], 0.0, kInf);
        std::size_t links = detail::count_links(r, 1.0);
        if (!have || links < best.connections) {
            best.connections = links;
            best.rates = r;
            have = true;
        }
        for (std::size_t i = 0; i < r.data().size(); ++i)
            weights.data()[i] = 1.0 / (r.data()[i] + epsilon_frac);
    }
    if (best.connections > m_count) {
        if (auto single = single_assignment(c, bh, min_rate)) {
            ++best.lp_solves;
            best.rates = std::move(*single);
            best.connections = m_count;
        }
    }
    for (double& v : best.rates.data())
        v *= min_rate;
    return best;
}

/// Shortfall LP in units of min_rate: variables r (M*N, row-major) then y (M).
/// Rows with `pinned[m]` get y_m fixed to 0.
inline LinearProgram build_served_lp(const Matrix& c, std::span<const double> bh, double min_rate,
                                     const std::vector<bool>& pinned = {})
{
    const std::size_t m_count = c.rows(), n = c.cols(), nr = m_count * n;
    LinearProgram lp(nr + m_count);
    for (std::size_t m = 0; m < m_count; ++m) {
        lp.objective[nr + m] = 1.0;
        if (!pinned.empty() && pinned[m])
            lp.upper[nr + m] = 0.0;
        // Rates above min_rate on one link never help, so min(C, min_rate) is an exact cap.
        for (std::size_t k = 0; k < n; ++k)
            lp.upper[m * n + k] = std::min(c(m, k) / min_rate, 1.0);
    }
    lp.a_ub = Matrix(m_count + n, lp.num_vars());
    lp.b_ub.assign(m_count + n, 0.0);
    for (std::size_t m = 0; m < m_count; ++m) {
        for (std::size_t k = 0; k < n; ++k)
            lp.a_ub(m, m * n + k) = -1.0;
        lp.a_ub(m, nr + m) = -1.0;
        lp.b_ub[m] = -1.0;
    }
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t m = 0; m < m_count; ++m)
            lp.a_ub(m_count + k, m * n + k) = 1.0;
        lp.b_ub[m_count + k] = bh[k] / min_rate;
    }
    return lp;
}

/// Allocation that minimizes the total rate shortfall. With `complete` set,
/// GTs left short by the LP vertex are then tried one at a time (smallest
/// shortfall first) and kept whenever the enlarged served set stays feasible.
inline ServedResult max_served_users(const Matrix& c, std::span<const double> bh, double min_rate,
                                     bool complete = true)
{
    detail::check_allocation_dims(c, bh, min_rate, "max_served_users");
    const std::size_t m_count = c.rows(), n = c.cols(), nr = m_count * n;
    ServedResult out;
    out.rates = Matrix(m_count, n);
    out.shortfall.assign(m_count, 0.0);
    out.is_served.assign(m_count, true);
    out.served = m_count;
    if (m_count == 0 || min_rate == 0.0)
        return out;

    auto solve = [&](const std::vector<bool>& pinned) { return solve_lp(build_served_lp(c, bh, min_rate, pinned)); };
    auto sol = solve({});
    if (sol.status != LpStatus::optimal)
        throw NumericError("max_served_users: shortfall LP reported " + std::string(to_string(sol.status)), 0.0, 0.0);
    out.lp_objective = sol.objective * min_rate;

    auto row_served = [&](const std::vector<double>& x, std::size_t m) {
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            sum += x[m * n + k];
        return sum >= 1.0 - 1e-9;
    };
    std::vector<bool> served(m_count);
    for (std::size_t m = 0; m < m_count; ++m)
        served[m] = row_served(sol.x, m);

    if (complete) {
        std::vector<std::size_t> order;
        for (std::size_t m = 0; m < m_count; ++m)
            if (!served[m])
                order.push_back(m);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return sol.x[nr + a] < sol.x[nr + b]; });
        for (std::size_t m : order) {
            auto trial = served;
            trial[m] = true;
            auto s = solve(trial);
            if (s.status == LpStatus::optimal) {
                served = std::move(trial);
                sol = std::move(s);
            }
        }
    }

    out.served = 0;
    out.objective = 0.0;
    for (std::size_t m = 0; m < m_count; ++m) {
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            double v = std::max(sol.x[m * n + k], 0.0) * min_rate;
            out.rates(m, k) = v;
            sum += v;
        }
        out.shortfall[m] = std::max(min_rate - sum, 0.0);
        out.objective += out.shortfall[m];
        out.is_served[m] = sum >= min_rate * (1.0 - 1e-9);
        out.served += out.is_served[m] ? 1 : 0;
    }
    return out;
}

} // namespace absplace
