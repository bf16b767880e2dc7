#pragma once

#include <absplace/errors.hpp>
#include <absplace/geometry.hpp>
#include <absplace/gspa.hpp>
#include <absplace/lp.hpp>
#include <absplace/problem.hpp>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace absplace {

struct OracleResult {
    std::size_t min_count = 0;
    std::vector<std::size_t> witness_columns;
    std::size_t explored = 0; // subsets whose feasibility LP was solved or prefiltered
};

inline constexpr std::size_t kOracleMaxPoints = 20;

namespace detail {

// Cheap necessary conditions for `cols` to host a feasible allocation.
inline bool subset_may_be_feasible(const PlacementProblem& p, std::span<const std::size_t> cols)
{
    const double r = p.min_rate;
    const double need = static_cast<double>(p.num_gts()) * r;
    double bh = 0.0;
    for (auto g : cols)
        bh += std::min(p.backhaul[g], need);
    if (bh < need * (1.0 - 1e-12))
        return false;
    for (std::size_t m = 0; m < p.num_gts(); ++m) {
        double row = 0.0;
        for (auto g : cols)
            row += std::min(p.capacity(m, g), p.backhaul[g]);
        if (row < r * (1.0 - 1e-12))
            return false;
    }
    return true;
}

// Advances `idx` to the next k-combination of [0, n) in lexicographic order.
inline bool next_combination(std::vector<std::size_t>& idx, std::size_t n)
{
    const std::size_t k = idx.size();
    for (std::size_t i = k; i-- > 0;) {
        if (idx[i] < n - k + i) {
            ++idx[i];
            for (std::size_t j = i + 1; j < k; ++j)
                idx[j] = idx[j - 1] + 1;
            return true;
        }
    }
    return false;
}

} // namespace detail

/// Exact minimum number of grid points that admit a feasible allocation,
/// by enumerating subsets in increasing size from the lower bound.
inline OracleResult brute_force_min_abs(const PlacementProblem& p, std::size_t max_points = kOracleMaxPoints)
{
    p.validate();
    const std::size_t g_count = p.num_points();
    if (g_count > max_points)
        throw BudgetError("oracle: " + std::to_string(g_count) + " grid points exceed the enumeration budget of " +
                          std::to_string(max_points));
    OracleResult out;
    if (p.num_gts() == 0 || p.min_rate == 0.0)
        return out;
    auto lb = lower_bound(p.num_gts(), p.min_rate, p.backhaul);
    if (!lb)
        throw InfeasibleError("oracle: no backhaul capacity");

    for (std::size_t k = std::max<std::size_t>(*lb, 1); k <= g_count; ++k) {
        std::vector<std::size_t> idx(k);
        std::iota(idx.begin(), idx.end(), 0);
        do {
            ++out.explored;
            if (!detail::subset_may_be_feasible(p, idx))
                continue;
            if (allocation_feasible(p.restricted(idx))) {
                out.min_count = k;
                out.witness_columns = idx;
                return out;
            }
        } while (detail::next_combination(idx, g_count));
    }
    throw InfeasibleError("oracle: no subset of grid points admits a feasible allocation");
}

/// Exact allocation on a given set of columns (rates for every terminal, native units).
inline std::optional<PlacementSolution> allocate_on_columns(const PlacementProblem& p,
                                                            std::vector<std::size_t> cols)
{
    std::sort(cols.begin(), cols.end());
    PlacementSolution sol;
    sol.active_columns = cols;
    if (p.min_rate == 0.0) {
        sol.rates = Matrix(p.num_gts(), cols.size());
        sol.feasible = true;
        return sol;
    }
    auto rates = detail::restricted_allocation(p, cols);
    if (!rates)
        return std::nullopt;
    sol.rates = std::move(*rates);
    for (double& v : sol.rates.data())
        v = std::max(v, 0.0);
    sol.feasible = verify_feasibility(p, sol).ok();
    return sol;
}

// ---------------------------------------------------------------------------
// K-means baseline
// ---------------------------------------------------------------------------

struct KMeansResult {
    PlacementSolution solution;
    std::size_t k = 0;
    std::vector<std::size_t> assignment; // terminal -> index into solution.active_columns
};

namespace detail {

inline double dist2(Vec3 a, Vec3 b)
{
    Vec3 d = a - b;
    return d.x * d.x + d.y * d.y + d.z * d.z;
}

// Lloyd iterations with k-means++ seeding; returns the cluster label of each point.
inline std::vector<std::size_t> lloyd(std::span<const Vec3> pts, std::size_t k, std::mt19937_64& rng,
                                      std::vector<Vec3>& centers)
{
    const std::size_t n = pts.size();
    centers.clear();
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    centers.push_back(pts[pick(rng)]);
    std::vector<double> d2(n);
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = kInf;
            for (const auto& c : centers)
                d2[i] = std::min(d2[i], dist2(pts[i], c));
            total += d2[i];
        }
        if (total <= 0.0) {
            centers.push_back(pts[pick(rng)]);
            continue;
        }
        double target = std::uniform_real_distribution<double>(0.0, total)(rng);
        std::size_t chosen = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            target -= d2[i];
            if (target < 0.0) {
                chosen = i;
                break;
            }
        }
        centers.push_back(pts[chosen]);
    }

    std::vector<std::size_t> label(n, 0);
    for (int it = 0; it < 100; ++it) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double bd = kInf;
            for (std::size_t c = 0; c < k; ++c) {
                double d = dist2(pts[i], centers[c]);
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            changed = changed || (it == 0) || label[i] != best;
            label[i] = best;
        }
        // Empty clusters take the point farthest from its own center.
        std::vector<std::size_t> sizes(k, 0);
        for (auto l : label)
            ++sizes[l];
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] > 0)
                continue;
            std::size_t far = 0;
            double fd = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                double d = dist2(pts[i], centers[label[i]]);
                if (sizes[label[i]] > 1 && d > fd) {
                    fd = d;
                    far = i;
                }
            }
            if (fd < 0.0)
                break;
            --sizes[label[far]];
            label[far] = c;
            sizes[c] = 1;
            changed = true;
        }
        std::vector<Vec3> sum(k);
        for (std::size_t i = 0; i < n; ++i)
            sum[label[i]] = sum[label[i]] + pts[i];
        for (std::size_t c = 0; c < k; ++c)
            if (sizes[c] > 0)
                centers[c] = (1.0 / static_cast<double>(sizes[c])) * sum[c];
        if (!changed)
            break;
    }
    return label;
}

} // namespace detail

/// K-means baseline: for k from the lower bound up to max_k, cluster the
/// terminals, put one ABS at the unused flight-grid point nearest each
/// centroid, serve every terminal from its own cluster's ABS at R^min, and
/// return the first k whose assignment respects capacity and backhaul.
inline KMeansResult kmeans_placement(std::span<const Vec3> gts, std::span<const Vec3> flight_grid,
                                     const Matrix& capacity, std::span<const double> backhaul, double min_rate,
                                     std::size_t max_k, std::uint64_t seed)
{
    if (max_k == 0)
        throw DomainError("kmeans: max_k must be at least 1");
    const std::size_t m_count = gts.size(), g_count = flight_grid.size();
    if (capacity.rows() != m_count || capacity.cols() != g_count || backhaul.size() != g_count)
        throw DomainError("kmeans: dimension mismatch");
    KMeansResult out;
    out.solution.rates = Matrix(m_count, 0);
    if (m_count == 0 || min_rate == 0.0) {
        out.solution.feasible = true;
        return out;
    }
    auto lb = lower_bound(m_count, min_rate, backhaul);
    if (!lb)
        throw InfeasibleError("kmeans: no backhaul capacity");

    const std::size_t k_hi = std::min({max_k, m_count, g_count});
    for (std::size_t k = std::max<std::size_t>(*lb, 1); k <= k_hi; ++k) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(k)};
        std::mt19937_64 rng(seq);
        std::vector<Vec3> centers;
        auto label = detail::lloyd(gts, k, rng, centers);

        std::vector<bool> used(g_count, false);
        std::vector<std::size_t> site(k);
        for (std::size_t c = 0; c < k; ++c) {
            std::size_t best = g_count;
            double bd = kInf;
            for (std::size_t g = 0; g < g_count; ++g) {
                if (used[g])
                    continue;
                double d = detail::dist2(centers[c], flight_grid[g]);
                if (d < bd) {
                    bd = d;
                    best = g;
                }
            }
            used[best] = true;
            site[c] = best;
        }

        bool ok = true;
        std::vector<double> load(k, 0.0);
        for (std::size_t m = 0; m < m_count && ok; ++m) {
            ok = capacity(m, site[label[m]]) >= min_rate;
            load[label[m]] += min_rate;
        }
        for (std::size_t c = 0; c < k && ok; ++c)
            ok = load[c] <= backhaul[site[c]];
        if (!ok)
            continue;

        std::vector<std::size_t> order(k);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return site[a] < site[b]; });
        std::vector<std::size_t> slot(k);
        for (std::size_t j = 0; j < k; ++j) {
            slot[order[j]] = j;
            out.solution.active_columns.push_back(site[order[j]]);
        }
        out.solution.rates = Matrix(m_count, k);
        out.assignment.resize(m_count);
        for (std::size_t m = 0; m < m_count; ++m) {
            out.assignment[m] = slot[label[m]];
            out.solution.rates(m, slot[label[m]]) = min_rate;
        }
        out.k = k;
        out.solution.feasible = true;
        return out;
    }
    throw InfeasibleError("kmeans: no feasible placement with at most " + std::to_string(max_k) + " ABSs");
}

} // namespace absplace
