#pragma once

#include <absplace/bisection.hpp>
#include <absplace/errors.hpp>
#include <absplace/flow.hpp>
#include <absplace/lp.hpp>
#include <absplace/matrix.hpp>
#include <absplace/parallel.hpp>
#include <absplace/problem.hpp>

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace absplace {

struct AdmmConfig {
    double rho = 1e-7;
    double eps_abs = 1e-4;
    double eps_rel = 1e-4;
    std::size_t max_iters = 5000; // per round
    double bisection_tol = 1e-12;
    std::size_t reweight_rounds = 3;
    double reweight_epsilon = 1e-3;      // fraction of R^min
    double activation_threshold = 1e-3;  // fraction of R^min
    bool prune = true;                   // drop support columns that feasibility does not need
    unsigned threads = 1;

    void validate() const
    {
        if (!(rho > 0.0) || !(eps_abs >= 0.0) || !(eps_rel >= 0.0) || max_iters == 0 || !(bisection_tol > 0.0) ||
            !(reweight_epsilon > 0.0) || !(activation_threshold > 0.0))
            throw DomainError("admm config: parameters must be positive");
    }
};

struct AdmmState {
    Matrix r; // X-block rates
    Matrix z; // consensus copy
    Matrix u; // scaled duals
    std::vector<double> s;
    std::size_t iter = 0;
};

struct Residuals {
    double primal = 0.0;
    double dual = 0.0;
    double eps_pri = 0.0;
    double eps_dual = 0.0;
    bool converged = false;
};

// ---------------------------------------------------------------------------
// Subproblems
// ---------------------------------------------------------------------------

struct ColumnUpdate {
    std::vector<double> r;
    double s = 0.0;
    bool backhaul_active = false;
};

namespace detail {

// Root of sum_i max(v_i - s, 0) = w / rho, bracketed per the monotone structure.
inline double column_slack(std::span<const double> v, double w, double rho, double tol)
{
    const double m = static_cast<double>(v.size());
    auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    double shift = w / (m * rho);
    auto f = [&](double s) {
        double acc = 0.0;
        for (double x : v)
            acc += std::max(x - s, 0.0);
        return acc;
    };
    return bisect_root(f, w / rho, *lo_it - shift, *hi_it - shift, tol);
}

} // namespace detail

/// argmin_{r, s} w s + rho/2 ||r - (z - u)||^2  s.t.  r <= s 1,  1'r <= cbh.
inline ColumnUpdate solve_x_column(std::span<const double> z_col, std::span<const double> u_col, double w,
                                   double cbh, double rho, double tol = 1e-12)
{
    const std::size_t m = z_col.size();
    if (m == 0 || u_col.size() != m)
        throw DomainError("solve_x_column: column length mismatch");
    if (!(w >= 0.0) || !(cbh >= 0.0) || !(rho > 0.0))
        throw DomainError("solve_x_column: invalid parameters");

    std::vector<double> v(m);
    for (std::size_t i = 0; i < m; ++i)
        v[i] = z_col[i] - u_col[i];

    ColumnUpdate out;
    out.s = detail::column_slack(v, w, rho, tol);
    out.r.resize(m);
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        out.r[i] = std::min(v[i], out.s);
        sum += out.r[i];
    }
    if (sum <= cbh * (1.0 + 1e-12))
        return out;

    // Backhaul binds: shift by the closed-form multiplier and solve again.
    double vsum = std::accumulate(v.begin(), v.end(), 0.0);
    double mu = (rho * vsum - w - rho * cbh) / static_cast<double>(m);
    for (double& x : v)
        x -= mu / rho;
    out.s = detail::column_slack(v, w, rho, tol);
    for (std::size_t i = 0; i < m; ++i)
        out.r[i] = std::min(v[i], out.s);
    out.backhaul_active = true;
    return out;
}

/// Euclidean projection of (rbar + ubar) onto {1'z = min_rate, 0 <= z <= cbar}.
inline std::vector<double> solve_z_row(std::size_t m, std::span<const double> rbar_row,
                                       std::span<const double> ubar_row, std::span<const double> cbar_row,
                                       double min_rate, double tol = 1e-12)
{
    const std::size_t g_count = rbar_row.size();
    if (g_count == 0 || ubar_row.size() != g_count || cbar_row.size() != g_count)
        throw DomainError("solve_z_row: row length mismatch");
    double total = std::accumulate(cbar_row.begin(), cbar_row.end(), 0.0);
    if (total < min_rate)
        throw InfeasibleError("terminal " + std::to_string(m) + " cannot reach the target rate: total capacity " +
                                  std::to_string(total) + " < " + std::to_string(min_rate),
                              m);

    std::vector<double> v(g_count);
    for (std::size_t g = 0; g < g_count; ++g)
        v[g] = rbar_row[g] + ubar_row[g];
    auto f = [&](double lambda) {
        double acc = 0.0;
        for (std::size_t g = 0; g < g_count; ++g)
            acc += std::max(0.0, std::min(cbar_row[g], v[g] - lambda));
        return acc;
    };

    const double share = min_rate / static_cast<double>(g_count);
    double lo = kInf, hi = -kInf;
    for (std::size_t g = 0; g < g_count; ++g) {
        lo = std::min(lo, v[g] - cbar_row[g]);
        if (cbar_row[g] > share)
            hi = std::max(hi, v[g] - share);
    }
    std::vector<double> z(g_count);
    if (hi == -kInf) {
        // Every capacity equals R^min / G: the only feasible point.
        std::copy(cbar_row.begin(), cbar_row.end(), z.begin());
        return z;
    }
    hi = std::max(hi, lo);
    double lambda = bisect_root(f, min_rate, lo, hi, tol);
    for (std::size_t g = 0; g < g_count; ++g)
        z[g] = std::max(0.0, std::min(cbar_row[g], v[g] - lambda));
    return z;
}

/// U + R - Z.
inline void update_dual(Matrix& u, const Matrix& r, const Matrix& z)
{
    auto du = u.data();
    auto dr = r.data();
    auto dz = z.data();
    for (std::size_t i = 0; i < du.size(); ++i)
        du[i] += dr[i] - dz[i];
}

inline Residuals check_convergence(const AdmmState& state, const Matrix& prev_z, double rho, double eps_abs,
                                   double eps_rel)
{
    Residuals res;
    const double scale = std::sqrt(static_cast<double>(state.r.size()));
    res.primal = frobenius_distance(state.r, state.z);
    res.dual = rho * frobenius_distance(state.z, prev_z);
    res.eps_pri = scale * eps_abs + eps_rel * std::max(frobenius_norm(state.r), frobenius_norm(state.z));
    res.eps_dual = scale * eps_abs + eps_rel * rho * frobenius_norm(state.u);
    res.converged = res.primal * res.primal <= res.eps_pri && res.dual * res.dual <= res.eps_dual;
    return res;
}

/// Z = min(C, R^min / M), each column scaled down to its backhaul; U = 0.
inline AdmmState initial_state(const PlacementProblem& p)
{
    const std::size_t m_count = p.num_gts(), g_count = p.num_points();
    AdmmState st{Matrix(m_count, g_count), Matrix(m_count, g_count), Matrix(m_count, g_count),
                 std::vector<double>(g_count, 0.0), 0};
    const double share = p.min_rate / static_cast<double>(m_count);
    for (std::size_t g = 0; g < g_count; ++g) {
        double sum = 0.0;
        for (std::size_t m = 0; m < m_count; ++m) {
            st.z(m, g) = std::min(p.capacity(m, g), share);
            sum += st.z(m, g);
        }
        if (sum > p.backhaul[g] && sum > 0.0) {
            double f = p.backhaul[g] / sum;
            for (std::size_t m = 0; m < m_count; ++m)
                st.z(m, g) *= f;
        }
    }
    st.r = st.z;
    return st;
}

/// One sweep: all X-columns, all Z-rows, then the dual update.
inline void gspa_iterate(const PlacementProblem& p, AdmmState& st, const AdmmConfig& cfg)
{
    const std::size_t m_count = p.num_gts(), g_count = p.num_points();
    detail::parallel_for(g_count, cfg.threads, [&](std::size_t g) {
        std::vector<double> zc(m_count), uc(m_count);
        for (std::size_t m = 0; m < m_count; ++m) {
            zc[m] = st.z(m, g);
            uc[m] = st.u(m, g);
        }
        ColumnUpdate cu = solve_x_column(zc, uc, p.weights[g], p.backhaul[g], cfg.rho, cfg.bisection_tol);
        for (std::size_t m = 0; m < m_count; ++m)
            st.r(m, g) = cu.r[m];
        st.s[g] = cu.s;
    });
    detail::parallel_for(m_count, cfg.threads, [&](std::size_t m) {
        auto z = solve_z_row(m, st.r.row(m), st.u.row(m), p.capacity.row(m), p.min_rate, cfg.bisection_tol);
        std::copy(z.begin(), z.end(), st.z.row(m).begin());
    });
    update_dual(st.u, st.r, st.z);
    ++st.iter;
}

/// w_g = 1 / (||r_g||_inf + epsilon), scaled so the largest weight is 1.
inline std::vector<double> reweight(const Matrix& r, double epsilon)
{
    if (!(epsilon > 0.0))
        throw DomainError("reweight: epsilon must be positive");
    std::vector<double> w(r.cols());
    double wmax = 0.0;
    for (std::size_t g = 0; g < r.cols(); ++g) {
        double inf = 0.0;
        for (std::size_t m = 0; m < r.rows(); ++m)
            inf = std::max(inf, std::abs(r(m, g)));
        w[g] = 1.0 / (inf + epsilon);
        wmax = std::max(wmax, w[g]);
    }
    for (double& x : w)
        x /= wmax;
    return w;
}

/// sum_g w_g ||r_g||_inf.
inline double group_sparse_objective(const Matrix& r, std::span<const double> w)
{
    double acc = 0.0;
    for (std::size_t g = 0; g < r.cols(); ++g) {
        double inf = 0.0;
        for (std::size_t m = 0; m < r.rows(); ++m)
            inf = std::max(inf, std::abs(r(m, g)));
        acc += w[g] * inf;
    }
    return acc;
}

/// Runs ADMM on `p` from `st` until the stopping rule holds or max_iters sweeps.
inline Residuals admm_run(const PlacementProblem& p, AdmmState& st, const AdmmConfig& cfg)
{
    Residuals res;
    Matrix prev;
    for (std::size_t k = 0; k < cfg.max_iters; ++k) {
        prev = st.z;
        gspa_iterate(p, st, cfg);
        res = check_convergence(st, prev, cfg.rho, cfg.eps_abs, cfg.eps_rel);
        if (res.converged)
            break;
    }
    return res;
}

/// Smallest number of ABSs any allocation can use: ceil(M R^min / max c^BH).
/// nullopt when no backhaul is available and R^min > 0.
inline std::optional<std::size_t> lower_bound(std::size_t num_gts, double min_rate, std::span<const double> backhaul)
{
    if (min_rate <= 0.0 || num_gts == 0)
        return 0;
    double bmax = backhaul.empty() ? 0.0 : *std::max_element(backhaul.begin(), backhaul.end());
    if (!(bmax > 0.0))
        return std::nullopt;
    double q = static_cast<double>(num_gts) * min_rate / bmax;
    double f = std::floor(q);
    // Treat ratios within rounding of an integer as exact.
    if (q - f <= 1e-12 * std::max(1.0, q))
        return static_cast<std::size_t>(f);
    return static_cast<std::size_t>(f) + 1;
}

namespace detail {

inline std::vector<double> column_inf_norms(const Matrix& r)
{
    std::vector<double> out(r.cols(), 0.0);
    for (std::size_t m = 0; m < r.rows(); ++m)
        for (std::size_t g = 0; g < r.cols(); ++g)
            out[g] = std::max(out[g], std::abs(r(m, g)));
    return out;
}

// Exact allocation on `cols` via the relaxed LP, in units of R^min. Returns the
// rate matrix (native units) or nullopt if infeasible.
inline std::optional<Matrix> restricted_allocation(const PlacementProblem& p, std::span<const std::size_t> cols)
{
    PlacementProblem q = p.restricted(cols).rescaled(p.min_rate);
    LpSolution sol = solve_lp(build_relaxed_lp(q));
    if (sol.status != LpStatus::optimal)
        return std::nullopt;
    Matrix r = relaxed_lp_rates(q, sol.x);
    for (double& v : r.data())
        v *= p.min_rate;
    return r;
}

} // namespace detail

/// Group-sparse placement: reweighted ADMM rounds, column activation, and an
/// exact allocation on the selected columns.
inline PlacementSolution gspa_solve(const PlacementProblem& problem, const AdmmConfig& cfg = {})
{
    problem.validate();
    cfg.validate();
    const std::size_t m_count = problem.num_gts(), g_count = problem.num_points();
    PlacementSolution out;
    out.rates = Matrix(m_count, 0);
    if (m_count == 0 || problem.min_rate == 0.0) {
        out.feasible = true;
        return out;
    }
    if (g_count == 0)
        throw InfeasibleError("no grid points available");
    for (std::size_t m = 0; m < m_count; ++m) {
        auto row = problem.capacity.row(m);
        if (std::accumulate(row.begin(), row.end(), 0.0) < problem.min_rate)
            throw InfeasibleError("terminal " + std::to_string(m) + " cannot reach the target rate", m);
    }
    auto bound = lower_bound(m_count, problem.min_rate, problem.backhaul);
    if (!bound || *bound > g_count)
        throw InfeasibleError("backhaul cannot carry the aggregate target rate");

    PlacementProblem p = problem;
    AdmmState st = initial_state(p);
    Residuals res;
    bool all_converged = true;
    for (std::size_t round = 0; round <= cfg.reweight_rounds; ++round) {
        if (round > 0)
            p.weights = reweight(st.r, cfg.reweight_epsilon * p.min_rate);
        res = admm_run(p, st, cfg);
        all_converged = all_converged && res.converged;
    }

    const double thresh = cfg.activation_threshold * p.min_rate;
    std::vector<double> norms = detail::column_inf_norms(st.r);
    std::vector<std::size_t> active;
    for (std::size_t g = 0; g < g_count; ++g)
        if (norms[g] > thresh)
            active.push_back(g);

    // Columns outside the support, strongest first, for augmenting an infeasible support.
    std::vector<std::size_t> spare;
    for (std::size_t g = 0; g < g_count; ++g)
        if (norms[g] <= thresh)
            spare.push_back(g);
    std::stable_sort(spare.begin(), spare.end(), [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

    bool supported = flow_allocation(p, active).has_value();
    for (std::size_t next = 0; !supported && next < spare.size(); ++next) {
        active.insert(std::upper_bound(active.begin(), active.end(), spare[next]), spare[next]);
        supported = flow_allocation(p, active).has_value();
    }
    if (!supported)
        throw InfeasibleError("no rate allocation meets the target for every terminal");

    // Drop columns the support does not need, weakest first.
    if (cfg.prune) {
        std::vector<std::size_t> order = active;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return norms[a] < norms[b]; });
        for (std::size_t g : order) {
            std::vector<std::size_t> trial;
            std::copy_if(active.begin(), active.end(), std::back_inserter(trial), [g](std::size_t c) { return c != g; });
            if (flow_allocation(p, trial))
                active = std::move(trial);
        }
    }

    std::optional<Matrix> rates = detail::restricted_allocation(p, active);
    if (!rates)
        rates = flow_allocation(p, active);
    if (!rates)
        throw InfeasibleError("no rate allocation meets the target for every terminal");

    // Keep only columns that carry traffic in the exact allocation.
    std::vector<std::size_t> keep_idx;
    for (std::size_t k = 0; k < active.size(); ++k) {
        double col = 0.0;
        for (std::size_t m = 0; m < m_count; ++m)
            col = std::max(col, (*rates)(m, k));
        if (col > 1e-9 * p.min_rate)
            keep_idx.push_back(k);
    }
    out.rates = rates->select_cols(keep_idx);
    for (auto k : keep_idx)
        out.active_columns.push_back(active[k]);
    for (double& v : out.rates.data())
        v = std::max(v, 0.0);

    out.iterations = st.iter;
    out.primal_residual = res.primal;
    out.dual_residual = res.dual;
    out.converged = all_converged;
    out.feasible = verify_feasibility(problem, out).ok();
    return out;
}

} // namespace absplace
