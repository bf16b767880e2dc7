#pragma once

#include <absplace/errors.hpp>
#include <absplace/matrix.hpp>
#include <absplace/problem.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace absplace {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// min c'x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  lower <= x <= upper.
struct LinearProgram {
    std::vector<double> objective;
    Matrix a_eq;
    std::vector<double> b_eq;
    Matrix a_ub;
    std::vector<double> b_ub;
    std::vector<double> lower; // defaults to 0 when empty
    std::vector<double> upper; // defaults to +inf when empty

    LinearProgram() = default;
    explicit LinearProgram(std::size_t n) : objective(n, 0.0), a_eq(0, n), a_ub(0, n), lower(n, 0.0), upper(n, kInf) {}

    std::size_t num_vars() const noexcept { return objective.size(); }

    void validate() const
    {
        const std::size_t n = num_vars();
        if (a_eq.rows() != b_eq.size() || (a_eq.rows() > 0 && a_eq.cols() != n))
            throw DomainError("lp: equality block has inconsistent dimensions");
        if (a_ub.rows() != b_ub.size() || (a_ub.rows() > 0 && a_ub.cols() != n))
            throw DomainError("lp: inequality block has inconsistent dimensions");
        if ((!lower.empty() && lower.size() != n) || (!upper.empty() && upper.size() != n))
            throw DomainError("lp: bound vectors have wrong length");
        for (std::size_t j = 0; j < n; ++j) {
            double lo = lower.empty() ? 0.0 : lower[j];
            double hi = upper.empty() ? kInf : upper[j];
            if (std::isnan(lo) || std::isnan(hi) || lo > hi || lo == kInf || hi == -kInf)
                throw DomainError("lp: invalid bounds on variable " + std::to_string(j));
            if (!std::isfinite(objective[j]))
                throw DomainError("lp: non-finite objective coefficient");
        }
        for (double v : a_eq.data())
            if (!std::isfinite(v))
                throw DomainError("lp: non-finite constraint coefficient");
        for (double v : a_ub.data())
            if (!std::isfinite(v))
                throw DomainError("lp: non-finite constraint coefficient");
        for (double v : b_eq)
            if (!std::isfinite(v))
                throw DomainError("lp: non-finite right-hand side");
        for (double v : b_ub)
            if (!std::isfinite(v))
                throw DomainError("lp: non-finite right-hand side");
    }
};

enum class LpStatus { optimal, infeasible, unbounded };

inline const char* to_string(LpStatus s)
{
    switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    }
    return "unknown";
}

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    std::vector<double> x;
    double objective = 0.0;
    std::size_t pivots = 0;
};

namespace detail {

/// Dense two-phase tableau simplex on  min c'x, Ax = b, x >= 0, b >= 0.
class Tableau {
public:
    Tableau(std::size_t rows, std::size_t cols)
        : m_(rows), n_(cols), stride_(cols + 1), t_(rows * (cols + 1), 0.0), d_(cols + 1, 0.0), basis_(rows, 0),
          barred_(cols, false)
    {
    }

    double& a(std::size_t r, std::size_t c) noexcept { return t_[r * stride_ + c]; }
    double a(std::size_t r, std::size_t c) const noexcept { return t_[r * stride_ + c]; }
    double& rhs(std::size_t r) noexcept { return t_[r * stride_ + n_]; }
    double rhs(std::size_t r) const noexcept { return t_[r * stride_ + n_]; }
    std::size_t& basic(std::size_t r) noexcept { return basis_[r]; }
    void bar(std::size_t c) noexcept { barred_[c] = true; }
    std::size_t rows() const noexcept { return m_; }
    std::size_t cols() const noexcept { return n_; }
    std::size_t pivots() const noexcept { return pivots_; }

    /// Reduced costs for cost vector `cost` under the current basis.
    void price(std::span<const double> cost)
    {
        for (std::size_t c = 0; c < n_; ++c)
            d_[c] = cost[c];
        d_[n_] = 0.0;
        for (std::size_t r = 0; r < m_; ++r) {
            double cb = cost[basis_[r]];
            if (cb == 0.0)
                continue;
            const double* row = &t_[r * stride_];
            for (std::size_t c = 0; c <= n_; ++c)
                d_[c] -= cb * row[c];
        }
    }

    double objective() const noexcept { return -d_[n_]; }

    enum class Result { optimal, unbounded };

    Result run(std::size_t max_pivots)
    {
        constexpr double kCostTol = 1e-9;
        constexpr double kPivotTol = 1e-9;
        std::size_t degenerate_run = 0;
        for (;;) {
            bool bland = degenerate_run > 50;
            std::size_t q = n_;
            double best = -kCostTol;
            for (std::size_t c = 0; c < n_; ++c) {
                if (barred_[c] || d_[c] >= best)
                    continue;
                q = c;
                if (bland)
                    break;
                best = d_[c];
            }
            if (q == n_)
                return Result::optimal;

            std::size_t p = m_;
            double ratio = kInf;
            for (std::size_t r = 0; r < m_; ++r) {
                double arq = a(r, q);
                if (arq <= kPivotTol)
                    continue;
                double ratio_r = std::max(rhs(r), 0.0) / arq;
                double eps = 1e-12 * std::max(1.0, ratio_r);
                if (p == m_ || ratio_r < ratio - eps) {
                    p = r;
                    ratio = ratio_r;
                } else if (ratio_r <= ratio + eps && basis_[r] < basis_[p]) {
                    p = r;
                    ratio = std::min(ratio, ratio_r);
                }
            }
            if (p == m_)
                return Result::unbounded;
            degenerate_run = ratio <= 1e-12 ? degenerate_run + 1 : 0;
            pivot(p, q);
            if (pivots_ > max_pivots)
                throw NumericError("simplex: pivot limit exceeded");
        }
    }

    void pivot(std::size_t p, std::size_t q)
    {
        double* prow = &t_[p * stride_];
        double inv = 1.0 / prow[q];
        for (std::size_t c = 0; c <= n_; ++c)
            prow[c] *= inv;
        prow[q] = 1.0;
        for (std::size_t r = 0; r < m_; ++r) {
            if (r == p)
                continue;
            double* row = &t_[r * stride_];
            double f = row[q];
            if (f == 0.0)
                continue;
            for (std::size_t c = 0; c <= n_; ++c)
                row[c] -= f * prow[c];
            row[q] = 0.0;
        }
        double f = d_[q];
        if (f != 0.0) {
            for (std::size_t c = 0; c <= n_; ++c)
                d_[c] -= f * prow[c];
            d_[q] = 0.0;
        }
        basis_[p] = q;
        ++pivots_;
    }

private:
    std::size_t m_, n_, stride_;
    std::vector<double> t_;
    std::vector<double> d_; // reduced costs; last entry is -objective
    std::vector<std::size_t> basis_;
    std::vector<bool> barred_;
    std::size_t pivots_ = 0;
};

} // namespace detail

/// Exact dense simplex. Returns a vertex solution when one exists.
inline LpSolution solve_lp(const LinearProgram& lp)
{
    lp.validate();
    const std::size_t n = lp.num_vars();
    auto lower = [&](std::size_t j) { return lp.lower.empty() ? 0.0 : lp.lower[j]; };
    auto upper = [&](std::size_t j) { return lp.upper.empty() ? kInf : lp.upper[j]; };

    // x_j = offset_j + sign_j * y_col  (a second column with the opposite sign for free variables).
    struct VarMap {
        double offset = 0.0;
        long col = -1;
        double sign = 1.0;
        long col_neg = -1;
    };
    std::vector<VarMap> vars(n);
    std::size_t ncols = 0;
    std::vector<std::pair<std::size_t, double>> ub_rows; // (col, bound)
    for (std::size_t j = 0; j < n; ++j) {
        double lo = lower(j), hi = upper(j);
        VarMap& v = vars[j];
        if (lo == hi) {
            v.offset = lo;
        } else if (std::isfinite(lo)) {
            v.offset = lo;
            v.col = static_cast<long>(ncols++);
            if (std::isfinite(hi))
                ub_rows.emplace_back(static_cast<std::size_t>(v.col), hi - lo);
        } else if (std::isfinite(hi)) {
            v.offset = hi;
            v.sign = -1.0;
            v.col = static_cast<long>(ncols++);
        } else {
            v.col = static_cast<long>(ncols++);
            v.col_neg = static_cast<long>(ncols++);
        }
    }

    const std::size_t n_eq = lp.a_eq.rows();
    const std::size_t n_le = lp.a_ub.rows() + ub_rows.size();
    const std::size_t n_rows = n_eq + n_le;

    // Row-wise structural coefficients and rhs, before slack/artificial assignment.
    Matrix rows(n_rows, ncols);
    std::vector<double> rhs(n_rows, 0.0);
    auto load = [&](std::size_t r, std::span<const double> coeffs, double b) {
        double acc = b;
        for (std::size_t j = 0; j < n; ++j) {
            double a = coeffs[j];
            if (a == 0.0)
                continue;
            const VarMap& v = vars[j];
            acc -= a * v.offset;
            if (v.col >= 0)
                rows(r, static_cast<std::size_t>(v.col)) += a * v.sign;
            if (v.col_neg >= 0)
                rows(r, static_cast<std::size_t>(v.col_neg)) -= a;
        }
        rhs[r] = acc;
    };
    for (std::size_t i = 0; i < n_eq; ++i)
        load(i, lp.a_eq.row(i), lp.b_eq[i]);
    for (std::size_t i = 0; i < lp.a_ub.rows(); ++i)
        load(n_eq + i, lp.a_ub.row(i), lp.b_ub[i]);
    for (std::size_t k = 0; k < ub_rows.size(); ++k) {
        std::size_t r = n_eq + lp.a_ub.rows() + k;
        rows(r, ub_rows[k].first) = 1.0;
        rhs[r] = ub_rows[k].second;
    }

    // Columns: structural | slacks (one per <= row) | artificials.
    std::vector<bool> needs_art(n_rows, false);
    std::size_t n_art = 0;
    for (std::size_t r = 0; r < n_rows; ++r) {
        bool is_le = r >= n_eq;
        if (!is_le || rhs[r] < 0.0) {
            needs_art[r] = true;
            ++n_art;
        }
    }
    const std::size_t slack0 = ncols;
    const std::size_t art0 = slack0 + n_le;
    const std::size_t total = art0 + n_art;

    detail::Tableau tab(n_rows, total);
    std::size_t art = art0;
    for (std::size_t r = 0; r < n_rows; ++r) {
        double s = rhs[r] < 0.0 ? -1.0 : 1.0;
        for (std::size_t c = 0; c < ncols; ++c)
            tab.a(r, c) = s * rows(r, c);
        tab.rhs(r) = s * rhs[r];
        if (r >= n_eq)
            tab.a(r, slack0 + (r - n_eq)) = s;
        if (needs_art[r]) {
            tab.a(r, art) = 1.0;
            tab.basic(r) = art++;
        } else {
            tab.basic(r) = slack0 + (r - n_eq);
        }
    }

    const std::size_t max_pivots = 50 * (n_rows + total) + 1000;
    double b_scale = 1.0;
    for (std::size_t r = 0; r < n_rows; ++r)
        b_scale = std::max(b_scale, std::abs(rhs[r]));

    if (n_art > 0) {
        std::vector<double> cost(total, 0.0);
        for (std::size_t c = art0; c < total; ++c)
            cost[c] = 1.0;
        tab.price(cost);
        tab.run(max_pivots);
        if (tab.objective() > 1e-9 * b_scale * static_cast<double>(std::max<std::size_t>(1, n_art)))
            return {LpStatus::infeasible, {}, 0.0, tab.pivots()};
        for (std::size_t r = 0; r < n_rows; ++r) {
            if (tab.basic(r) < art0)
                continue;
            std::size_t best = art0;
            double mag = 1e-9;
            for (std::size_t c = 0; c < art0; ++c)
                if (std::abs(tab.a(r, c)) > mag) {
                    mag = std::abs(tab.a(r, c));
                    best = c;
                }
            if (best < art0)
                tab.pivot(r, best);
        }
        for (std::size_t c = art0; c < total; ++c)
            tab.bar(c);
    }

    std::vector<double> cost(total, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const VarMap& v = vars[j];
        if (v.col >= 0)
            cost[static_cast<std::size_t>(v.col)] += lp.objective[j] * v.sign;
        if (v.col_neg >= 0)
            cost[static_cast<std::size_t>(v.col_neg)] -= lp.objective[j];
    }
    tab.price(cost);
    if (tab.run(max_pivots) == detail::Tableau::Result::unbounded)
        return {LpStatus::unbounded, {}, -kInf, tab.pivots()};

    std::vector<double> y(total, 0.0);
    for (std::size_t r = 0; r < n_rows; ++r)
        y[tab.basic(r)] = std::max(tab.rhs(r), 0.0);
    LpSolution sol{LpStatus::optimal, std::vector<double>(n), 0.0, tab.pivots()};
    for (std::size_t j = 0; j < n; ++j) {
        const VarMap& v = vars[j];
        double x = v.offset;
        if (v.col >= 0)
            x += v.sign * y[static_cast<std::size_t>(v.col)];
        if (v.col_neg >= 0)
            x -= y[static_cast<std::size_t>(v.col_neg)];
        sol.x[j] = std::clamp(x, lower(j), upper(j));
        sol.objective += lp.objective[j] * sol.x[j];
    }
    return sol;
}

// ---------------------------------------------------------------------------
// Placement LPs
// ---------------------------------------------------------------------------

/// Relaxed placement LP over variables (R row-major, then s):
/// min w's  s.t.  R1 = R^min 1,  R'1 <= c^BH,  R <= 1s',  0 <= R <= C,  s >= 0.
inline LinearProgram build_relaxed_lp(const PlacementProblem& p)
{
    p.validate();
    const std::size_t m_count = p.num_gts(), g_count = p.num_points();
    const std::size_t nr = m_count * g_count;
    LinearProgram lp(nr + g_count);
    for (std::size_t g = 0; g < g_count; ++g)
        lp.objective[nr + g] = p.weights[g];
    // Row sums equal R^min, so capacities at or above it never bind.
    for (std::size_t m = 0; m < m_count; ++m)
        for (std::size_t g = 0; g < g_count; ++g)
            if (p.capacity(m, g) < p.min_rate)
                lp.upper[m * g_count + g] = p.capacity(m, g);

    lp.a_eq = Matrix(m_count, lp.num_vars());
    lp.b_eq.assign(m_count, p.min_rate);
    for (std::size_t m = 0; m < m_count; ++m)
        for (std::size_t g = 0; g < g_count; ++g)
            lp.a_eq(m, m * g_count + g) = 1.0;

    lp.a_ub = Matrix(g_count + nr, lp.num_vars());
    lp.b_ub.assign(g_count + nr, 0.0);
    for (std::size_t g = 0; g < g_count; ++g) {
        for (std::size_t m = 0; m < m_count; ++m)
            lp.a_ub(g, m * g_count + g) = 1.0;
        lp.b_ub[g] = p.backhaul[g];
    }
    for (std::size_t m = 0; m < m_count; ++m)
        for (std::size_t g = 0; g < g_count; ++g) {
            std::size_t row = g_count + m * g_count + g;
            lp.a_ub(row, m * g_count + g) = 1.0;
            lp.a_ub(row, nr + g) = -1.0;
        }
    return lp;
}

/// Rate matrix stored in the first M*G entries of a relaxed-LP solution.
inline Matrix relaxed_lp_rates(const PlacementProblem& p, std::span<const double> x)
{
    Matrix r(p.num_gts(), p.num_points());
    std::copy_n(x.begin(), r.size(), r.data().begin());
    return r;
}

/// Whether some allocation on all columns of `p` meets R^min for every terminal.
inline bool allocation_feasible(const PlacementProblem& p)
{
    if (p.min_rate == 0.0)
        return true;
    PlacementProblem q = p.rescaled(p.min_rate);
    std::fill(q.weights.begin(), q.weights.end(), 0.0);
    double total_bh = 0.0;
    for (double b : q.backhaul)
        total_bh += std::min(b, static_cast<double>(q.num_gts()));
    if (total_bh < static_cast<double>(q.num_gts()) * (1.0 - 1e-12))
        return false;
    for (std::size_t m = 0; m < q.num_gts(); ++m) {
        double row = 0.0;
        for (std::size_t g = 0; g < q.num_points(); ++g)
            row += std::min(q.capacity(m, g), q.backhaul[g]);
        if (row < 1.0 - 1e-12)
            return false;
    }
    // Transportation feasibility only needs R and the column sums; the s block is omitted.
    const std::size_t m_count = q.num_gts(), g_count = q.num_points();
    LinearProgram lp(m_count * g_count);
    for (std::size_t m = 0; m < m_count; ++m)
        for (std::size_t g = 0; g < g_count; ++g)
            if (q.capacity(m, g) < 1.0)
                lp.upper[m * g_count + g] = q.capacity(m, g);
    lp.a_eq = Matrix(m_count, lp.num_vars());
    lp.b_eq.assign(m_count, 1.0);
    for (std::size_t m = 0; m < m_count; ++m)
        for (std::size_t g = 0; g < g_count; ++g)
            lp.a_eq(m, m * g_count + g) = 1.0;
    lp.a_ub = Matrix(g_count, lp.num_vars());
    lp.b_ub = q.backhaul;
    for (std::size_t g = 0; g < g_count; ++g)
        for (std::size_t m = 0; m < m_count; ++m)
            lp.a_ub(g, m * g_count + g) = 1.0;
    return solve_lp(lp).status == LpStatus::optimal;
}

} // namespace absplace
