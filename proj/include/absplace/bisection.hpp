#pragma once

#include <absplace/errors.hpp>

#include <algorithm>
#include <cmath>

namespace absplace {

/// Finds s in [lo, hi] with f(s) = target for a non-increasing f.
/// Stops once the bracket is at most tol * max(1, |hi - lo|) wide.
template <class F>
double bisect_root(F&& f, double target, double lo, double hi, double tol = 1e-12)
{
    if (!(lo <= hi))
        throw NumericError("bisect_root: empty bracket", lo, hi);
    double f_lo = f(lo);
    double f_hi = f(hi);
    double slack = 1e-9 * std::max({1.0, std::abs(target), std::abs(f_lo), std::abs(f_hi)});
    if (!(f_lo >= target - slack) || !(f_hi <= target + slack))
        throw NumericError("bisect_root: target not bracketed", f_lo, f_hi);
    if (f_lo <= target)
        return lo;
    if (f_hi >= target)
        return hi;

    const double width = tol * std::max(1.0, hi - lo);
    for (int it = 0; it < 200 && hi - lo > width; ++it) {
        double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi)
            break;
        double fm = f(mid);
        if (fm == target)
            return mid;
        if (fm > target)
            lo = mid;
        else
            hi = mid;
    }
    return lo + 0.5 * (hi - lo);
}

} // namespace absplace
