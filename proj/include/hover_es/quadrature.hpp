#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>

#include "hover_es/error.hpp"

namespace hover_es::quad {

struct Options {
    double rel_tol = 1e-9;
    // Grading exponent: nodes cluster toward both endpoints as u^grading.
    double grading = 10.0;
    std::size_t initial_panels = 16;
    std::size_t max_panels = std::size_t{1} << 20;
};

namespace detail {

// Composite Simpson over the half between `anchor` and `anchor + span` on the graded
// map x = anchor + span u^p, u in [0, 1]. `span` is negative for the upper half so
// nodes are measured from their own endpoint without cancellation. The endpoint term
// carries a zero Jacobian and is dropped, as is any node that rounds onto the
// endpoint, which admits integrable power singularities there.
template <class F>
double graded_half(F&& f, double anchor, double span, std::size_t panels, double p) {
    auto g = [&](double u) {
        if (u <= 0.0) return 0.0;
        const double x = anchor + span * std::pow(u, p);
        if (x == anchor) return 0.0;
        return f(x) * std::abs(span) * p * std::pow(u, p - 1.0);
    };
    const double h = 1.0 / static_cast<double>(panels);
    double sum = g(0.0) + g(1.0);
    for (std::size_t i = 1; i < 2 * panels; ++i) {
        const double u = 0.5 * h * static_cast<double>(i);
        sum += (i % 2 == 1 ? 4.0 : 2.0) * g(u);
    }
    return sum * h / 6.0;
}

}  // namespace detail

/// Integrates f over [lo, hi] with composite Simpson on a mesh graded toward both
/// endpoints. Panels double until successive estimates agree to `rel_tol`.
/// Throws IntegrationError when the estimate is non-finite or fails to converge.
template <class F>
double integrate(F&& f, double lo, double hi, const Options& opt = {}) {
    if (!(hi > lo)) {
        if (hi == lo) return 0.0;
        throw DomainError("quadrature: upper limit below lower limit");
    }
    const double half = 0.5 * (hi - lo);
    auto estimate = [&](std::size_t n) {
        return detail::graded_half(f, lo, half, n, opt.grading) + detail::graded_half(f, hi, -half, n, opt.grading);
    };

    double prev = estimate(opt.initial_panels);
    for (std::size_t n = 2 * opt.initial_panels; n <= opt.max_panels; n *= 2) {
        const double cur = estimate(n);
        if (!std::isfinite(cur)) break;
        // Simpson error falls by 16 per halving on a smooth mapped integrand; one
        // Richardson step removes the leading term.
        if (std::abs(cur - prev) <= opt.rel_tol * std::abs(cur)) return cur + (cur - prev) / 15.0;
        prev = cur;
    }
    std::ostringstream msg;
    msg << "quadrature did not converge to relative tolerance " << opt.rel_tol << " on [" << lo << ", "
        << hi << "] (last estimate " << prev << ")";
    throw IntegrationError(msg.str());
}

}  // namespace hover_es::quad
