#pragma once

// Normal, central chi-squared and noncentral chi-squared distribution
// functions used by the test statistics and the power formulas.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "survq/error.hpp"

namespace survq {

/// Standard normal CDF.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// Standard normal upper tail 1 - Phi(x), without cancellation for large x.
inline double normal_sf(double x) {
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Inverse of the standard normal CDF (Wichura's AS 241, PPND16), followed
/// by one Halley step against erfc.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw InvalidInput("normal_quantile: probability must lie in (0,1), got " + std::to_string(p));
    }
    const double q = p - 0.5;
    double val;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        val = q *
              (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r + 67265.770927008700853) * r +
                   45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
                133.14166789178437745) * r + 3.387132872796366608) /
              (((((((r * 5226.495278852545925 + 28729.085735721942674) * r + 39307.89580009271061) * r +
                   21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
                42.313330701600911252) * r + 1.0);
    } else {
        double r = q < 0.0 ? p : 1.0 - p;
        r = std::sqrt(-std::log(r));
        if (r <= 5.0) {
            r -= 1.6;
            val = (((((((r * 7.7454501427834140764e-4 + .0227238449892691845833) * r + .24178072517745061177) * r +
                       1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
                    4.6303378461565452959) * r + 1.42343711074968357734) /
                  (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r + .0151986665636164571966) * r +
                       .14810397642748007459) * r + .68976733498510000455) * r + 1.6763848301838038494) * r +
                    2.05319162663775882187) * r + 1.0);
        } else {
            r -= 5.0;
            val = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r + .0012426609473880784386) * r +
                       .026532189526576123093) * r + .29656057182850489123) * r + 1.7848265399172913358) * r +
                    5.4637849111641143699) * r + 6.6579046435011037772) /
                  (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                       7.868691311456132591e-4) * r + .0148753612908506148525) * r + .13692988092273580531) * r +
                    .59983220655588793769) * r + 1.0);
        }
        if (q < 0.0) val = -val;
    }
    // Halley refinement; the tail whose probability is small is used as residual.
    const double err = p < 0.5 ? normal_cdf(val) - p : (1.0 - p) - normal_sf(val);
    const double u = err * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * val * val);
    if (std::isfinite(u)) val -= u / (1.0 + 0.5 * val * u);
    return val;
}

namespace detail {

inline constexpr int kGammaMaxIter = 100000;

// Power series for P(a, x); valid and fast for x < a + 1.
inline double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < kGammaMaxIter; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-17) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) (modified Lentz); valid for x >= a + 1.
inline double gamma_q_fraction(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kGammaMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

/// Regularized lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw InvalidInput("gamma_p: requires a > 0 and x >= 0");
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    if (a == 0.5) return std::erf(std::sqrt(x));
    if (a == 1.0) return -std::expm1(-x);
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_fraction(a, x);
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
inline double gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw InvalidInput("gamma_q: requires a > 0 and x >= 0");
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    if (a == 0.5) return std::erfc(std::sqrt(x));
    if (a == 1.0) return std::exp(-x);
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_fraction(a, x);
}

inline double chi2_cdf(double x, double dof) {
    if (x <= 0.0) return 0.0;
    return gamma_p(0.5 * dof, 0.5 * x);
}

inline double chi2_sf(double x, double dof) {
    if (x <= 0.0) return 1.0;
    return gamma_q(0.5 * dof, 0.5 * x);
}

inline double chi2_pdf(double x, double dof) {
    if (x <= 0.0) return 0.0;
    const double a = 0.5 * dof;
    return std::exp((a - 1.0) * std::log(0.5 * x) - 0.5 * x - std::lgamma(a)) * 0.5;
}

/// Upper-tail chi-squared quantile: x such that P(chi2_dof > x) = alpha.
inline double chi2_upper_quantile(double alpha, double dof) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("chi2_upper_quantile: alpha must lie in (0,1)");
    if (!(dof > 0.0)) throw InvalidInput("chi2_upper_quantile: dof must be positive");
    if (dof == 1.0) {
        const double z = normal_quantile(1.0 - 0.5 * alpha);
        return z * z;
    }
    if (dof == 2.0) return -2.0 * std::log(alpha);

    // Wilson-Hilferty start, then safeguarded Newton on sf(x) - alpha.
    const double z = normal_quantile(1.0 - alpha);
    const double h = 2.0 / (9.0 * dof);
    double x = std::max(1e-8, dof * std::pow(1.0 - h + z * std::sqrt(h), 3));
    double lo = 0.0;
    double hi = std::max(2.0 * x, dof + 10.0);
    while (chi2_sf(hi, dof) > alpha) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double f = chi2_sf(x, dof) - alpha;
        if (f > 0.0) lo = x; else hi = x;
        const double pdf = chi2_pdf(x, dof);
        double next = pdf > 0.0 ? x + f / pdf : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::fabs(next - x) <= 1e-15 * std::max(1.0, x)) return next;
        x = next;
    }
    return x;
}

namespace detail {

// Poisson(mu) mixture of central chi-squared tails, summed outward from the
// Poisson mode. Stops when the unvisited Poisson mass drops below tail_tol.
template <class CentralTail>
double poisson_mixture(double mu, double tail_tol, CentralTail&& tail) {
    if (mu == 0.0) return tail(0);
    const long mode = static_cast<long>(std::floor(mu));
    const double log_mu = std::log(mu);
    auto log_weight = [&](long k) { return -mu + k * log_mu - std::lgamma(static_cast<double>(k) + 1.0); };

    double mass = 0.0;
    double sum = 0.0;
    const double w_mode = std::exp(log_weight(mode));
    // Downward from the mode. Weights decay at least geometrically below the
    // mode, so stopping at a negligible weight bounds the skipped mass.
    double w = w_mode;
    for (long k = mode; k >= 0; --k) {
        mass += w;
        sum += w * tail(k);
        if (w < tail_tol * 1e-4) break;
        w *= static_cast<double>(k) / mu;
    }
    // Upward until the remaining mass is below the tolerance.
    w = w_mode;
    for (long k = mode + 1; k < mode + 10'000'000; ++k) {
        w *= mu / static_cast<double>(k);
        mass += w;
        sum += w * tail(k);
        if (1.0 - mass < tail_tol) break;
        if (w == 0.0 && k > mode + 10) break;
    }
    return sum;
}

}  // namespace detail

/// Noncentral chi-squared CDF as a Poisson(lambda/2) mixture of central
/// chi-squared CDFs with dof + 2k degrees of freedom.
inline double noncentral_chi2_cdf(double x, double dof, double noncentrality, double tail_tol = 1e-12) {
    if (x < 0.0 || !(dof > 0.0) || noncentrality < 0.0) {
        throw InvalidInput("noncentral_chi2_cdf: requires x >= 0, dof > 0, noncentrality >= 0");
    }
    if (x == 0.0) return 0.0;
    const double v = detail::poisson_mixture(0.5 * noncentrality, tail_tol,
                                             [&](long k) { return chi2_cdf(x, dof + 2.0 * k); });
    return std::clamp(v, 0.0, 1.0);
}

/// Upper tail of the noncentral chi-squared distribution, summed directly
/// so values near 0 keep full relative precision.
inline double noncentral_chi2_sf(double x, double dof, double noncentrality, double tail_tol = 1e-12) {
    if (x < 0.0 || !(dof > 0.0) || noncentrality < 0.0) {
        throw InvalidInput("noncentral_chi2_sf: requires x >= 0, dof > 0, noncentrality >= 0");
    }
    if (x == 0.0) return 1.0;
    const double v = detail::poisson_mixture(0.5 * noncentrality, tail_tol,
                                             [&](long k) { return chi2_sf(x, dof + 2.0 * k); });
    return std::clamp(v, 0.0, 1.0);
}

}  // namespace survq
