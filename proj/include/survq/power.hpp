#pragma once

// Asymptotic power of the quantile tests and minimum sample size search.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "survq/error.hpp"
#include "survq/matrix.hpp"
#include "survq/special_functions.hpp"

namespace survq {

inline void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("alpha must lie in (0,1)");
}

/// Power of the two-sided univariate test:
///   1 - Phi(q - sqrt(n) delta / sigma) + Phi(-q - sqrt(n) delta / sigma),
/// with q the upper alpha/2 normal quantile and n the total sample size.
inline double power_univariate(double delta, double sigma2, double n_total, double alpha) {
    check_alpha(alpha);
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw InvalidInput("power_univariate: sigma^2 must be positive");
    if (!(n_total >= 2.0)) throw InvalidInput("power_univariate: total sample size must be at least 2");
    const double q = normal_quantile(1.0 - 0.5 * alpha);
    const double shift = std::sqrt(n_total) * delta / std::sqrt(sigma2);
    return normal_sf(q - shift) + normal_cdf(-q - shift);
}

/// Noncentrality n * delta' Psi^{-1} delta of the multivariate statistic.
inline double multivariate_noncentrality(const std::vector<double>& deltas, const Matrix& psi, double n_total) {
    if (deltas.size() != psi.size() || deltas.empty()) {
        throw InvalidInput("multivariate power: one difference per row of Psi required");
    }
    const Cholesky chol(psi);
    return n_total * chol.quadratic_form(deltas);
}

/// Power of the multivariate test, P(chi2_J(lambda) > q_{J,1-alpha}).
inline double power_multivariate(const std::vector<double>& deltas, const Matrix& psi, double n_total, double alpha,
                                 double tail_tol = 1e-12) {
    check_alpha(alpha);
    if (!(n_total >= 2.0)) throw InvalidInput("power_multivariate: total sample size must be at least 2");
    const double lambda = multivariate_noncentrality(deltas, psi, n_total);
    const auto dof = static_cast<double>(deltas.size());
    return noncentral_chi2_sf(chi2_upper_quantile(alpha, dof), dof, lambda, tail_tol);
}

struct SampleSizeResult {
    std::size_t per_group_n = 0;
    std::size_t total_n = 0;
    double achieved_power = 0.0;
    double power_at_n_minus_1 = 0.0;  // NaN when per_group_n == 1
};

/// Smallest per-group n (equal allocation) whose power reaches `target`.
/// `power_at(per_group)` must be non-decreasing. `seed_total` is a real
/// valued first guess for the total sample size; it is rounded up to the
/// next even integer and halved before the integer scan.
inline SampleSizeResult min_sample_size(const std::function<double(std::size_t)>& power_at, double target,
                                        double seed_total, std::size_t max_per_group = 100'000'000) {
    double seed = std::isfinite(seed_total) && seed_total > 2.0 ? std::ceil(seed_total) : 2.0;
    if (std::fmod(seed, 2.0) != 0.0) seed += 1.0;
    std::size_t n = static_cast<std::size_t>(std::min(seed / 2.0, static_cast<double>(max_per_group)));
    n = std::max<std::size_t>(n, 1);

    double pw = power_at(n);
    while (pw < target) {
        if (n >= max_per_group) throw UnattainablePower("target power not reached below the sample size cap");
        n = std::min(max_per_group, n + std::max<std::size_t>(1, n / 64));
        pw = power_at(n);
    }
    // Walk down until n - 1 fails; coarse steps first, then unit steps.
    std::size_t step = std::max<std::size_t>(1, n / 64);
    while (true) {
        if (n == 1) break;
        const std::size_t cand = n > step ? n - step : 1;
        const double pc = power_at(cand);
        if (pc >= target) {
            n = cand;
            pw = pc;
            continue;
        }
        if (step == 1) break;
        step = std::max<std::size_t>(1, step / 4);
    }
    SampleSizeResult r;
    r.per_group_n = n;
    r.total_n = 2 * n;
    r.achieved_power = pw;
    r.power_at_n_minus_1 = n > 1 ? power_at(n - 1) : std::numeric_limits<double>::quiet_NaN();
    return r;
}

inline void check_target_power(double target, double alpha) {
    check_alpha(alpha);
    if (!(target > alpha && target < 1.0)) {
        std::ostringstream os;
        os << "target power " << target << " is unattainable: it must lie in (alpha, 1) = (" << alpha << ", 1)";
        throw UnattainablePower(os.str());
    }
}

/// Minimum per-group sample size for the univariate test, sigma^2 fixed.
inline SampleSizeResult min_sample_size_univariate(double delta, double sigma2, double target, double alpha) {
    check_target_power(target, alpha);
    if (delta == 0.0) throw UnattainablePower("no sample size detects a zero difference");
    if (!(sigma2 > 0.0)) throw InvalidInput("min_sample_size: sigma^2 must be positive");
    const double z = normal_quantile(1.0 - 0.5 * alpha) + normal_quantile(target);
    const double seed = z * z * sigma2 / (delta * delta);
    return min_sample_size(
        [&](std::size_t per) { return power_univariate(delta, sigma2, 2.0 * static_cast<double>(per), alpha); },
        target, seed);
}

/// Minimum per-group sample size for the multivariate test, Psi fixed.
inline SampleSizeResult min_sample_size_multivariate(const std::vector<double>& deltas, const Matrix& psi,
                                                     double target, double alpha) {
    check_target_power(target, alpha);
    const double lambda_per_unit = multivariate_noncentrality(deltas, psi, 1.0);
    if (!(lambda_per_unit > 0.0)) throw UnattainablePower("no sample size detects a zero difference vector");
    // Seed from the one-degree-of-freedom approximation; the scan corrects it.
    const double z = normal_quantile(1.0 - 0.5 * alpha) + normal_quantile(target);
    const double seed = z * z / lambda_per_unit;
    return min_sample_size(
        [&](std::size_t per) { return power_multivariate(deltas, psi, 2.0 * static_cast<double>(per), alpha); },
        target, seed);
}

}  // namespace survq
