#pragma once

// Two-sample tests of equality of one or several survival quantiles.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "survq/density.hpp"
#include "survq/error.hpp"
#include "survq/matrix.hpp"
#include "survq/special_functions.hpp"
#include "survq/survival.hpp"

namespace survq {

/// How f_k(F_k^{-1}(p)) is estimated inside a test.
struct DensitySettings {
    DensityMethod method = DensityMethod::ls;

    // LS: an explicit sigma_eps, or grid search when empty.
    std::optional<double> sigma_eps;
    std::vector<double> sigma_grid;  // empty: default_sigma_grid()
    std::size_t n_draws = 1000;
    std::uint64_t seed = 1;

    // KDE: an explicit bandwidth, or cross-validation when empty.
    std::optional<double> bandwidth;
    std::vector<double> bandwidth_grid;  // empty: default_bandwidth_grid()

    // Densities at or below this value are replaced by it (and flagged).
    double density_floor = 1e-8;
};

/// Per-arm ingredients of a variance term.
struct ArmEstimate {
    double quantile_time = 0.0;
    double phi = 0.0;
    DensityAtQuantile density;
    double density_used = 0.0;
    bool clamped = false;
};

/// Densities for one arm at every requested probability. The KDE bandwidth
/// is selected once per arm; LS draws come from `settings.seed` for both
/// arms, so the two arms share their Gaussian perturbations.
inline std::vector<DensityAtQuantile> estimate_arm_densities(const SurvivalSample& sample, const KaplanMeierFit& fit,
                                                             const std::vector<double>& probabilities,
                                                             const DensitySettings& settings) {
    std::vector<DensityAtQuantile> out;
    out.reserve(probabilities.size());
    if (settings.method == DensityMethod::ls) {
        for (double p : probabilities) {
            if (settings.sigma_eps) {
                out.push_back(estimate_density_ls(fit, p, LsConfig{*settings.sigma_eps, settings.n_draws, settings.seed}));
            } else {
                const std::vector<double> grid = settings.sigma_grid.empty() ? default_sigma_grid() : settings.sigma_grid;
                const SigmaSelection sel = select_sigma_ls(fit, p, grid, settings.n_draws, settings.seed);
                DensityAtQuantile d =
                    estimate_density_ls(fit, p, LsConfig{sel.sigma, settings.n_draws, settings.seed});
                d.tuning_source = sel.fallback ? "grid-search (median fallback)" : "grid-search";
                out.push_back(d);
            }
        }
        return out;
    }
    KdeConfig cfg;
    std::string source = "fixed";
    if (settings.bandwidth) {
        cfg.bandwidth = settings.bandwidth;
    } else {
        const std::vector<double> grid =
            settings.bandwidth_grid.empty() ? default_bandwidth_grid(sample) : settings.bandwidth_grid;
        cfg.bandwidth = select_bandwidth_cv(sample, grid).bandwidth;
        source = "cross-validation";
    }
    for (double p : probabilities) {
        DensityAtQuantile d = estimate_density_kde_at_quantile(sample, p, cfg);
        d.tuning_source = source;
        out.push_back(d);
    }
    return out;
}

/// Replace non-positive or tiny densities by the floor.
inline std::pair<double, bool> clamp_density(double value, double floor) {
    if (!(value > floor)) return {floor, true};
    return {value, false};
}

/// One arm's contribution (1 - p)^2 phi / (mu f^2) to the variance of
/// sqrt(n) (F1^{-1}(p) - F2^{-1}(p)).
inline double arm_variance_term(double p, double phi, double mu, double density) {
    const double s = 1.0 - p;
    return s * s * phi / (mu * density * density);
}

struct SigmaEstimate {
    double sigma = 0.0;
    double sigma2 = 0.0;
    std::array<double, 2> terms{};
    std::array<ArmEstimate, 2> arms{};
};

/// sigma^2 from already-estimated components, with density clamping.
inline SigmaEstimate sigma_from_components(double p, double phi1, double phi2, double mu1, double mu2, double f1,
                                           double f2, double density_floor = 1e-8) {
    SigmaEstimate out;
    auto [f1u, c1] = clamp_density(f1, density_floor);
    auto [f2u, c2] = clamp_density(f2, density_floor);
    out.arms[0].phi = phi1;
    out.arms[0].density.value = f1;
    out.arms[0].density_used = f1u;
    out.arms[0].clamped = c1;
    out.arms[1].phi = phi2;
    out.arms[1].density.value = f2;
    out.arms[1].density_used = f2u;
    out.arms[1].clamped = c2;
    out.terms[0] = arm_variance_term(p, phi1, mu1, f1u);
    out.terms[1] = arm_variance_term(p, phi2, mu2, f2u);
    out.sigma2 = out.terms[0] + out.terms[1];
    out.sigma = std::sqrt(out.sigma2);
    return out;
}

inline void check_probability(double p) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidInput("probability must lie in (0,1), got " + std::to_string(p));
}

inline SigmaEstimate sigma_hat_univariate(const TwoArmData& data, double p, const DensitySettings& settings) {
    check_probability(p);
    const std::array<const SurvivalSample*, 2> samples{&data.arm1, &data.arm2};
    std::array<double, 2> phi{};
    std::array<double, 2> f{};
    std::array<DensityAtQuantile, 2> dens{};
    std::array<double, 2> qt{};
    for (int k = 0; k < 2; ++k) {
        const KaplanMeierFit fit = fit_kaplan_meier(*samples[k]);
        const QuantileEstimate q = require_quantile(fit, p, "arm " + std::to_string(k + 1));
        qt[k] = q.time;
        phi[k] = phi_hat(fit, q.time);
        dens[k] = estimate_arm_densities(*samples[k], fit, {p}, settings).front();
        f[k] = dens[k].value;
    }
    SigmaEstimate out =
        sigma_from_components(p, phi[0], phi[1], data.mu1(), data.mu2(), f[0], f[1], settings.density_floor);
    for (int k = 0; k < 2; ++k) {
        out.arms[k].quantile_time = qt[k];
        out.arms[k].density = dens[k];
    }
    return out;
}

struct UnivariateTestResult {
    double p = 0.0;
    double delta_hat = 0.0;
    double sigma_hat = 0.0;
    double statistic = 0.0;
    double p_value = 1.0;
    DensityMethod density_method = DensityMethod::ls;
    std::array<ArmEstimate, 2> arms{};
    std::size_t n = 0;

    bool rejects(double alpha) const { return std::fabs(statistic) > normal_quantile(1.0 - 0.5 * alpha); }
};

inline double two_sided_normal_p_value(double statistic) {
    return std::erfc(std::fabs(statistic) / std::numbers::sqrt2);
}

inline UnivariateTestResult univariate_test(const TwoArmData& data, double p, const DensitySettings& settings) {
    const SigmaEstimate s = sigma_hat_univariate(data, p, settings);
    UnivariateTestResult r;
    r.p = p;
    r.n = data.total();
    r.density_method = settings.method;
    r.arms = s.arms;
    r.delta_hat = s.arms[0].quantile_time - s.arms[1].quantile_time;
    r.sigma_hat = s.sigma;
    r.statistic = std::sqrt(static_cast<double>(r.n)) * r.delta_hat / r.sigma_hat;
    r.p_value = two_sided_normal_p_value(r.statistic);
    return r;
}

/// Covariance of sqrt(n) (F_k^{-1}(p_j) - F_k^{-1}(p_j)-hat) over j for one arm:
///   diag      (1 - p_j)^2 phi(t_j) / (mu f_j^2)
///   off-diag  (1 - p_j)(1 - p_l) phi(min(t_j, t_l)) / (mu f_j f_l)
inline Matrix upsilon_matrix(const KaplanMeierFit& fit, const std::vector<double>& probabilities,
                             const std::vector<double>& densities, double mu_hat) {
    const std::size_t J = probabilities.size();
    if (J == 0) throw InvalidInput("upsilon_matrix: no probabilities");
    if (densities.size() != J) throw InvalidInput("upsilon_matrix: one density per probability required");
    if (!(mu_hat > 0.0 && mu_hat < 1.0)) throw InvalidInput("upsilon_matrix: allocation fraction must lie in (0,1)");
    std::vector<double> t(J);
    std::vector<double> phi(J);
    for (std::size_t j = 0; j < J; ++j) {
        check_probability(probabilities[j]);
        if (!(densities[j] > 0.0)) throw InvalidInput("upsilon_matrix: densities must be positive");
        t[j] = require_quantile(fit, probabilities[j]).time;
        phi[j] = phi_hat(fit, t[j]);
    }
    Matrix u(J);
    for (std::size_t j = 0; j < J; ++j) {
        u(j, j) = arm_variance_term(probabilities[j], phi[j], mu_hat, densities[j]);
        for (std::size_t l = j + 1; l < J; ++l) {
            const double shared = t[j] <= t[l] ? phi[j] : phi[l];
            const double v = (1.0 - probabilities[j]) * (1.0 - probabilities[l]) * shared /
                             (mu_hat * densities[j] * densities[l]);
            u(j, l) = v;
            u(l, j) = v;
        }
    }
    return u;
}

struct MultivariateTestResult {
    std::vector<double> probabilities;
    std::vector<double> delta_hats;
    Matrix psi_hat;
    double statistic = 0.0;
    std::size_t dof = 0;
    double p_value = 1.0;
    DensityMethod density_method = DensityMethod::ls;
    std::vector<std::array<ArmEstimate, 2>> arms;  // per probability
    std::size_t n = 0;

    bool rejects(double alpha) const { return statistic > chi2_upper_quantile(alpha, static_cast<double>(dof)); }
};

/// Relative pivot tolerance for the positive-definiteness check on Psi.
inline constexpr double kPsiPivotTolerance = 1e-10;

inline MultivariateTestResult multivariate_test(const TwoArmData& data, const std::vector<double>& probabilities,
                                                const DensitySettings& settings) {
    const std::size_t J = probabilities.size();
    if (J == 0) throw InvalidInput("multivariate_test: at least one probability required");
    MultivariateTestResult r;
    r.probabilities = probabilities;
    r.dof = J;
    r.n = data.total();
    r.density_method = settings.method;
    r.arms.assign(J, {});

    const std::array<const SurvivalSample*, 2> samples{&data.arm1, &data.arm2};
    const std::array<double, 2> mu{data.mu1(), data.mu2()};
    std::array<Matrix, 2> upsilon;
    std::array<std::vector<double>, 2> times;
    for (int k = 0; k < 2; ++k) {
        const KaplanMeierFit fit = fit_kaplan_meier(*samples[k]);
        for (double p : probabilities) {
            check_probability(p);
            times[k].push_back(require_quantile(fit, p, "arm " + std::to_string(k + 1)).time);
        }
        const std::vector<DensityAtQuantile> dens = estimate_arm_densities(*samples[k], fit, probabilities, settings);
        std::vector<double> used(J);
        for (std::size_t j = 0; j < J; ++j) {
            auto [f, clamped] = clamp_density(dens[j].value, settings.density_floor);
            used[j] = f;
            ArmEstimate& a = r.arms[j][k];
            a.quantile_time = times[k][j];
            a.phi = phi_hat(fit, times[k][j]);
            a.density = dens[j];
            a.density_used = f;
            a.clamped = clamped;
        }
        upsilon[k] = upsilon_matrix(fit, probabilities, used, mu[k]);
    }
    r.psi_hat = upsilon[0] + upsilon[1];

    const double root_n = std::sqrt(static_cast<double>(r.n));
    std::vector<double> z(J);
    for (std::size_t j = 0; j < J; ++j) {
        r.delta_hats.push_back(times[0][j] - times[1][j]);
        z[j] = root_n * r.delta_hats[j];
    }
    try {
        const Cholesky chol(r.psi_hat, kPsiPivotTolerance);
        r.statistic = chol.quadratic_form(z);
    } catch (const SingularCovariance& e) {
        std::ostringstream os;
        os << "estimated covariance is singular for quantile pair p=" << probabilities[e.first_index()]
           << " and p=" << probabilities[e.second_index()];
        throw SingularCovariance(os.str(), e.first_index(), e.second_index());
    }
    r.p_value = chi2_sf(r.statistic, static_cast<double>(J));
    return r;
}

/// min(1, J * p) for each raw p-value.
inline std::vector<double> bonferroni_adjust(const std::vector<double>& raw) {
    std::vector<double> out;
    out.reserve(raw.size());
    const auto J = static_cast<double>(raw.size());
    for (double p : raw) out.push_back(std::min(1.0, J * p));
    return out;
}

struct AdjustedUnivariateResult {
    UnivariateTestResult result;
    double adjusted_p_value = 1.0;
    bool reject = false;
};

inline std::vector<AdjustedUnivariateResult> bonferroni_followup(const TwoArmData& data,
                                                                 const std::vector<double>& probabilities,
                                                                 const DensitySettings& settings, double alpha) {
    if (probabilities.size() < 2) throw InvalidInput("bonferroni_followup: at least two probabilities required");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("bonferroni_followup: alpha must lie in (0,1)");
    std::vector<AdjustedUnivariateResult> out;
    std::vector<double> raw;
    for (double p : probabilities) {
        out.push_back({univariate_test(data, p, settings), 1.0, false});
        raw.push_back(out.back().result.p_value);
    }
    const std::vector<double> adj = bonferroni_adjust(raw);
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j].adjusted_p_value = adj[j];
        out[j].reject = adj[j] < alpha;
    }
    return out;
}

}  // namespace survq
