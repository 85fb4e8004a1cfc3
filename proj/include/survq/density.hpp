#pragma once

// Density at a survival quantile under right censoring:
//  * a resampling least-squares slope of the Kaplan-Meier CDF around the
//    estimated quantile (the "LS" method), and
//  * an inverse-probability-of-censoring weighted Gaussian kernel estimator
//    with a least-squares cross-validated bandwidth (the "KDE" method).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "survq/error.hpp"
#include "survq/rng.hpp"
#include "survq/survival.hpp"

namespace survq {

enum class DensityMethod { ls, kde };

inline std::string to_string(DensityMethod m) { return m == DensityMethod::ls ? "LS" : "KDE"; }

inline DensityMethod parse_density_method(const std::string& s) {
    if (s == "ls" || s == "LS") return DensityMethod::ls;
    if (s == "kde" || s == "KDE") return DensityMethod::kde;
    throw InvalidInput("unknown density method '" + s + "' (expected ls or kde)");
}

struct LsConfig {
    double sigma_eps = 2.0;
    std::size_t n_draws = 1000;
    std::uint64_t seed = 1;

    void validate() const {
        if (!(sigma_eps > 0.0) || !std::isfinite(sigma_eps)) throw InvalidInput("LS: sigma_eps must be > 0");
        if (n_draws < 2) throw InvalidInput("LS: n_draws must be >= 2");
    }
};

struct KdeConfig {
    std::optional<double> bandwidth;  // empty: select by cross-validation
    std::vector<double> cv_grid;      // empty: default_bandwidth_grid()

    void validate() const {
        if (bandwidth && !(*bandwidth > 0.0)) throw InvalidInput("KDE: bandwidth must be > 0");
        for (std::size_t i = 0; i < cv_grid.size(); ++i) {
            if (!(cv_grid[i] > 0.0)) throw InvalidInput("KDE: bandwidth grid values must be > 0");
            if (i > 0 && !(cv_grid[i] > cv_grid[i - 1])) {
                throw InvalidInput("KDE: bandwidth grid must be strictly increasing");
            }
        }
    }
};

struct DensityAtQuantile {
    double p = 0.0;
    double quantile_time = 0.0;
    double value = 0.0;
    DensityMethod method = DensityMethod::ls;
    double tuning = 0.0;           // sigma_eps (LS) or bandwidth (KDE)
    std::string tuning_source;     // "fixed", "grid-search", "cross-validation"
    bool zero_slope = false;       // LS: every probe landed on one step
    std::size_t truncated = 0;     // KDE: event terms dropped for a zero censoring survival
};

// ---------------------------------------------------------------------------
// Resampling least squares

/// Standard normal draws shared by every sigma on a grid (common random
/// numbers). Draw b is a pure function of (seed, b).
inline std::vector<double> standard_normal_draws(std::uint64_t seed, std::size_t count) {
    CounterRng rng(derive_seed(seed, 0x15));
    std::vector<double> z(count);
    for (double& v : z) v = rng.normal();
    return z;
}

/// No-intercept regression slope of y_b = sqrt(n) (F(q + eps_b / sqrt(n)) - p)
/// on eps_b = sigma * z_b.
inline double ls_slope(const KaplanMeierFit& fit, double quantile_time, double p, double sigma,
                       const std::vector<double>& z) {
    const double root_n = std::sqrt(static_cast<double>(fit.n));
    double sxy = 0.0;
    double sxx = 0.0;
    for (double zb : z) {
        const double eps = sigma * zb;
        const double y = root_n * (fit.cdf_at(quantile_time + eps / root_n) - p);
        sxy += eps * y;
        sxx += eps * eps;
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

inline DensityAtQuantile estimate_density_ls(const KaplanMeierFit& fit, double p, const LsConfig& cfg) {
    cfg.validate();
    const QuantileEstimate q = require_quantile(fit, p);
    const std::vector<double> z = standard_normal_draws(cfg.seed, cfg.n_draws);
    DensityAtQuantile out;
    out.p = p;
    out.quantile_time = q.time;
    out.method = DensityMethod::ls;
    out.tuning = cfg.sigma_eps;
    out.tuning_source = "fixed";
    out.value = ls_slope(fit, q.time, p, cfg.sigma_eps, z);
    out.zero_slope = out.value == 0.0;
    return out;
}

inline DensityAtQuantile estimate_density_ls(const SurvivalSample& sample, double p, const LsConfig& cfg) {
    return estimate_density_ls(fit_kaplan_meier(sample), p, cfg);
}

struct SigmaSelection {
    double sigma = 0.0;
    std::vector<double> grid;
    std::vector<double> profile;  // slope estimate at each grid value
    std::size_t window_start = 0;
    bool fallback = false;        // grid too short for the plateau rule
};

inline constexpr std::size_t kPlateauWindow = 5;

/// Plateau-stability choice of sigma_eps from a slope profile: the window of
/// five consecutive grid points with the smallest total variation wins
/// (earliest on ties); inside it, the point closest to the window mean
/// (smallest sigma on ties). Grids shorter than the window fall back to
/// the lower median grid value.
inline SigmaSelection select_sigma_from_profile(std::vector<double> grid, std::vector<double> profile) {
    SigmaSelection sel;
    sel.grid = std::move(grid);
    sel.profile = std::move(profile);
    const std::size_t m = sel.grid.size();
    if (m == 0 || m != sel.profile.size()) throw InvalidInput("select_sigma: grid and profile must be non-empty and aligned");
    if (m < kPlateauWindow) {
        sel.fallback = true;
        sel.window_start = 0;
        sel.sigma = sel.grid[(m - 1) / 2];
        return sel;
    }
    double best_tv = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s + kPlateauWindow <= m; ++s) {
        double tv = 0.0;
        for (std::size_t i = s; i + 1 < s + kPlateauWindow; ++i) tv += std::fabs(sel.profile[i + 1] - sel.profile[i]);
        if (tv < best_tv) {
            best_tv = tv;
            sel.window_start = s;
        }
    }
    double mean = 0.0;
    for (std::size_t i = 0; i < kPlateauWindow; ++i) mean += sel.profile[sel.window_start + i];
    mean /= static_cast<double>(kPlateauWindow);
    std::size_t pick = sel.window_start;
    for (std::size_t i = sel.window_start; i < sel.window_start + kPlateauWindow; ++i) {
        if (std::fabs(sel.profile[i] - mean) < std::fabs(sel.profile[pick] - mean)) pick = i;
    }
    sel.sigma = sel.grid[pick];
    return sel;
}

/// Grid search for sigma_eps. This is a stability heuristic, not the
/// selection rule of the original LS proposal; callers that know a good
/// sigma should pass it explicitly.
inline SigmaSelection select_sigma_ls(const KaplanMeierFit& fit, double p, const std::vector<double>& grid,
                                      std::size_t n_draws, std::uint64_t seed) {
    if (grid.empty()) throw InvalidInput("select_sigma_ls: grid is empty");
    for (double s : grid) {
        if (!(s > 0.0)) throw InvalidInput("select_sigma_ls: grid values must be > 0");
    }
    if (n_draws < 2) throw InvalidInput("select_sigma_ls: n_draws must be >= 2");
    const QuantileEstimate q = require_quantile(fit, p);
    const std::vector<double> z = standard_normal_draws(seed, n_draws);
    std::vector<double> profile;
    profile.reserve(grid.size());
    for (double s : grid) profile.push_back(ls_slope(fit, q.time, p, s, z));
    return select_sigma_from_profile(grid, std::move(profile));
}

inline SigmaSelection select_sigma_ls(const SurvivalSample& sample, double p, const std::vector<double>& grid,
                                      std::size_t n_draws, std::uint64_t seed) {
    return select_sigma_ls(fit_kaplan_meier(sample), p, grid, n_draws, seed);
}

/// 0.1, 0.15, ..., 10.
inline std::vector<double> default_sigma_grid() {
    std::vector<double> g;
    for (int i = 0; i <= 198; ++i) g.push_back(0.1 + 0.05 * i);
    return g;
}

// ---------------------------------------------------------------------------
// Censoring-weighted kernel density estimation

inline double gaussian_kernel(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); }

/// Gaussian kernel convolved with itself: int K(x - a) K(x - b) dx = K2(a - b).
inline double gaussian_kernel_self_convolution(double u) {
    return std::exp(-0.25 * u * u) / (2.0 * std::sqrt(std::numbers::pi));
}

/// Event observations with weights delta_i / S_cens(T_i-), sorted by time.
struct CensoringWeights {
    std::vector<double> times;
    std::vector<double> weights;
    std::size_t n = 0;          // all observations, censored included
    std::size_t truncated = 0;  // events dropped because S_cens(T_i-) == 0
};

inline CensoringWeights censoring_weights(const SurvivalSample& sample) {
    const KaplanMeierFit cens = fit_censoring_km(sample);
    CensoringWeights cw;
    cw.n = sample.size();
    std::vector<std::pair<double, double>> items;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        if (!sample.events()[i]) continue;
        const double t = sample.times()[i];
        const double s = cens.survival_before(t);
        if (!(s > 0.0)) {
            ++cw.truncated;
            continue;
        }
        items.emplace_back(t, 1.0 / s);
    }
    std::sort(items.begin(), items.end());
    for (const auto& [t, w] : items) {
        cw.times.push_back(t);
        cw.weights.push_back(w);
    }
    return cw;
}

/// f_h(t) = 1/(n h) sum_i w_i K((T_i - t) / h).
inline double kde_value(const CensoringWeights& cw, double t, double h) {
    double s = 0.0;
    for (std::size_t i = 0; i < cw.times.size(); ++i) s += cw.weights[i] * gaussian_kernel((cw.times[i] - t) / h);
    return s / (static_cast<double>(cw.n) * h);
}

/// Kernel arguments beyond this many bandwidths contribute < 1e-18.
inline constexpr double kKernelCutoff = 13.0;

/// Exact least-squares cross-validation criterion
///   int f_h^2 - 2/(n (n-1) h) sum_{i != j} K((T_i - T_j)/h) w_i w_j,
/// with int f_h^2 computed through the Gaussian self-convolution.
inline double cv_criterion_exact(const CensoringWeights& cw, double h) {
    const auto n = static_cast<double>(cw.n);
    const std::size_t m = cw.times.size();
    double diag = 0.0;
    for (double w : cw.weights) diag += w * w;
    double conv_pairs = 0.0;
    double loo_pairs = 0.0;
    const double reach = kKernelCutoff * h;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const double d = cw.times[j] - cw.times[i];
            if (d > reach) break;
            const double ww = cw.weights[i] * cw.weights[j];
            conv_pairs += ww * gaussian_kernel_self_convolution(d / h);
            loo_pairs += ww * gaussian_kernel(d / h);
        }
    }
    const double integral_sq = (diag * gaussian_kernel_self_convolution(0.0) + 2.0 * conv_pairs) / (n * n * h);
    const double cross = 2.0 * loo_pairs;
    return integral_sq - 2.0 * cross / (n * (n - 1.0) * h);
}

/// Linear-binned approximation of the same criterion for large samples.
/// Pair sums become sums over bin lags; the i == j terms are removed exactly.
class BinnedCvCriterion {
public:
    BinnedCvCriterion(const CensoringWeights& cw, double min_bandwidth, double max_bandwidth) : cw_(&cw) {
        const double lo = cw.times.front();
        const double hi = cw.times.back();
        const double span = hi - lo;
        std::size_t bins = 2;
        if (span > 0.0) {
            bins = static_cast<std::size_t>(std::ceil(span / (min_bandwidth / 25.0))) + 1;
            bins = std::clamp<std::size_t>(bins, 2, std::size_t{1} << 16);
        }
        delta_ = span > 0.0 ? span / static_cast<double>(bins - 1) : 1.0;
        std::vector<double> counts(bins, 0.0);
        for (std::size_t i = 0; i < cw.times.size(); ++i) {
            const double pos = (cw.times[i] - lo) / delta_;
            auto k = static_cast<std::size_t>(std::floor(pos));
            if (k >= bins - 1) k = bins - 2;
            const double frac = pos - static_cast<double>(k);
            counts[k] += cw.weights[i] * (1.0 - frac);
            counts[k + 1] += cw.weights[i] * frac;
        }
        const std::size_t max_lag = std::min(
            bins - 1, static_cast<std::size_t>(std::ceil(kKernelCutoff * max_bandwidth / delta_)) + 1);
        autocorr_.assign(max_lag + 1, 0.0);
        for (std::size_t lag = 0; lag <= max_lag; ++lag) {
            double s = 0.0;
            for (std::size_t k = 0; k + lag < bins; ++k) s += counts[k] * counts[k + lag];
            autocorr_[lag] = s;
        }
        for (double w : cw.weights) diag_ += w * w;
    }

    double operator()(double h) const {
        const auto n = static_cast<double>(cw_->n);
        double conv = autocorr_[0] * gaussian_kernel_self_convolution(0.0);
        double loo = autocorr_[0] * gaussian_kernel(0.0);
        for (std::size_t lag = 1; lag < autocorr_.size(); ++lag) {
            const double u = static_cast<double>(lag) * delta_ / h;
            if (u > kKernelCutoff) break;
            conv += 2.0 * autocorr_[lag] * gaussian_kernel_self_convolution(u);
            loo += 2.0 * autocorr_[lag] * gaussian_kernel(u);
        }
        loo -= diag_ * gaussian_kernel(0.0);
        return conv / (n * n * h) - 2.0 * loo / (n * (n - 1.0) * h);
    }

private:
    const CensoringWeights* cw_;
    double delta_ = 1.0;
    double diag_ = 0.0;
    std::vector<double> autocorr_;
};

/// Weighted events above which the binned criterion replaces the exact one.
inline constexpr std::size_t kExactCvLimit = 3000;

struct BandwidthSelection {
    double bandwidth = 0.0;
    std::vector<double> grid;
    std::vector<double> criterion;
    bool binned = false;
};

/// Log-spaced grid around a normal-reference bandwidth of the event times.
inline std::vector<double> default_bandwidth_grid(const SurvivalSample& sample) {
    std::vector<double> t;
    for (std::size_t i = 0; i < sample.size(); ++i)
        if (sample.events()[i]) t.push_back(sample.times()[i]);
    if (t.size() < 2) throw InvalidInput("default_bandwidth_grid: at least two events required");
    double mean = 0.0;
    for (double x : t) mean += x;
    mean /= static_cast<double>(t.size());
    double var = 0.0;
    for (double x : t) var += (x - mean) * (x - mean);
    double sd = std::sqrt(var / static_cast<double>(t.size() - 1));
    if (!(sd > 0.0)) sd = 1.0;
    const double ref = 1.06 * sd * std::pow(static_cast<double>(t.size()), -0.2);
    std::vector<double> grid;
    constexpr int points = 30;
    const double lo = std::log(ref / 10.0);
    const double hi = std::log(ref * 2.0);
    for (int i = 0; i < points; ++i) grid.push_back(std::exp(lo + (hi - lo) * i / (points - 1)));
    return grid;
}

inline BandwidthSelection select_bandwidth_cv(const SurvivalSample& sample, const std::vector<double>& grid) {
    if (grid.empty()) throw InvalidInput("select_bandwidth_cv: grid is empty");
    KdeConfig{std::nullopt, grid}.validate();
    if (sample.event_count() < 2) throw InvalidInput("select_bandwidth_cv: at least two events required");
    const CensoringWeights cw = censoring_weights(sample);
    if (cw.times.size() < 2) throw InvalidInput("select_bandwidth_cv: fewer than two usable events");

    BandwidthSelection sel;
    sel.grid = grid;
    sel.binned = cw.times.size() > kExactCvLimit;
    std::optional<BinnedCvCriterion> binned;
    if (sel.binned) binned.emplace(cw, grid.front(), grid.back());
    double best = std::numeric_limits<double>::infinity();
    for (double h : grid) {
        const double c = sel.binned ? (*binned)(h) : cv_criterion_exact(cw, h);
        sel.criterion.push_back(c);
        if (c < best) {
            best = c;
            sel.bandwidth = h;
        }
    }
    return sel;
}

inline DensityAtQuantile estimate_density_kde(const SurvivalSample& sample, double t, const KdeConfig& cfg) {
    cfg.validate();
    DensityAtQuantile out;
    out.method = DensityMethod::kde;
    out.quantile_time = t;
    if (cfg.bandwidth) {
        out.tuning = *cfg.bandwidth;
        out.tuning_source = "fixed";
    } else {
        const std::vector<double> grid = cfg.cv_grid.empty() ? default_bandwidth_grid(sample) : cfg.cv_grid;
        out.tuning = select_bandwidth_cv(sample, grid).bandwidth;
        out.tuning_source = "cross-validation";
    }
    const CensoringWeights cw = censoring_weights(sample);
    out.truncated = cw.truncated;
    out.value = kde_value(cw, t, out.tuning);
    return out;
}

/// KDE evaluated at the Kaplan-Meier quantile for p.
inline DensityAtQuantile estimate_density_kde_at_quantile(const SurvivalSample& sample, double p,
                                                          const KdeConfig& cfg) {
    const QuantileEstimate q = require_quantile(fit_kaplan_meier(sample), p);
    DensityAtQuantile out = estimate_density_kde(sample, q.time, cfg);
    out.p = p;
    return out;
}

}  // namespace survq
