#pragma once

// Kaplan-Meier estimation, quantile extraction and the Greenwood-based
// phi estimate used in every variance formula.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "survq/error.hpp"

namespace survq {

/// Right-censored observations for one arm.
class SurvivalSample {
public:
    SurvivalSample(std::vector<double> times, std::vector<bool> events)
        : times_(std::move(times)), events_(std::move(events)) {
        if (times_.empty()) throw InvalidInput("SurvivalSample: sample is empty");
        if (times_.size() != events_.size()) {
            throw InvalidInput("SurvivalSample: times and events differ in length");
        }
        for (std::size_t i = 0; i < times_.size(); ++i) {
            if (!std::isfinite(times_[i]) || times_[i] < 0.0) {
                std::ostringstream os;
                os << "SurvivalSample: time at index " << i << " is negative or not finite (" << times_[i] << ")";
                throw InvalidInput(os.str());
            }
        }
    }

    std::size_t size() const noexcept { return times_.size(); }
    const std::vector<double>& times() const noexcept { return times_; }
    const std::vector<bool>& events() const noexcept { return events_; }

    std::size_t event_count() const noexcept {
        return static_cast<std::size_t>(std::count(events_.begin(), events_.end(), true));
    }

    /// Same sample with every time multiplied by `factor` (> 0).
    SurvivalSample rescaled(double factor) const {
        std::vector<double> t = times_;
        for (double& x : t) x *= factor;
        return {std::move(t), events_};
    }

private:
    std::vector<double> times_;
    std::vector<bool> events_;
};

/// Two arms plus their allocation fractions n_k / n.
struct TwoArmData {
    SurvivalSample arm1;
    SurvivalSample arm2;

    std::size_t total() const noexcept { return arm1.size() + arm2.size(); }
    double mu1() const noexcept { return static_cast<double>(arm1.size()) / static_cast<double>(total()); }
    // Computed as the complement so mu1 + mu2 == 1 holds exactly.
    double mu2() const noexcept { return 1.0 - mu1(); }

    TwoArmData swapped() const { return {arm2, arm1}; }
};

/// Product-limit step function. Steps are recorded only at times with at
/// least one counted event.
struct KaplanMeierFit {
    std::vector<double> event_times;
    std::vector<std::size_t> at_risk;
    std::vector<std::size_t> n_events;
    std::vector<double> survival;          // S(t_j), right-continuous
    std::vector<double> greenwood_cumsum;  // sum_{i<=j} d_i / (Y_i (Y_i - d_i)); +inf once Y == d
    std::size_t n = 0;

    std::size_t steps() const noexcept { return event_times.size(); }

    /// Number of steps with t_j <= t.
    std::size_t steps_through(double t) const noexcept {
        return static_cast<std::size_t>(std::upper_bound(event_times.begin(), event_times.end(), t) -
                                        event_times.begin());
    }

    /// S(t), right-continuous.
    double survival_at(double t) const noexcept {
        const std::size_t k = steps_through(t);
        return k == 0 ? 1.0 : survival[k - 1];
    }

    /// S(t-), the left limit.
    double survival_before(double t) const noexcept {
        const auto k = static_cast<std::size_t>(std::lower_bound(event_times.begin(), event_times.end(), t) -
                                                event_times.begin());
        return k == 0 ? 1.0 : survival[k - 1];
    }

    /// F(t) = 1 - S(t); zero for t < 0.
    double cdf_at(double t) const noexcept { return t < 0.0 ? 0.0 : 1.0 - survival_at(t); }

    /// Largest probability the curve reaches.
    double max_cdf() const noexcept { return survival.empty() ? 0.0 : 1.0 - survival.back(); }
};

namespace detail {

// Shared product-limit pass. `counted[i]` marks the observations that form
// the steps. When `others_leave_first` is set, non-counted observations tied
// with a counted one leave the risk set before the step (used for the
// censoring distribution, where original events precede censorings).
inline KaplanMeierFit product_limit(const std::vector<double>& times, const std::vector<bool>& counted,
                                    bool others_leave_first) {
    const std::size_t n = times.size();
    if (n == 0) throw InvalidInput("Kaplan-Meier: sample is empty");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

    KaplanMeierFit fit;
    fit.n = n;
    std::size_t at_risk = n;
    double surv = 1.0;
    double gw = 0.0;
    std::size_t i = 0;
    while (i < n) {
        const double t = times[order[i]];
        std::size_t d = 0;
        std::size_t others = 0;
        std::size_t j = i;
        for (; j < n && times[order[j]] == t; ++j) {
            if (counted[order[j]]) ++d; else ++others;
        }
        const std::size_t y = others_leave_first ? at_risk - others : at_risk;
        if (d > 0) {
            surv *= 1.0 - static_cast<double>(d) / static_cast<double>(y);
            if (y == d) {
                gw = std::numeric_limits<double>::infinity();
            } else {
                gw += static_cast<double>(d) / (static_cast<double>(y) * static_cast<double>(y - d));
            }
            fit.event_times.push_back(t);
            fit.at_risk.push_back(y);
            fit.n_events.push_back(d);
            fit.survival.push_back(surv);
            fit.greenwood_cumsum.push_back(gw);
        }
        at_risk -= j - i;
        i = j;
    }
    return fit;
}

}  // namespace detail

/// Kaplan-Meier estimate of the event-time survival function. Events tied
/// with censorings are processed first (censored subjects stay at risk).
inline KaplanMeierFit fit_kaplan_meier(const SurvivalSample& sample) {
    return detail::product_limit(sample.times(), sample.events(), false);
}

/// Kaplan-Meier estimate of the censoring survival function: censorings are
/// the counted outcome and tied events leave the risk set first.
inline KaplanMeierFit fit_censoring_km(const SurvivalSample& sample) {
    std::vector<bool> censored(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) censored[i] = !sample.events()[i];
    return detail::product_limit(sample.times(), censored, true);
}

struct QuantileEstimate {
    double p = 0.0;
    double time = std::numeric_limits<double>::quiet_NaN();
    bool reachable = false;
    std::size_t step = 0;  // index into event_times when reachable
};

/// Slack when comparing accumulated products against p, so that e.g. a
/// product that should equal 0.7 exactly but rounds to 0.7000000000000001
/// still counts as reaching F = 0.3.
inline constexpr double kQuantileSlack = 1e-12;

/// F^{-1}(p) = inf{t : F(t) >= p}, evaluated on the step function.
inline QuantileEstimate quantile_at(const KaplanMeierFit& fit, double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw InvalidInput("quantile_at: probability must lie in (0,1), got " + std::to_string(p));
    }
    QuantileEstimate q;
    q.p = p;
    for (std::size_t j = 0; j < fit.steps(); ++j) {
        if (1.0 - fit.survival[j] >= p - kQuantileSlack) {
            q.time = fit.event_times[j];
            q.reachable = true;
            q.step = j;
            return q;
        }
    }
    return q;
}

/// Like quantile_at, but an unreachable quantile is an error naming the
/// largest estimable probability.
inline QuantileEstimate require_quantile(const KaplanMeierFit& fit, double p, const std::string& label = "sample") {
    QuantileEstimate q = quantile_at(fit, p);
    if (!q.reachable) {
        std::ostringstream os;
        os << "quantile p=" << p << " not estimable in " << label << " (maximum estimable probability "
           << fit.max_cdf() << ")";
        throw UnreachableQuantile(os.str(), fit.max_cdf());
    }
    return q;
}

/// Sample analogue of phi(t) = int_0^t dLambda/H:
///   n * sum_{t_j <= t} d_j / (Y_j (Y_j - d_j)),
/// so (1 - F(t))^2 * phi / n is the Greenwood variance of F at t.
inline double phi_hat(const KaplanMeierFit& fit, double t) {
    const std::size_t k = fit.steps_through(t);
    if (k == 0) throw InvalidInput("phi_hat: no event at or before t = " + std::to_string(t));
    const double gw = fit.greenwood_cumsum[k - 1];
    if (!std::isfinite(gw)) {
        throw DegenerateTail("phi_hat: the risk set is exhausted at or before t = " + std::to_string(t) +
                             " (Y_j == d_j), Greenwood sum diverges");
    }
    return static_cast<double>(fit.n) * gw;
}

}  // namespace survq
