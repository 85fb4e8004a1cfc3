#pragma once

// Monte Carlo operating characteristics of the quantile tests.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "survq/error.hpp"
#include "survq/power.hpp"
#include "survq/quantile_tests.hpp"
#include "survq/rng.hpp"
#include "survq/scenario.hpp"
#include "survq/survival.hpp"

namespace survq {

namespace detail {

template <class Arm>
SurvivalSample sample_arm(const Arm& arm, double censoring_rate, std::size_t n, std::uint64_t key) {
    if (n == 0) throw InvalidInput("sample_trial: arm size must be positive");
    CounterRng rng(key);
    std::vector<double> times(n);
    std::vector<bool> events(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double event = arm.time_from_cumulative_hazard(rng.exponential(1.0));
        const double cens = rng.exponential(censoring_rate);
        events[i] = event <= cens;
        times[i] = events[i] ? event : cens;
    }
    return {std::move(times), std::move(events)};
}

}  // namespace detail

/// One simulated trial. Arm k draws from the stream derive_seed(seed, k).
inline TwoArmData sample_trial(const TrialScenario& s, std::size_t n1, std::size_t n2, std::uint64_t seed) {
    s.validate();
    SurvivalSample a1 = detail::sample_arm(s.arm1, s.censoring_rate, n1, derive_seed(seed, 1));
    SurvivalSample a2 = visit_arm(s.arm2, [&](const auto& arm) {
        return detail::sample_arm(arm, s.censoring_rate, n2, derive_seed(seed, 2));
    });
    return {std::move(a1), std::move(a2)};
}

struct SimulationPlan {
    TrialScenario scenario;
    std::size_t n1 = 100;
    std::size_t n2 = 100;
    std::vector<double> probabilities{0.5};
    double alpha = 0.05;
    std::size_t replications = 1000;
    DensitySettings density;  // LS seed is replaced by a per-replicate stream
    std::uint64_t master_seed = 1;
    unsigned threads = 1;
    bool keep_replicates = false;

    void validate() const {
        scenario.validate();
        if (n1 < 2 || n2 < 2) throw InvalidInput("simulation: each arm needs at least 2 subjects");
        if (probabilities.empty()) throw InvalidInput("simulation: at least one probability required");
        for (double p : probabilities) check_probability(p);
        check_alpha(alpha);
        if (replications < 1) throw InvalidInput("simulation: replications must be >= 1");
    }
};

enum class ReplicateStatus { accepted, rejected, failed };

struct ReplicateOutcome {
    ReplicateStatus status = ReplicateStatus::failed;
    double statistic = 0.0;
    double p_value = 1.0;
    double seconds = 0.0;
    std::string failure;  // error kind when failed
};

inline std::string failure_kind(const Error& e) {
    if (dynamic_cast<const UnreachableQuantile*>(&e)) return "unreachable_quantile";
    if (dynamic_cast<const DegenerateTail*>(&e)) return "degenerate_tail";
    if (dynamic_cast<const SingularCovariance*>(&e)) return "singular_covariance";
    if (dynamic_cast<const EstimationError*>(&e)) return "estimation_error";
    return "invalid_input";
}

/// Share of failed replicates above which a report is flagged invalid.
inline constexpr double kMaxFailureShare = 0.05;

struct RejectionReport {
    std::size_t replications = 0;
    std::size_t valid = 0;
    std::size_t rejections = 0;
    std::size_t failures = 0;
    std::map<std::string, std::size_t> failure_kinds;
    double rate = 0.0;
    double standard_error = 0.0;
    double formula_power = 0.0;
    bool report_valid = true;
    double seconds_mean = 0.0;
    double seconds_sd = 0.0;
    std::vector<ReplicateOutcome> replicates;  // filled when requested
};

/// Seed of replicate r; independent of scheduling.
inline std::uint64_t replicate_seed(std::uint64_t master, std::size_t r) { return derive_seed(master, r); }

inline ReplicateOutcome run_replicate(const SimulationPlan& plan, std::size_t r) {
    const auto start = std::chrono::steady_clock::now();
    ReplicateOutcome out;
    const std::uint64_t seed = replicate_seed(plan.master_seed, r);
    try {
        const TwoArmData data = sample_trial(plan.scenario, plan.n1, plan.n2, seed);
        DensitySettings ds = plan.density;
        ds.seed = derive_seed(seed, 3);
        if (plan.probabilities.size() == 1) {
            const UnivariateTestResult t = univariate_test(data, plan.probabilities.front(), ds);
            out.statistic = t.statistic;
            out.p_value = t.p_value;
        } else {
            const MultivariateTestResult t = multivariate_test(data, plan.probabilities, ds);
            out.statistic = t.statistic;
            out.p_value = t.p_value;
        }
        if (!std::isfinite(out.statistic)) throw EstimationError("non-finite test statistic");
        out.status = out.p_value < plan.alpha ? ReplicateStatus::rejected : ReplicateStatus::accepted;
    } catch (const Error& e) {
        out.status = ReplicateStatus::failed;
        out.failure = failure_kind(e);
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

/// Asymptotic power for the plan's design, from the population model.
inline double plan_formula_power(const SimulationPlan& plan) {
    TrialScenario s = plan.scenario;
    const double n = static_cast<double>(plan.n1 + plan.n2);
    s.mu1 = static_cast<double>(plan.n1) / n;
    if (plan.probabilities.size() == 1) {
        const double p = plan.probabilities.front();
        return power_univariate(s.delta(p), scenario_sigma2(s, p), n, plan.alpha);
    }
    std::vector<double> deltas;
    for (double p : plan.probabilities) deltas.push_back(s.delta(p));
    return power_multivariate(deltas, scenario_psi(s, plan.probabilities), n, plan.alpha);
}

inline RejectionReport empirical_rejection(const SimulationPlan& plan) {
    plan.validate();
    const std::size_t R = plan.replications;
    std::vector<ReplicateOutcome> outcomes(R);
    const unsigned workers = std::max(1u, std::min<unsigned>(plan.threads, static_cast<unsigned>(R)));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t r = next.fetch_add(1); r < R; r = next.fetch_add(1)) outcomes[r] = run_replicate(plan, r);
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }

    RejectionReport rep;
    rep.replications = R;
    double s1 = 0.0;
    double s2 = 0.0;
    for (const ReplicateOutcome& o : outcomes) {
        s1 += o.seconds;
        s2 += o.seconds * o.seconds;
        if (o.status == ReplicateStatus::failed) {
            ++rep.failures;
            ++rep.failure_kinds[o.failure];
            continue;
        }
        ++rep.valid;
        if (o.status == ReplicateStatus::rejected) ++rep.rejections;
    }
    if (rep.valid > 0) {
        rep.rate = static_cast<double>(rep.rejections) / static_cast<double>(rep.valid);
        rep.standard_error = std::sqrt(rep.rate * (1.0 - rep.rate) / static_cast<double>(rep.valid));
    }
    rep.report_valid = rep.valid > 0 && static_cast<double>(rep.failures) <= kMaxFailureShare * static_cast<double>(R);
    rep.seconds_mean = s1 / static_cast<double>(R);
    rep.seconds_sd = R > 1 ? std::sqrt(std::max(0.0, (s2 - s1 * s1 / static_cast<double>(R)) / static_cast<double>(R - 1)))
                           : 0.0;
    rep.formula_power = plan_formula_power(plan);
    if (plan.keep_replicates) rep.replicates = std::move(outcomes);
    return rep;
}

}  // namespace survq
