#pragma once

// Closed-form planning models: exponential control arm, exponential or
// piecewise-exponential experimental arm, shared exponential censoring.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "survq/error.hpp"
#include "survq/matrix.hpp"
#include "survq/quantile_tests.hpp"

namespace survq {

inline void require_positive_rate(double rate, const char* name) {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw InvalidInput(std::string(name) + " must be a positive finite rate");
    }
}

inline double exp_quantile(double rate, double p) {
    require_positive_rate(rate, "rate");
    check_probability(p);
    return -std::log1p(-p) / rate;
}

inline double exp_density(double rate, double t) {
    require_positive_rate(rate, "rate");
    if (t < 0.0) return 0.0;
    return rate * std::exp(-rate * t);
}

/// phi(t) = int_0^t dLambda/H for an exponential event time with rate
/// `rate` and exponential censoring with rate `cens`.
inline double phi_exponential(double rate, double cens, double t) {
    require_positive_rate(rate, "rate");
    if (cens < 0.0) throw InvalidInput("censoring rate must be non-negative");
    if (t < 0.0) throw InvalidInput("phi_exponential: t must be non-negative");
    const double s = rate + cens;
    return rate / s * std::expm1(s * t);
}

struct ExponentialArm {
    double rate = 1.0;

    void validate() const { require_positive_rate(rate, "rate"); }
    double quantile(double p) const { return exp_quantile(rate, p); }
    double density(double t) const { return exp_density(rate, t); }
    double survival(double t) const { return t <= 0.0 ? 1.0 : std::exp(-rate * t); }
    double hazard(double t) const { return t < 0.0 ? 0.0 : rate; }
    double phi(double cens, double t) const { return phi_exponential(rate, cens, t); }
    /// Inverse of the cumulative hazard: the event time for a unit-exponential draw.
    double time_from_cumulative_hazard(double e) const { return e / rate; }
    double censoring_fraction(double cens) const { return cens <= 0.0 ? 0.0 : cens / (rate + cens); }
};

/// Hazard `rate_early` on [0, t_cut), `rate_late` afterwards.
struct PiecewiseExponentialArm {
    double rate_early = 1.0;
    double rate_late = 1.0;
    double t_cut = 1.0;

    void validate() const {
        require_positive_rate(rate_early, "rate_early");
        require_positive_rate(rate_late, "rate_late");
        if (!(t_cut > 0.0) || !std::isfinite(t_cut)) throw InvalidInput("t_cut must be positive and finite");
    }

    double break_probability() const { return -std::expm1(-rate_early * t_cut); }

    double quantile(double p) const {
        check_probability(p);
        if (p < break_probability()) return -std::log1p(-p) / rate_early;
        return t_cut + (-std::log1p(-p) - rate_early * t_cut) / rate_late;
    }

    double cumulative_hazard(double t) const {
        if (t <= 0.0) return 0.0;
        return t < t_cut ? rate_early * t : rate_early * t_cut + rate_late * (t - t_cut);
    }

    double survival(double t) const { return std::exp(-cumulative_hazard(t)); }

    /// Right-continuous hazard: at exactly t_cut the late rate applies.
    double hazard(double t) const {
        if (t < 0.0) return 0.0;
        return t < t_cut ? rate_early : rate_late;
    }

    double density(double t) const { return t < 0.0 ? 0.0 : hazard(t) * survival(t); }

    double phi(double cens, double t) const {
        if (t <= t_cut) return phi_exponential(rate_early, cens, t);
        const double se = rate_early + cens;
        const double sl = rate_late + cens;
        return rate_early / se * std::expm1(se * t_cut) +
               rate_late / sl * std::exp((rate_early - rate_late) * t_cut) * (std::exp(sl * t) - std::exp(sl * t_cut));
    }

    double time_from_cumulative_hazard(double e) const {
        const double early = rate_early * t_cut;
        return e < early ? e / rate_early : t_cut + (e - early) / rate_late;
    }

    double censoring_fraction(double cens) const {
        if (cens <= 0.0) return 0.0;
        const double se = rate_early + cens;
        return cens / se * (-std::expm1(-se * t_cut)) +
               std::exp(-rate_early * t_cut) * cens / (rate_late + cens) * std::exp(-cens * t_cut);
    }
};

using ArmModel = std::variant<ExponentialArm, PiecewiseExponentialArm>;

template <class F>
decltype(auto) visit_arm(const ArmModel& arm, F&& f) {
    return std::visit(std::forward<F>(f), arm);
}

inline double phi_piecewise(const PiecewiseExponentialArm& arm, double cens, double t) {
    if (cens < 0.0) throw InvalidInput("censoring rate must be non-negative");
    if (t < 0.0) throw InvalidInput("phi_piecewise: t must be non-negative");
    arm.validate();
    return arm.phi(cens, t);
}

/// Experimental-arm rate giving F2^{-1}(p) = F1^{-1}(p) - delta under
/// proportional hazards.
inline double rate_from_delta_scn1(double rate_control, double p, double delta) {
    const double target = exp_quantile(rate_control, p) - delta;
    if (!(target > 0.0)) {
        std::ostringstream os;
        os << "delta = " << delta << " is infeasible: the experimental quantile F1^{-1}(p) - delta = " << target
           << " must be positive";
        throw InfeasibleDelta(os.str());
    }
    return -std::log1p(-p) / target;
}

/// Late rate of a piecewise arm giving F2^{-1}(p) = F1^{-1}(p) - delta.
/// Requires F1^{-1}(p) - t_cut > delta.
inline double rate_from_delta_scn2(double rate_control, double t_cut, double p, double delta) {
    require_positive_rate(rate_control, "rate_control");
    if (!(t_cut > 0.0)) throw InvalidInput("t_cut must be positive");
    const double q1 = exp_quantile(rate_control, p);
    const double gap = q1 - delta - t_cut;
    if (!(gap > 0.0) || !(q1 > t_cut)) {
        std::ostringstream os;
        os << "delta = " << delta << " is infeasible: requires F1^{-1}(p) - t_cut > delta, with F1^{-1}(p) - t_cut = "
           << q1 - t_cut;
        throw InfeasibleDelta(os.str());
    }
    return (-std::log1p(-p) - rate_control * t_cut) / gap;
}

struct TrialScenario {
    ExponentialArm arm1;
    ArmModel arm2 = ExponentialArm{};
    double censoring_rate = 0.0;
    double mu1 = 0.5;

    void validate() const {
        arm1.validate();
        visit_arm(arm2, [](const auto& a) { a.validate(); });
        if (!(censoring_rate >= 0.0) || !std::isfinite(censoring_rate)) {
            throw InvalidInput("censoring rate must be non-negative and finite");
        }
        if (!(mu1 > 0.0 && mu1 < 1.0)) throw InvalidInput("allocation mu1 must lie in (0,1)");
    }

    double mu2() const { return 1.0 - mu1; }
    bool piecewise() const { return std::holds_alternative<PiecewiseExponentialArm>(arm2); }

    double quantile(int arm, double p) const {
        return arm == 1 ? arm1.quantile(p) : visit_arm(arm2, [&](const auto& a) { return a.quantile(p); });
    }
    double density(int arm, double t) const {
        return arm == 1 ? arm1.density(t) : visit_arm(arm2, [&](const auto& a) { return a.density(t); });
    }
    double phi(int arm, double t) const {
        return arm == 1 ? arm1.phi(censoring_rate, t)
                        : visit_arm(arm2, [&](const auto& a) { return a.phi(censoring_rate, t); });
    }
    double delta(double p) const { return quantile(1, p) - quantile(2, p); }
};

inline TrialScenario make_scenario1(double rate_control, double p, double delta, double censoring_rate,
                                    double mu1 = 0.5) {
    TrialScenario s{ExponentialArm{rate_control}, ExponentialArm{rate_from_delta_scn1(rate_control, p, delta)},
                    censoring_rate, mu1};
    s.validate();
    return s;
}

inline TrialScenario make_scenario2(double rate_control, double t_cut, double p, double delta, double censoring_rate,
                                    double mu1 = 0.5) {
    TrialScenario s{ExponentialArm{rate_control},
                    PiecewiseExponentialArm{rate_control, rate_from_delta_scn2(rate_control, t_cut, p, delta), t_cut},
                    censoring_rate, mu1};
    s.validate();
    return s;
}

/// Population variance ingredients at one probability.
struct ScenarioVariance {
    double sigma2 = 0.0;
    std::array<double, 2> quantiles{};
    std::array<double, 2> densities{};
    std::array<double, 2> phis{};
    bool at_discontinuity = false;  // a quantile falls on t_cut
};

inline bool on_change_point(const TrialScenario& s, double t) {
    if (const auto* pw = std::get_if<PiecewiseExponentialArm>(&s.arm2)) {
        return std::fabs(t - pw->t_cut) <= 1e-12 * pw->t_cut;
    }
    return false;
}

inline ScenarioVariance scenario_variance(const TrialScenario& s, double p) {
    s.validate();
    check_probability(p);
    ScenarioVariance v;
    const std::array<double, 2> mu{s.mu1, s.mu2()};
    for (int k = 0; k < 2; ++k) {
        v.quantiles[k] = s.quantile(k + 1, p);
        v.densities[k] = s.density(k + 1, v.quantiles[k]);
        v.phis[k] = s.phi(k + 1, v.quantiles[k]);
        v.sigma2 += arm_variance_term(p, v.phis[k], mu[k], v.densities[k]);
    }
    v.at_discontinuity = on_change_point(s, v.quantiles[1]);
    return v;
}

inline double scenario_sigma2(const TrialScenario& s, double p) { return scenario_variance(s, p).sigma2; }

/// Population Psi = Upsilon_1 + Upsilon_2 over the given probabilities.
inline Matrix scenario_psi(const TrialScenario& s, const std::vector<double>& probabilities) {
    s.validate();
    const std::size_t J = probabilities.size();
    if (J == 0) throw InvalidInput("scenario_psi: no probabilities");
    Matrix psi(J);
    const std::array<double, 2> mu{s.mu1, s.mu2()};
    for (int k = 0; k < 2; ++k) {
        std::vector<double> t(J), f(J), phi(J);
        for (std::size_t j = 0; j < J; ++j) {
            check_probability(probabilities[j]);
            t[j] = s.quantile(k + 1, probabilities[j]);
            f[j] = s.density(k + 1, t[j]);
            phi[j] = s.phi(k + 1, t[j]);
        }
        for (std::size_t j = 0; j < J; ++j) {
            psi(j, j) += arm_variance_term(probabilities[j], phi[j], mu[k], f[j]);
            for (std::size_t l = j + 1; l < J; ++l) {
                const double shared = t[j] <= t[l] ? phi[j] : phi[l];
                const double v =
                    (1.0 - probabilities[j]) * (1.0 - probabilities[l]) * shared / (mu[k] * f[j] * f[l]);
                psi(j, l) += v;
                psi(l, j) += v;
            }
        }
    }
    return psi;
}

struct CensoringFractions {
    double arm1 = 0.0;
    double arm2 = 0.0;
};

inline CensoringFractions censoring_fraction(const TrialScenario& s) {
    return {s.arm1.censoring_fraction(s.censoring_rate),
            visit_arm(s.arm2, [&](const auto& a) { return a.censoring_fraction(s.censoring_rate); })};
}

/// Censoring rate giving the control arm the target censored fraction,
/// found by bisection.
inline double calibrate_censoring(const ExponentialArm& control, double target) {
    control.validate();
    if (!(target > 0.0 && target < 1.0)) throw InvalidInput("target censoring fraction must lie in (0,1)");
    double lo = 0.0;
    double hi = control.rate;
    while (control.censoring_fraction(hi) < target) {
        hi *= 2.0;
        if (!std::isfinite(hi) || hi > 1e300) throw InvalidInput("target censoring fraction is unreachable");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (control.censoring_fraction(mid) < target) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// Key-value scenario description as read from a config file.
///
///   lambda_a = 1.5          control rate
///   lambda_b = 2.0 | delta  experimental (late) rate, or the quantile difference at the first p
///   t_cut = 0.2             present: piecewise experimental arm
///   lambda_cens | target_censoring
///   p = 0.5 | p_list = 0.25,0.5,0.75
///   mu1 = 0.5
struct ScenarioConfig {
    double lambda_a = 1.0;
    std::optional<double> lambda_b;
    std::optional<double> delta;
    std::optional<double> t_cut;
    std::optional<double> lambda_cens;
    std::optional<double> target_censoring;
    std::vector<double> p_list{0.5};
    double mu1 = 0.5;

    double reference_p() const { return p_list.front(); }

    double resolved_censoring_rate() const {
        if (lambda_cens) return *lambda_cens;
        if (target_censoring) return calibrate_censoring(ExponentialArm{lambda_a}, *target_censoring);
        return 0.0;
    }

    /// Scenario for a given difference at the reference probability; without
    /// an override the configured delta or lambda_b is used.
    TrialScenario build(std::optional<double> delta_override = std::nullopt) const {
        const double cens = resolved_censoring_rate();
        const std::optional<double> d = delta_override ? delta_override : delta;
        TrialScenario s;
        s.arm1 = ExponentialArm{lambda_a};
        s.censoring_rate = cens;
        s.mu1 = mu1;
        if (d) {
            s.arm2 = t_cut ? ArmModel{PiecewiseExponentialArm{lambda_a,
                                                              rate_from_delta_scn2(lambda_a, *t_cut, reference_p(), *d),
                                                              *t_cut}}
                           : ArmModel{ExponentialArm{rate_from_delta_scn1(lambda_a, reference_p(), *d)}};
        } else if (lambda_b) {
            s.arm2 = t_cut ? ArmModel{PiecewiseExponentialArm{lambda_a, *lambda_b, *t_cut}}
                           : ArmModel{ExponentialArm{*lambda_b}};
        } else {
            throw InvalidInput("scenario needs either lambda_b or delta");
        }
        s.validate();
        return s;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& text, const std::string& where) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw InvalidInput(where + ": not a number: '" + text + "'");
    }
    if (used != text.size() || !std::isfinite(v)) throw InvalidInput(where + ": not a finite number: '" + text + "'");
    return v;
}

inline std::vector<double> parse_double_list(const std::string& text, const std::string& where) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item), where));
    if (out.empty()) throw InvalidInput(where + ": empty list");
    return out;
}

inline std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace detail

inline ScenarioConfig parse_scenario_config(std::istream& in, const std::string& source = "scenario") {
    ScenarioConfig cfg;
    bool have_lambda_a = false;
    std::map<std::string, int> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = source + ":" + std::to_string(line_no);
        if (eq == std::string::npos) throw InvalidInput(where + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (seen[key]++) throw InvalidInput(where + ": duplicate key '" + key + "'");
        if (key == "lambda_a") {
            cfg.lambda_a = detail::parse_double(value, where);
            have_lambda_a = true;
        } else if (key == "lambda_b") {
            cfg.lambda_b = detail::parse_double(value, where);
        } else if (key == "delta") {
            cfg.delta = detail::parse_double(value, where);
        } else if (key == "t_cut") {
            cfg.t_cut = detail::parse_double(value, where);
        } else if (key == "lambda_cens") {
            cfg.lambda_cens = detail::parse_double(value, where);
        } else if (key == "target_censoring") {
            cfg.target_censoring = detail::parse_double(value, where);
        } else if (key == "p" || key == "p_list") {
            cfg.p_list = detail::parse_double_list(value, where);
        } else if (key == "mu1") {
            cfg.mu1 = detail::parse_double(value, where);
        } else {
            throw InvalidInput(where + ": unknown key '" + key + "'");
        }
    }
    if (!have_lambda_a) throw InvalidInput(source + ": lambda_a is required");
    if (cfg.lambda_b && cfg.delta) throw InvalidInput(source + ": give lambda_b or delta, not both");
    if (cfg.lambda_cens && cfg.target_censoring) {
        throw InvalidInput(source + ": give lambda_cens or target_censoring, not both");
    }
    if (seen.count("p") && seen.count("p_list")) throw InvalidInput(source + ": give p or p_list, not both");
    require_positive_rate(cfg.lambda_a, "lambda_a");
    if (cfg.lambda_b) require_positive_rate(*cfg.lambda_b, "lambda_b");
    if (cfg.t_cut && !(*cfg.t_cut > 0.0)) throw InvalidInput(source + ": t_cut must be positive");
    if (cfg.lambda_cens && *cfg.lambda_cens < 0.0) throw InvalidInput(source + ": lambda_cens must be non-negative");
    for (double p : cfg.p_list) check_probability(p);
    if (!(cfg.mu1 > 0.0 && cfg.mu1 < 1.0)) throw InvalidInput(source + ": mu1 must lie in (0,1)");
    return cfg;
}

inline ScenarioConfig load_scenario_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open scenario file '" + path + "'");
    return parse_scenario_config(in, path);
}

inline std::string serialize_scenario_config(const ScenarioConfig& cfg) {
    std::ostringstream os;
    os << "lambda_a = " << detail::format_double(cfg.lambda_a) << '\n';
    if (cfg.lambda_b) os << "lambda_b = " << detail::format_double(*cfg.lambda_b) << '\n';
    if (cfg.delta) os << "delta = " << detail::format_double(*cfg.delta) << '\n';
    if (cfg.t_cut) os << "t_cut = " << detail::format_double(*cfg.t_cut) << '\n';
    if (cfg.lambda_cens) os << "lambda_cens = " << detail::format_double(*cfg.lambda_cens) << '\n';
    if (cfg.target_censoring) os << "target_censoring = " << detail::format_double(*cfg.target_censoring) << '\n';
    os << "p_list = ";
    for (std::size_t i = 0; i < cfg.p_list.size(); ++i) os << (i ? "," : "") << detail::format_double(cfg.p_list[i]);
    os << '\n' << "mu1 = " << detail::format_double(cfg.mu1) << '\n';
    return os.str();
}

}  // namespace survq
