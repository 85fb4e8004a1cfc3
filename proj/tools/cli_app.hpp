#pragma once

// Command-line application: test | power | samplesize | simulate.
// Kept in a header so the test suites can run it in-process.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "survq/survq.hpp"

namespace survq::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitInternal = 1;

/// Default LS perturbation scale for simulated trials.
inline constexpr double kSimulationSigmaEps = 2.5;

/// Expands "a,b,c" and "start:stop:step" items into a list of doubles.
inline std::vector<double> parse_grid(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = detail::trim(item);
        if (item.find(':') == std::string::npos) {
            out.push_back(detail::parse_double(item, what));
            continue;
        }
        std::vector<double> parts;
        std::stringstream is(item);
        std::string part;
        while (std::getline(is, part, ':')) parts.push_back(detail::parse_double(detail::trim(part), what));
        if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
            throw InvalidInput(what + ": range must be start:stop:step with step > 0 and stop >= start");
        }
        const auto count = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
        for (long i = 0; i <= count; ++i) out.push_back(parts[0] + static_cast<double>(i) * parts[2]);
    }
    if (out.empty()) throw InvalidInput(what + ": empty list");
    return out;
}

inline std::vector<std::size_t> parse_count_list(const std::string& text, const std::string& what) {
    std::vector<std::size_t> out;
    for (double v : parse_grid(text, what)) {
        if (!(v >= 2.0) || v != std::floor(v) || v > 1e9) {
            throw InvalidInput(what + ": sample sizes must be integers >= 2");
        }
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

inline std::string fmt(double v, int digits = 10) {
    if (std::isnan(v)) return "NA";
    std::ostringstream os;
    os << std::setprecision(digits) << v;
    return os.str();
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline Json scenario_json(const TrialScenario& s) {
    Json j;
    j["lambda_a"] = s.arm1.rate;
    if (const auto* pw = std::get_if<PiecewiseExponentialArm>(&s.arm2)) {
        j["arm2"] = "piecewise_exponential";
        j["lambda_b"] = pw->rate_late;
        j["t_cut"] = pw->t_cut;
    } else {
        j["arm2"] = "exponential";
        j["lambda_b"] = std::get<ExponentialArm>(s.arm2).rate;
    }
    j["lambda_cens"] = s.censoring_rate;
    const CensoringFractions cf = censoring_fraction(s);
    j["censoring_fraction"] = {cf.arm1, cf.arm2};
    j["mu1"] = s.mu1;
    return j;
}

inline Json make_manifest(const std::string& command, Json options) {
    Json m;
    m["tool"] = "survq";
    m["version"] = kVersion;
    m["command"] = command;
    m["options"] = std::move(options);
    return m;
}

/// Plot-ready CSV: a manifest comment line, a header, then rows.
inline void write_csv(std::ostream& out, const Json& doc, const std::vector<std::string>& columns) {
    out << "# manifest: " << doc["manifest"].dump() << '\n';
    for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
    out << '\n';
    for (const Json& row : doc["rows"]) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            const Json& v = row[columns[c]];
            out << (c ? "," : "");
            if (v.is_number_float()) out << fmt(v.get<double>());
            else if (v.is_boolean()) out << (v.get<bool>() ? "true" : "false");
            else if (v.is_string()) out << v.get<std::string>();
            else if (v.is_null()) out << "NA";
            else out << v.dump();
        }
        out << '\n';
    }
}

/// Fixed-width rendering of the same rows.
inline void write_table(std::ostream& out, const Json& doc, const std::vector<std::string>& columns) {
    std::vector<std::vector<std::string>> cells;
    std::vector<std::size_t> width;
    for (const auto& c : columns) width.push_back(c.size());
    for (const Json& row : doc["rows"]) {
        std::vector<std::string> line;
        for (std::size_t c = 0; c < columns.size(); ++c) {
            const Json& v = row[columns[c]];
            std::string s = v.is_number_float() ? fmt(v.get<double>(), 6)
                            : v.is_string()     ? v.get<std::string>()
                            : v.is_null()       ? "NA"
                                                : v.dump();
            width[c] = std::max(width[c], s.size());
            line.push_back(std::move(s));
        }
        cells.push_back(std::move(line));
    }
    auto emit = [&](const std::vector<std::string>& line) {
        for (std::size_t c = 0; c < line.size(); ++c) out << (c ? "  " : "") << std::setw(static_cast<int>(width[c])) << line[c];
        out << '\n';
    };
    emit(columns);
    for (const auto& line : cells) emit(line);
}

inline void emit(std::ostream& out, const Json& doc, const std::string& format, const std::vector<std::string>& columns) {
    if (format == "json") {
        out << doc.dump(2) << '\n';
    } else if (format == "csv") {
        write_csv(out, doc, columns);
    } else {
        out << "# manifest: " << doc["manifest"].dump() << '\n';
        write_table(out, doc, columns);
    }
}

inline std::optional<double> auto_or_value(const std::string& text, const std::string& what) {
    if (text == "auto") return std::nullopt;
    const double v = detail::parse_double(text, what);
    if (!(v > 0.0)) throw InvalidInput(what + " must be positive or 'auto'");
    return v;
}

inline unsigned default_threads() {
    if (const char* env = std::getenv("SURVQ_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1 && v <= 1024) return static_cast<unsigned>(v);
    }
    return 1;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Json arm_json(const ArmEstimate& a) {
    Json j;
    j["quantile"] = a.quantile_time;
    j["phi"] = a.phi;
    j["density"] = a.density.value;
    j["density_used"] = a.density_used;
    j["density_clamped"] = a.clamped;
    j["tuning"] = a.density.tuning;
    j["tuning_source"] = a.density.tuning_source;
    return j;
}

// ---------------------------------------------------------------------------

struct TestOptions {
    std::string data;
    std::string p = "0.5";
    std::string method = "ls";
    double alpha = 0.05;
    std::string sigma_eps = "auto";
    std::string bandwidth = "auto";
    bool bonferroni = false;
    std::uint64_t seed = 1;
    std::string format = "table";
};

inline int cmd_test(const TestOptions& o, std::ostream& out, std::ostream& err) {
    check_alpha(o.alpha);
    const std::string bytes = read_file(o.data);
    std::istringstream in(bytes);
    const Dataset ds = parse_dataset(in, o.data);
    for (const auto& w : ds.warnings) err << "warning: " << w << '\n';

    const std::vector<double> ps = parse_grid(o.p, "--p");
    DensitySettings settings;
    settings.method = parse_density_method(o.method);
    settings.sigma_eps = auto_or_value(o.sigma_eps, "--sigma-eps");
    settings.bandwidth = auto_or_value(o.bandwidth, "--bandwidth");
    settings.seed = o.seed;

    Json opts;
    opts["data"] = o.data;
    opts["data_fnv1a64"] = hex64(fnv1a64(bytes));
    opts["rows"] = ds.rows;
    opts["n1"] = ds.data.arm1.size();
    opts["n2"] = ds.data.arm2.size();
    opts["p"] = ps;
    opts["method"] = to_string(settings.method);
    opts["alpha"] = o.alpha;
    opts["sigma_eps"] = o.sigma_eps;
    opts["bandwidth"] = o.bandwidth;
    opts["bonferroni"] = o.bonferroni;
    opts["seed"] = o.seed;

    Json doc;
    Json rows = Json::array();
    Json tuning = Json::array();
    if (ps.size() == 1) {
        const UnivariateTestResult r = univariate_test(ds.data, ps.front(), settings);
        Json row;
        row["test"] = "univariate";
        row["p"] = r.p;
        row["delta_hat"] = r.delta_hat;
        row["sigma_hat"] = r.sigma_hat;
        row["statistic"] = r.statistic;
        row["dof"] = 1;
        row["p_value"] = r.p_value;
        row["reject"] = r.p_value < o.alpha;
        row["arm1"] = arm_json(r.arms[0]);
        row["arm2"] = arm_json(r.arms[1]);
        tuning.push_back({{"p", r.p}, {"arm1", r.arms[0].density.tuning}, {"arm2", r.arms[1].density.tuning}});
        rows.push_back(row);
    } else {
        const MultivariateTestResult r = multivariate_test(ds.data, ps, settings);
        Json row;
        row["test"] = "multivariate";
        row["p"] = "all";
        row["delta_hat"] = nullptr;
        row["sigma_hat"] = nullptr;
        row["statistic"] = r.statistic;
        row["dof"] = r.dof;
        row["p_value"] = r.p_value;
        row["reject"] = r.p_value < o.alpha;
        row["delta_hats"] = r.delta_hats;
        Json psi = Json::array();
        for (std::size_t i = 0; i < r.psi_hat.size(); ++i) {
            Json line = Json::array();
            for (std::size_t j = 0; j < r.psi_hat.size(); ++j) line.push_back(r.psi_hat(i, j));
            psi.push_back(line);
        }
        row["psi_hat"] = psi;
        for (std::size_t j = 0; j < ps.size(); ++j) {
            tuning.push_back(
                {{"p", ps[j]}, {"arm1", r.arms[j][0].density.tuning}, {"arm2", r.arms[j][1].density.tuning}});
        }
        rows.push_back(row);
    }
    if (o.bonferroni) {
        if (ps.size() < 2) throw InvalidInput("--bonferroni needs at least two probabilities");
        for (const AdjustedUnivariateResult& a : bonferroni_followup(ds.data, ps, settings, o.alpha)) {
            Json row;
            row["test"] = "bonferroni";
            row["p"] = a.result.p;
            row["delta_hat"] = a.result.delta_hat;
            row["sigma_hat"] = a.result.sigma_hat;
            row["statistic"] = a.result.statistic;
            row["dof"] = 1;
            row["p_value"] = a.result.p_value;
            row["adjusted_p_value"] = a.adjusted_p_value;
            row["reject"] = a.reject;
            row["arm1"] = arm_json(a.result.arms[0]);
            row["arm2"] = arm_json(a.result.arms[1]);
            rows.push_back(row);
        }
    }
    opts["tuning_used"] = tuning;
    doc["manifest"] = make_manifest("test", opts);
    doc["rows"] = rows;
    std::vector<std::string> cols{"test", "p", "delta_hat", "statistic", "dof", "p_value"};
    if (o.bonferroni) cols.push_back("adjusted_p_value");
    cols.push_back("reject");
    emit(out, doc, o.format, cols);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct PlanOptions {
    std::string scenario;
    std::string p;  // empty: from the scenario file
    std::string delta;
    std::string n;
    std::string power;
    double alpha = 0.05;
    bool total = false;
    bool skip_infeasible = false;
    std::string format = "csv";
};

inline ScenarioConfig load_plan_scenario(const std::string& path, const std::string& p_override) {
    ScenarioConfig cfg = load_scenario_config(path);
    if (!p_override.empty()) {
        cfg.p_list = parse_grid(p_override, "--p");
        for (double p : cfg.p_list) check_probability(p);
    }
    return cfg;
}

inline std::vector<std::optional<double>> delta_list(const std::string& text) {
    std::vector<std::optional<double>> out;
    if (text.empty()) {
        out.emplace_back(std::nullopt);
        return out;
    }
    for (double d : parse_grid(text, "--delta")) out.emplace_back(d);
    return out;
}

/// Scenario for each requested delta; infeasible deltas either raise or
/// are dropped with a warning.
inline std::vector<std::pair<std::optional<double>, TrialScenario>> scenarios_for(
    const ScenarioConfig& cfg, const std::string& deltas, bool skip_infeasible, std::ostream& err) {
    std::vector<std::pair<std::optional<double>, TrialScenario>> out;
    for (const auto& d : delta_list(deltas)) {
        try {
            out.emplace_back(d, cfg.build(d));
        } catch (const InfeasibleDelta& e) {
            if (!skip_infeasible) throw;
            err << "warning: skipping " << e.what() << '\n';
        }
    }
    if (out.empty()) throw InfeasibleDelta("every requested delta is infeasible for this scenario");
    return out;
}

inline Json plan_options_json(const PlanOptions& o, const ScenarioConfig& cfg) {
    Json opts;
    opts["scenario_file"] = o.scenario;
    opts["scenario"] = serialize_scenario_config(cfg);
    opts["p"] = cfg.p_list;
    opts["alpha"] = o.alpha;
    return opts;
}

inline int cmd_power(const PlanOptions& o, std::ostream& out, std::ostream& err) {
    check_alpha(o.alpha);
    const ScenarioConfig cfg = load_plan_scenario(o.scenario, o.p);
    if (o.n.empty()) throw InvalidInput("--n is required");
    const std::vector<std::size_t> ns = parse_count_list(o.n, "--n");
    const auto scenarios = scenarios_for(cfg, o.delta, o.skip_infeasible, err);

    Json rows = Json::array();
    Json scen = Json::array();
    for (const auto& [d, s] : scenarios) {
        scen.push_back(scenario_json(s));
        const bool uni = cfg.p_list.size() == 1;
        double sigma2 = 0.0;
        Matrix psi;
        std::vector<double> deltas;
        for (double p : cfg.p_list) deltas.push_back(s.delta(p));
        bool flagged = false;
        if (uni) {
            const ScenarioVariance v = scenario_variance(s, cfg.p_list.front());
            sigma2 = v.sigma2;
            flagged = v.at_discontinuity;
        } else {
            psi = scenario_psi(s, cfg.p_list);
            for (double p : cfg.p_list) flagged = flagged || on_change_point(s, s.quantile(2, p));
        }
        for (std::size_t n : ns) {
            const double total = o.total ? static_cast<double>(n) : 2.0 * static_cast<double>(n);
            Json row;
            row["delta"] = deltas.front();
            row["n_per_group"] = o.total ? total / 2.0 : static_cast<double>(n);
            row["n_total"] = total;
            if (uni) {
                row["sigma2"] = sigma2;
                row["power"] = power_univariate(deltas.front(), sigma2, total, o.alpha);
            } else {
                row["noncentrality"] = multivariate_noncentrality(deltas, psi, total);
                row["power"] = power_multivariate(deltas, psi, total, o.alpha);
            }
            row["density_discontinuity"] = flagged;
            rows.push_back(row);
        }
    }
    Json opts = plan_options_json(o, cfg);
    opts["delta"] = o.delta.empty() ? Json("from scenario") : Json(o.delta);
    opts["n"] = o.n;
    opts["n_is_total"] = o.total;
    opts["resolved_scenarios"] = scen;
    Json doc;
    doc["manifest"] = make_manifest("power", opts);
    doc["rows"] = rows;
    const std::vector<std::string> cols =
        cfg.p_list.size() == 1 ? std::vector<std::string>{"delta", "n_per_group", "n_total", "sigma2", "power"}
                               : std::vector<std::string>{"delta", "n_per_group", "n_total", "noncentrality", "power"};
    emit(out, doc, o.format, cols);
    return kExitOk;
}

inline int cmd_samplesize(const PlanOptions& o, std::ostream& out, std::ostream& err) {
    check_alpha(o.alpha);
    const ScenarioConfig cfg = load_plan_scenario(o.scenario, o.p);
    if (o.power.empty()) throw InvalidInput("--power is required");
    const std::vector<double> targets = parse_grid(o.power, "--power");
    const auto scenarios = scenarios_for(cfg, o.delta, o.skip_infeasible, err);

    Json rows = Json::array();
    for (double target : targets) {
        for (const auto& [d, s] : scenarios) {
            TrialScenario eq = s;
            eq.mu1 = 0.5;
            SampleSizeResult r;
            std::vector<double> deltas;
            for (double p : cfg.p_list) deltas.push_back(eq.delta(p));
            if (cfg.p_list.size() == 1) {
                r = min_sample_size_univariate(deltas.front(), scenario_sigma2(eq, cfg.p_list.front()), target,
                                               o.alpha);
            } else {
                r = min_sample_size_multivariate(deltas, scenario_psi(eq, cfg.p_list), target, o.alpha);
            }
            Json row;
            row["power"] = target;
            row["delta"] = deltas.front();
            row["n_per_group"] = r.per_group_n;
            row["n_total"] = r.total_n;
            row["achieved_power"] = r.achieved_power;
            row["power_at_n_minus_1"] = std::isnan(r.power_at_n_minus_1) ? Json(nullptr) : Json(r.power_at_n_minus_1);
            rows.push_back(row);
        }
    }
    Json opts = plan_options_json(o, cfg);
    opts["delta"] = o.delta.empty() ? Json("from scenario") : Json(o.delta);
    opts["power"] = targets;
    opts["allocation"] = "equal";
    Json doc;
    doc["manifest"] = make_manifest("samplesize", opts);
    doc["rows"] = rows;
    std::vector<std::string> cols{"power", "delta", "n_per_group"};
    if (o.total) cols.push_back("n_total");
    cols.push_back("achieved_power");
    cols.push_back("power_at_n_minus_1");
    emit(out, doc, o.format, cols);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct SimulateOptions {
    std::string scenario;
    std::string p;
    std::string delta;
    std::string n = "100";
    std::size_t reps = 1000;
    std::string method = "ls";
    std::string sigma_eps;  // empty: simulation default
    std::string bandwidth = "auto";
    double alpha = 0.05;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    bool timing = false;
    bool skip_infeasible = false;
    std::string format = "csv";
};

inline int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
    check_alpha(o.alpha);
    if (!o.seed && std::getenv("CI")) throw InvalidInput("--seed is mandatory when CI is set");
    const std::uint64_t seed = o.seed.value_or(1);
    const ScenarioConfig cfg = load_plan_scenario(o.scenario, o.p);
    const std::vector<std::size_t> ns = parse_count_list(o.n, "--n");
    if (o.reps < 1) throw InvalidInput("--reps must be >= 1");
    const auto scenarios = scenarios_for(cfg, o.delta, o.skip_infeasible, err);

    DensitySettings settings;
    settings.method = parse_density_method(o.method);
    settings.sigma_eps = o.sigma_eps.empty() ? std::optional<double>(kSimulationSigmaEps)
                                             : auto_or_value(o.sigma_eps, "--sigma-eps");
    settings.bandwidth = auto_or_value(o.bandwidth, "--bandwidth");

    Json rows = Json::array();
    Json scen = Json::array();
    std::size_t cell = 0;
    for (const auto& [d, s] : scenarios) {
        scen.push_back(scenario_json(s));
        for (std::size_t n : ns) {
            SimulationPlan plan;
            plan.scenario = s;
            plan.scenario.mu1 = 0.5;
            plan.n1 = plan.n2 = n;
            plan.probabilities = cfg.p_list;
            plan.alpha = o.alpha;
            plan.replications = o.reps;
            plan.density = settings;
            plan.master_seed = derive_seed(seed, cell++);
            plan.threads = o.threads;
            const RejectionReport rep = empirical_rejection(plan);
            Json row;
            row["delta"] = s.delta(cfg.p_list.front());
            row["n_per_group"] = n;
            row["empirical"] = rep.rate;
            row["mc_se"] = rep.standard_error;
            row["formula"] = rep.formula_power;
            row["valid"] = rep.valid;
            row["failures"] = rep.failures;
            row["report_valid"] = rep.report_valid;
            row["failure_kinds"] = rep.failure_kinds;
            if (o.timing) {
                row["time_mean_s"] = rep.seconds_mean;
                row["time_sd_s"] = rep.seconds_sd;
            }
            rows.push_back(row);
        }
    }
    Json opts;
    opts["scenario_file"] = o.scenario;
    opts["scenario"] = serialize_scenario_config(cfg);
    opts["resolved_scenarios"] = scen;
    opts["p"] = cfg.p_list;
    opts["delta"] = o.delta.empty() ? Json("from scenario") : Json(o.delta);
    opts["n"] = o.n;
    opts["reps"] = o.reps;
    opts["method"] = to_string(settings.method);
    opts["sigma_eps"] = settings.sigma_eps ? Json(*settings.sigma_eps) : Json("auto");
    opts["bandwidth"] = o.bandwidth;
    opts["alpha"] = o.alpha;
    opts["seed"] = seed;
    opts["seed_derivation"] = "cell c uses derive_seed(seed, c); replicate r uses derive_seed(cell_seed, r)";
    opts["timing"] = o.timing;
    Json doc;
    doc["manifest"] = make_manifest("simulate", opts);
    doc["rows"] = rows;
    std::vector<std::string> cols{"delta", "n_per_group", "empirical", "mc_se", "formula", "valid", "failures",
                                  "report_valid"};
    if (o.timing) {
        cols.push_back("time_mean_s");
        cols.push_back("time_sd_s");
    }
    emit(out, doc, o.format, cols);
    return kExitOk;
}

// ---------------------------------------------------------------------------

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Two-sample tests and trial planning for survival quantiles", "survq"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));
    const std::vector<std::string> formats{"json", "csv", "table"};

    TestOptions to;
    auto* test = app.add_subcommand("test", "Test equality of one or several quantiles on a CSV data file");
    test->add_option("data", to.data, "CSV file with columns time,status,group")->required();
    test->add_option("--p", to.p, "Probability or comma-separated list")->capture_default_str();
    test->add_option("--method", to.method, "Density estimator: ls or kde")->capture_default_str();
    test->add_option("--alpha", to.alpha, "Significance level")->capture_default_str();
    test->add_option("--sigma-eps", to.sigma_eps, "LS perturbation scale or 'auto'")->capture_default_str();
    test->add_option("--bandwidth", to.bandwidth, "KDE bandwidth or 'auto'")->capture_default_str();
    test->add_flag("--bonferroni", to.bonferroni, "Add Bonferroni-adjusted univariate follow-up tests");
    test->add_option("--seed", to.seed, "Seed for the LS perturbations")->capture_default_str();
    test->add_option("--format", to.format, "Output format")->check(CLI::IsMember(formats))->capture_default_str();

    PlanOptions po;
    auto* power = app.add_subcommand("power", "Asymptotic power over a grid of differences and sample sizes");
    PlanOptions so;
    so.format = "table";
    auto* ssize = app.add_subcommand("samplesize", "Minimum per-group sample size for target powers");
    for (auto [cmd, o] : {std::pair{power, &po}, std::pair{ssize, &so}}) {
        cmd->add_option("--scenario", o->scenario, "Scenario config file")->required();
        cmd->add_option("--p", o->p, "Probabilities (overrides the scenario file)");
        cmd->add_option("--delta", o->delta, "Differences at the first p: list or start:stop:step");
        cmd->add_option("--alpha", o->alpha, "Significance level")->capture_default_str();
        cmd->add_flag("--total", o->total, "Sample sizes refer to the total rather than per group");
        cmd->add_flag("--skip-infeasible", o->skip_infeasible, "Drop infeasible differences instead of failing");
        cmd->add_option("--format", o->format, "Output format")->check(CLI::IsMember(formats))->capture_default_str();
    }
    power->add_option("--n", po.n, "Sample sizes per group: list or start:stop:step")->required();
    ssize->add_option("--power", so.power, "Target powers")->required();

    SimulateOptions mo;
    mo.threads = default_threads();
    auto* sim = app.add_subcommand("simulate", "Empirical rejection rates by Monte Carlo");
    sim->add_option("--scenario", mo.scenario, "Scenario config file")->required();
    sim->add_option("--p", mo.p, "Probabilities (overrides the scenario file)");
    sim->add_option("--delta", mo.delta, "Differences at the first p");
    sim->add_option("--n", mo.n, "Sample sizes per group")->capture_default_str();
    sim->add_option("--reps", mo.reps, "Replications per cell")->capture_default_str();
    sim->add_option("--method", mo.method, "Density estimator: ls or kde")->capture_default_str();
    sim->add_option("--sigma-eps", mo.sigma_eps, "LS perturbation scale or 'auto' (default 2.5)");
    sim->add_option("--bandwidth", mo.bandwidth, "KDE bandwidth or 'auto'")->capture_default_str();
    sim->add_option("--alpha", mo.alpha, "Significance level")->capture_default_str();
    sim->add_option("--seed", mo.seed, "Master seed (mandatory when CI is set)");
    sim->add_option("--threads", mo.threads, "Worker threads (default: SURVQ_THREADS or 1)")
        ->check(CLI::Range(1u, 1024u));
    sim->add_flag("--timing", mo.timing, "Add per-replicate timing columns (not reproducible)");
    sim->add_flag("--skip-infeasible", mo.skip_infeasible, "Drop infeasible differences instead of failing");
    sim->add_option("--format", mo.format, "Output format")->check(CLI::IsMember(formats))->capture_default_str();

    std::vector<const char*> argv{"survq"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (test->parsed()) return cmd_test(to, out, err);
        if (power->parsed()) return cmd_power(po, out, err);
        if (ssize->parsed()) return cmd_samplesize(so, out, err);
        return cmd_simulate(mo, out, err);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.error_class() == ErrorClass::validation ? kExitValidation : kExitNumerical;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}

}  // namespace survq::cli
