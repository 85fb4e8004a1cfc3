#pragma once

// Independent reference computations shared by the unit and acceptance
// tests. Nothing here calls into the library routines it is used to check.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace survq_test {

/// Brute-force product-limit estimate at t: for every distinct event time
/// u <= t, multiply by 1 - d(u)/Y(u), where Y counts observations >= u.
inline double naive_km(const std::vector<double>& times, const std::vector<bool>& events, double t) {
    std::vector<double> ev;
    for (std::size_t i = 0; i < times.size(); ++i)
        if (events[i] && times[i] <= t) ev.push_back(times[i]);
    std::sort(ev.begin(), ev.end());
    ev.erase(std::unique(ev.begin(), ev.end()), ev.end());
    double s = 1.0;
    for (double u : ev) {
        double d = 0.0, y = 0.0;
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (times[i] >= u) y += 1.0;
            if (times[i] == u && events[i]) d += 1.0;
        }
        s *= 1.0 - d / y;
    }
    return s;
}

/// Brute-force Greenwood sum over distinct event times u <= t.
inline double naive_greenwood(const std::vector<double>& times, const std::vector<bool>& events, double t) {
    std::vector<double> ev;
    for (std::size_t i = 0; i < times.size(); ++i)
        if (events[i] && times[i] <= t) ev.push_back(times[i]);
    std::sort(ev.begin(), ev.end());
    ev.erase(std::unique(ev.begin(), ev.end()), ev.end());
    double g = 0.0;
    for (double u : ev) {
        double d = 0.0, y = 0.0;
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (times[i] >= u) y += 1.0;
            if (times[i] == u && events[i]) d += 1.0;
        }
        g += d / (y * (y - d));
    }
    return g;
}

/// Adaptive Gauss-Kronrod integral of f over [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-12,
                        unsigned max_depth = 15) {
    if (b <= a) return 0.0;
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, max_depth, tol, &err);
}

/// int_0^t hazard(x) / (S(x) G(x)) dx for a piecewise-constant hazard with
/// a single break at `t_cut` and exponential censoring, computed by
/// quadrature of the defining integrand.
inline double phi_by_quadrature(double rate_early, double rate_late, double t_cut, double cens, double t) {
    auto survival = [&](double x) {
        const double H = x < t_cut ? rate_early * x : rate_early * t_cut + rate_late * (x - t_cut);
        return std::exp(-H);
    };
    auto integrand = [&](double x) {
        const double hz = x < t_cut ? rate_early : rate_late;
        return hz / (survival(x) * std::exp(-cens * x));
    };
    if (t <= t_cut) return integrate(integrand, 0.0, t);
    return integrate(integrand, 0.0, t_cut) + integrate(integrand, t_cut, t);
}

/// Kolmogorov-Smirnov statistic of a sample against U(0,1).
inline double ks_uniform_statistic(std::vector<double> u) {
    std::sort(u.begin(), u.end());
    const auto n = static_cast<double>(u.size());
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        d = std::max(d, static_cast<double>(i + 1) / n - u[i]);
        d = std::max(d, u[i] - static_cast<double>(i) / n);
    }
    return d;
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_two_sample_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    const auto na = static_cast<double>(a.size());
    const auto nb = static_cast<double>(b.size());
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

/// P(D > d) for effective sample size n (Stephens' correction of the
/// asymptotic Kolmogorov series).
inline double ks_p_value(double d, double n) {
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 ? 1.0 : -1.0) * term;
        if (term < 1e-18) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// Self-deleting temporary file.
class TempFile {
public:
    explicit TempFile(const std::string& contents, const std::string& suffix = ".txt") {
        static int counter = 0;
        path_ = (std::filesystem::temp_directory_path() /
                 ("survq_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + suffix))
                    .string();
        write(contents);
    }
    ~TempFile() { std::filesystem::remove(path_); }
    TempFile(const TempFile&) = delete;
    TempFile& operator=(const TempFile&) = delete;

    void write(const std::string& contents) const {
        std::ofstream out(path_, std::ios::binary);
        out << contents;
    }
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

/// Splits CSV output into rows of cells, skipping '#' comment lines.
inline std::vector<std::vector<std::string>> read_csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace survq_test
