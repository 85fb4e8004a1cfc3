#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include <random>

#include "survq/special_functions.hpp"

using namespace survq;

TEST(Normal, CdfAgainstBoostOnWideGrid) {
    const boost::math::normal_distribution<double> n01;
    for (double x = -8.0; x <= 8.0; x += 0.01) {
        EXPECT_NEAR(normal_cdf(x), boost::math::cdf(n01, x), 1e-12) << x;
        EXPECT_NEAR(normal_sf(x), boost::math::cdf(boost::math::complement(n01, x)), 1e-12) << x;
    }
    EXPECT_EQ(normal_cdf(0.0), 0.5);
}

TEST(Normal, QuantileReferenceValueAndRoundTrip) {
    EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-12);
    for (int i = 1; i <= 99; ++i) {
        const double p = i / 100.0;
        EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-10) << p;
    }
    const boost::math::normal_distribution<double> n01;
    for (double p : {1e-300, 1e-100, 1e-20, 1e-8, 0.3, 0.999999, 1.0 - 1e-15}) {
        const double ref = boost::math::quantile(n01, p);
        EXPECT_NEAR(normal_quantile(p), ref, 1e-12 * std::max(1.0, std::fabs(ref))) << p;
    }
}

TEST(Normal, QuantileRejectsBoundary) {
    EXPECT_THROW(normal_quantile(0.0), InvalidInput);
    EXPECT_THROW(normal_quantile(1.0), InvalidInput);
    EXPECT_THROW(normal_quantile(std::nan("")), InvalidInput);
}

TEST(ChiSquared, CdfAndSfAgainstBoost) {
    for (double dof : {1.0, 2.0, 3.0, 4.0, 7.0, 15.0, 40.0, 101.0}) {
        const boost::math::chi_squared_distribution<double> chi(dof);
        for (double x : {0.01, 0.5, 1.0, 3.84, 7.5, 20.0, 60.0, 150.0}) {
            EXPECT_NEAR(chi2_cdf(x, dof), boost::math::cdf(chi, x), 1e-13) << dof << " " << x;
            const double sf = boost::math::cdf(boost::math::complement(chi, x));
            EXPECT_NEAR(chi2_sf(x, dof), sf, 1e-13 + 1e-11 * sf) << dof << " " << x;
        }
    }
}

TEST(ChiSquared, TwoDegreesClosedForm) {
    for (double x : {0.1, 1.0, 5.0, 12.0}) EXPECT_NEAR(chi2_cdf(x, 2.0), 1.0 - std::exp(-x / 2.0), 1e-15);
}

TEST(ChiSquared, UpperQuantileAgainstBoost) {
    for (double dof : {1.0, 2.0, 3.0, 5.0, 10.0, 30.0}) {
        const boost::math::chi_squared_distribution<double> chi(dof);
        for (double a : {0.2, 0.05, 0.01, 1e-4}) {
            const double ref = boost::math::quantile(boost::math::complement(chi, a));
            EXPECT_NEAR(chi2_upper_quantile(a, dof), ref, 1e-10 * ref) << dof << " " << a;
        }
    }
}

TEST(NoncentralChiSquared, ZeroNoncentralityIsCentral) {
    for (double dof : {1.0, 3.0, 6.0})
        for (double x : {0.5, 2.0, 9.0}) EXPECT_NEAR(noncentral_chi2_cdf(x, dof, 0.0), chi2_cdf(x, dof), 1e-15);
}

TEST(NoncentralChiSquared, AgainstBoost) {
    for (double dof : {1.0, 2.0, 3.0, 6.0})
        for (double lambda : {0.5, 3.0, 10.0, 40.0, 200.0})
            for (double x : {1.0, 5.99, 15.0, 60.0, 250.0}) {
                const boost::math::non_central_chi_squared_distribution<double> d(dof, lambda);
                EXPECT_NEAR(noncentral_chi2_cdf(x, dof, lambda), boost::math::cdf(d, x), 1e-10)
                    << dof << " " << lambda << " " << x;
                EXPECT_NEAR(noncentral_chi2_sf(x, dof, lambda),
                            boost::math::cdf(boost::math::complement(d, x)), 1e-10);
            }
}

TEST(NoncentralChiSquared, OneDegreeIsSquaredShiftedNormal) {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> ua(0.001, 0.2), um(0.0, 8.0);
    for (int i = 0; i < 200; ++i) {
        const double alpha = ua(gen);
        const double m = um(gen);
        const double q = normal_quantile(1.0 - alpha / 2.0);
        const double ref = normal_sf(q - m) + normal_cdf(-q - m);
        EXPECT_NEAR(noncentral_chi2_sf(q * q, 1.0, m * m), ref, 1e-10);
    }
}

TEST(NoncentralChiSquared, MonteCarloOracle) {
    // Identity Psi, two equal shifts with squared norm 10.
    const double lambda = 10.0;
    const double shift = std::sqrt(lambda / 2.0);
    const double q = chi2_upper_quantile(0.05, 2.0);
    EXPECT_NEAR(q, 5.991464547107979, 1e-12);
    std::mt19937_64 gen(2024);
    std::normal_distribution<double> z;
    const int draws = 10'000'000;
    int hits = 0;
    for (int i = 0; i < draws; ++i) {
        const double a = z(gen) + shift;
        const double b = z(gen) + shift;
        hits += a * a + b * b > q;
    }
    const double mc = static_cast<double>(hits) / draws;
    const double se = std::sqrt(mc * (1.0 - mc) / draws);
    EXPECT_NEAR(noncentral_chi2_sf(q, 2.0, lambda), mc, 3.0 * se);
}

TEST(NoncentralChiSquared, TruncationToleranceInsensitive) {
    for (double lambda : {1.0, 10.0, 80.0}) {
        const double a = noncentral_chi2_sf(7.81, 3.0, lambda, 1e-12);
        const double b = noncentral_chi2_sf(7.81, 3.0, lambda, 1e-10);
        EXPECT_LE(std::fabs(a - b), 1e-8);
    }
}

TEST(NoncentralChiSquared, DomainChecks) {
    EXPECT_THROW(noncentral_chi2_cdf(-1.0, 2.0, 1.0), InvalidInput);
    EXPECT_THROW(noncentral_chi2_cdf(1.0, 0.0, 1.0), InvalidInput);
    EXPECT_THROW(noncentral_chi2_cdf(1.0, 2.0, -1.0), InvalidInput);
}
