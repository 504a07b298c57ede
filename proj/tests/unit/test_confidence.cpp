#include <gtest/gtest.h>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <random>

#include "kgx/confidence.hpp"
#include "kgx/error.hpp"

using namespace kgx;

TEST(Quantiles, StudentTAgainstBoost) {
    for (int df : {1, 2, 3, 4, 5, 7, 10, 19, 30, 60, 120, 500, 5000}) {
        boost::math::students_t dist(df);
        for (double p : {0.5, 0.6, 0.75, 0.9, 0.95, 0.975, 0.99, 0.995, 0.9995, 0.05, 0.025, 0.001}) {
            const double expected = boost::math::quantile(dist, p);
            EXPECT_NEAR(student_t_quantile(p, df), expected, 1e-6 * std::max(1.0, std::fabs(expected)))
                << "df=" << df << " p=" << p;
        }
        for (double t : {-4.0, -1.0, 0.0, 0.3, 2.5, 10.0}) {
            EXPECT_NEAR(student_t_cdf(t, df), boost::math::cdf(dist, t), 1e-9) << "df=" << df << " t=" << t;
        }
    }
}

TEST(Quantiles, NormalAgainstBoost) {
    boost::math::normal dist;
    for (double p : {1e-6, 0.001, 0.025, 0.1, 0.5, 0.8, 0.975, 0.999999}) {
        EXPECT_NEAR(normal_quantile(p), boost::math::quantile(dist, p), 1e-8) << p;
    }
}

TEST(Quantiles, DomainChecks) {
    EXPECT_THROW(student_t_quantile(0.0, 3), Error);
    EXPECT_THROW(student_t_quantile(1.0, 3), Error);
    EXPECT_THROW(student_t_quantile(0.5, 0), Error);
}

TEST(TInterval, KnownValues) {
    const std::vector<double> v{1, 2, 3, 4, 5};
    auto ci = t_interval(v, 0.95);
    ASSERT_TRUE(ci);
    const double half = boost::math::quantile(boost::math::students_t(4), 0.975) * std::sqrt(2.5) / std::sqrt(5.0);
    EXPECT_NEAR(ci->low, 3 - half, 1e-9);
    EXPECT_NEAR(ci->high, 3 + half, 1e-9);
    EXPECT_EQ(ci->n, 5u);
    EXPECT_FALSE(t_interval(std::vector<double>{1.0}, 0.95));
}

TEST(Intervals, ZeroVarianceCollapses) {
    const std::vector<double> v(20, 0.1);
    auto t = t_interval(v, 0.9);
    ASSERT_TRUE(t);
    EXPECT_EQ(t->low, t->high);
    EXPECT_NEAR(t->low, 0.1, 1e-15);
    auto b = bootstrap_ci(v, 0.9, 200, 4);
    ASSERT_TRUE(b);
    EXPECT_EQ(b->low, b->high);
    EXPECT_NEAR(b->low, 0.1, 1e-15);
}

TEST(Bootstrap, DeterministicAndWorkerIndependent) {
    std::mt19937_64 rng(1);
    std::vector<double> v(300);
    for (auto& x : v) x = static_cast<double>(rng() % 1000) / 1000.0;
    auto a = bootstrap_ci(v, 0.95, 1000, 42);
    auto b = bootstrap_ci(v, 0.95, 1000, 42);
    auto c = bootstrap_ci(v, 0.95, 1000, 42, 5, 4);
    auto d = bootstrap_ci(v, 0.95, 1000, 43);
    ASSERT_TRUE(a && b && c && d);
    EXPECT_EQ(*a, *b);
    EXPECT_EQ(*a, *c);
    EXPECT_NE(*a, *d);
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    EXPECT_LE(a->low, mean);
    EXPECT_GE(a->high, mean);
}

TEST(Bootstrap, SmallSamplesAndBadConfig) {
    const std::vector<double> v{1, 2, 3};
    EXPECT_FALSE(bootstrap_ci(v, 0.95, 1000, 0, 5));
    EXPECT_TRUE(bootstrap_ci(v, 0.95, 1000, 0, 3));
    try {
        bootstrap_ci(v, 0.95, 99, 0, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Config);
    }
    EXPECT_THROW(bootstrap_ci(v, 1.0, 1000, 0, 1), Error);
    CiConfig none;
    none.method = CiMethod::None;
    EXPECT_FALSE(confidence_interval(v, none));
}

// Coverage of the true mean on Bernoulli(0.3) samples stays near the nominal
// level for both methods.
TEST(Intervals, CoverageNearNominal) {
    std::mt19937_64 rng(77);
    std::bernoulli_distribution coin(0.3);
    int boot_hits = 0, t_hits = 0;
    const int trials = 200;
    for (int i = 0; i < trials; ++i) {
        std::vector<double> v(200);
        for (auto& x : v) x = coin(rng) ? 1.0 : 0.0;
        auto b = bootstrap_ci(v, 0.9, 400, static_cast<std::uint64_t>(i));
        auto t = t_interval(v, 0.9);
        boot_hits += b->low <= 0.3 && 0.3 <= b->high;
        t_hits += t->low <= 0.3 && 0.3 <= t->high;
    }
    EXPECT_GE(boot_hits, static_cast<int>(0.8 * trials));
    EXPECT_GE(t_hits, static_cast<int>(0.8 * trials));
    EXPECT_LE(t_hits, static_cast<int>(0.98 * trials));
}

TEST(Intervals, Clamp) {
    ConfidenceInterval ci{-0.2, 1.3, 0.95, CiMethod::TTest, 4};
    auto c = clamp_interval(ci, 0.0, 1.0);
    EXPECT_EQ(c.low, 0.0);
    EXPECT_EQ(c.high, 1.0);
}

TEST(Intervals, MethodNames) {
    EXPECT_EQ(parse_ci_method("bootstrap"), CiMethod::Bootstrap);
    EXPECT_EQ(parse_ci_method(ci_method_name(CiMethod::TTest)), CiMethod::TTest);
    EXPECT_FALSE(parse_ci_method("jackknife"));
}
