#include "kgx/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>
#include <vector>

#include "kgx/error.hpp"
#include "kgx/random.hpp"

namespace kgx {

const char* ci_method_name(CiMethod m) {
    switch (m) {
        case CiMethod::None: return "none";
        case CiMethod::Bootstrap: return "bootstrap";
        case CiMethod::TTest: return "ttest";
    }
    return "?";
}

std::optional<CiMethod> parse_ci_method(std::string_view s) {
    if (s == "none") return CiMethod::None;
    if (s == "bootstrap") return CiMethod::Bootstrap;
    if (s == "ttest" || s == "t-test") return CiMethod::TTest;
    return std::nullopt;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::Domain, "normal_quantile: p must lie in (0,1)");
    // Acklam's rational approximation, then one Halley step.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

double student_t_cdf(double t, int df) {
    if (df < 1) throw Error(ErrorCode::Domain, "student_t_cdf: df must be >= 1");
    // Closed form for integer degrees of freedom: A(t|df) = P(|T| <= |t|),
    // signed with t.
    const double nu = df;
    const double theta = std::atan(t / std::sqrt(nu));
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    const double c2 = c * c;
    double a;
    if (df % 2 == 1) {
        double sum = 0.0;
        if (df > 1) {
            double term = 1.0;
            sum = 1.0;
            for (int j = 1; j <= (df - 3) / 2; ++j) {
                term *= (2.0 * j) / (2.0 * j + 1.0) * c2;
                sum += term;
            }
        }
        a = 2.0 / std::numbers::pi * (theta + s * c * sum);
    } else {
        double term = 1.0;
        double sum = 1.0;
        for (int j = 1; j <= (df - 2) / 2; ++j) {
            term *= (2.0 * j - 1.0) / (2.0 * j) * c2;
            sum += term;
        }
        a = s * sum;
    }
    return 0.5 + 0.5 * a;
}

namespace {

double student_t_pdf(double t, int df) {
    const double nu = df;
    const double log_norm = std::lgamma((nu + 1.0) / 2.0) - std::lgamma(nu / 2.0) - 0.5 * std::log(nu * std::numbers::pi);
    return std::exp(log_norm - (nu + 1.0) / 2.0 * std::log1p(t * t / nu));
}

// Hill (1970): t such that P(|T| > t) = p, for two-sided tail mass p.
double hill_two_sided(double p, double n) {
    if (n == 1.0) {
        const double half = p * std::numbers::pi / 2.0;
        return std::cos(half) / std::sin(half);
    }
    if (n == 2.0) return std::sqrt(2.0 / (p * (2.0 - p)) - 2.0);
    const double a = 1.0 / (n - 0.5);
    const double b = 48.0 / (a * a);
    double c = ((20700.0 * a / b - 98.0) * a - 16.0) * a + 96.36;
    const double d = ((94.5 / (b + c) - 3.0) / b + 1.0) * std::sqrt(a * std::numbers::pi / 2.0) * n;
    double x = d * p;
    double y = std::pow(x, 2.0 / n);
    if (y > 0.05 + a) {
        x = normal_quantile(0.5 * p);
        y = x * x;
        if (n < 5.0) c += 0.3 * (n - 4.5) * (x + 0.6);
        c = (((0.05 * d * x - 5.0) * x - 7.0) * x - 2.0) * x + b + c;
        y = (((((0.4 * y + 6.3) * y + 36.0) * y + 94.5) / c - y - 3.0) / b + 1.0) * x;
        y = a * y * y;
        y = y > 0.002 ? std::exp(y) - 1.0 : 0.5 * y * y + y;
    } else {
        y = ((1.0 / (((n + 6.0) / (n * y) - 0.089 * d - 0.822) * (n + 2.0) * 3.0) + 0.5 / (n + 4.0)) * y - 1.0) *
                (n + 1.0) / (n + 2.0) +
            1.0 / y;
    }
    return std::sqrt(n * y);
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double mean_of(std::span<const double> values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

void check_level(double level) {
    if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::Config, "confidence level must lie in (0,1)");
}

}  // namespace

double student_t_quantile(double p, int df) {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::Domain, "student_t_quantile: p must lie in (0,1)");
    if (df < 1) throw Error(ErrorCode::Domain, "student_t_quantile: df must be >= 1");
    if (p == 0.5) return 0.0;
    if (p < 0.5) return -student_t_quantile(1.0 - p, df);
    double t = hill_two_sided(2.0 * (1.0 - p), df);
    for (int i = 0; i < 4; ++i) {
        const double step = (student_t_cdf(t, df) - p) / student_t_pdf(t, df);
        t -= step;
        if (std::fabs(step) < 1e-13 * std::max(1.0, std::fabs(t))) break;
    }
    return t;
}

std::optional<ConfidenceInterval> bootstrap_ci(std::span<const double> values, double level, int resamples,
                                               std::uint64_t seed, std::size_t min_size, unsigned workers) {
    check_level(level);
    if (resamples < 100) throw Error(ErrorCode::Config, "bootstrap needs at least 100 resamples");
    if (values.size() < std::max<std::size_t>(min_size, 1)) return std::nullopt;

    const std::size_t n = values.size();
    std::vector<double> means(static_cast<std::size_t>(resamples));
    auto run = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            SplitMix64 rng(derive_seed(seed, i));
            double sum = 0.0;
            for (std::size_t k = 0; k < n; ++k) sum += values[uniform_index(rng, n)];
            means[i] = sum / static_cast<double>(n);
        }
    };
    workers = std::max(1u, workers);
    if (workers == 1) {
        run(0, means.size());
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (means.size() + workers - 1) / workers;
        for (std::size_t start = 0; start < means.size(); start += chunk) {
            pool.emplace_back(run, start, std::min(start + chunk, means.size()));
        }
    }
    std::sort(means.begin(), means.end());
    const double alpha = 1.0 - level;
    const double point = mean_of(values);
    ConfidenceInterval ci;
    ci.low = std::min(quantile_sorted(means, alpha / 2.0), point);
    ci.high = std::max(quantile_sorted(means, 1.0 - alpha / 2.0), point);
    ci.level = level;
    ci.method = CiMethod::Bootstrap;
    ci.n = n;
    return ci;
}

std::optional<ConfidenceInterval> t_interval(std::span<const double> values, double level) {
    check_level(level);
    const std::size_t n = values.size();
    if (n < 2) return std::nullopt;
    const double mean = mean_of(values);
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    double ss = 0.0;
    if (*lo != *hi) {
        for (double v : values) ss += (v - mean) * (v - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    double half = 0.0;
    if (sd > 0.0) half = student_t_quantile(0.5 + level / 2.0, static_cast<int>(n - 1)) * sd / std::sqrt(static_cast<double>(n));
    return ConfidenceInterval{mean - half, mean + half, level, CiMethod::TTest, n};
}

std::optional<ConfidenceInterval> confidence_interval(std::span<const double> values, const CiConfig& config,
                                                      std::uint64_t stream) {
    switch (config.method) {
        case CiMethod::None: return std::nullopt;
        case CiMethod::Bootstrap:
            return bootstrap_ci(values, config.level, config.resamples, derive_seed(config.seed, stream),
                                config.min_bucket_size, config.workers);
        case CiMethod::TTest:
            if (values.size() < config.min_bucket_size) return std::nullopt;
            return t_interval(values, config.level);
    }
    return std::nullopt;
}

ConfidenceInterval clamp_interval(ConfidenceInterval ci, double lo, double hi) {
    ci.low = std::clamp(ci.low, lo, hi);
    ci.high = std::clamp(ci.high, lo, hi);
    return ci;
}

}  // namespace kgx
