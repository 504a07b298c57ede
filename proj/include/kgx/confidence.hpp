#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace kgx {

enum class CiMethod { None, Bootstrap, TTest };

const char* ci_method_name(CiMethod m);
std::optional<CiMethod> parse_ci_method(std::string_view s);

struct ConfidenceInterval {
    double low = 0.0;
    double high = 0.0;
    double level = 0.95;
    CiMethod method = CiMethod::Bootstrap;
    std::size_t n = 0;

    friend bool operator==(const ConfidenceInterval&, const ConfidenceInterval&) = default;
};

struct CiConfig {
    CiMethod method = CiMethod::Bootstrap;
    double level = 0.95;
    int resamples = 1000;
    std::uint64_t seed = 0;
    std::size_t min_bucket_size = 5;
    unsigned workers = 1;  // results do not depend on this
};

// Percentile bootstrap of the sample mean. Resample i draws from its own
// substream derived from (seed, i), so the interval is independent of the
// worker count. The interval is widened, if needed, to contain the sample
// mean. Returns nullopt for samples smaller than `min_size`.
std::optional<ConfidenceInterval> bootstrap_ci(std::span<const double> values, double level, int resamples,
                                               std::uint64_t seed, std::size_t min_size = 5, unsigned workers = 1);

// mean +/- t_{(1+level)/2, n-1} * s / sqrt(n). Returns nullopt for n < 2.
std::optional<ConfidenceInterval> t_interval(std::span<const double> values, double level);

// Dispatches on config.method; None yields nullopt.
std::optional<ConfidenceInterval> confidence_interval(std::span<const double> values, const CiConfig& config,
                                                      std::uint64_t stream = 0);

ConfidenceInterval clamp_interval(ConfidenceInterval ci, double lo, double hi);

// Quantile function of Student's t with integer degrees of freedom.
// Hill's approximation (CACM Algorithm 396) refined by Newton steps on the
// closed-form integer-df CDF; absolute error well below 1e-6.
double student_t_quantile(double p, int df);
double student_t_cdf(double t, int df);
double normal_quantile(double p);

}  // namespace kgx
