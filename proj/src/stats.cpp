#include "selfdetect/stats.hpp"

#include <cmath>
#include <cstdio>

#include "selfdetect/errors.hpp"

namespace selfdetect {

ConfusionTally confusion_from_trials(const std::vector<DetectionTrial>& trials,
                                     UnparseablePolicy policy) {
    if (trials.empty()) throw EmptyTrialList("no trials to tally");
    ConfusionTally tally;
    for (const auto& trial : trials) {
        bool truth_ai = trial.truth == Source::Ai;
        switch (trial.verdict.kind) {
            case VerdictKind::SelfMatch:
            case VerdictKind::OriginAi:
                truth_ai ? ++tally.cm.tp : ++tally.cm.fp;
                break;
            case VerdictKind::SelfNoMatch:
            case VerdictKind::OriginHuman:
                truth_ai ? ++tally.cm.fn : ++tally.cm.tn;
                break;
            case VerdictKind::Unparseable:
                ++tally.unparseable;
                if (policy == UnparseablePolicy::CountAsError) truth_ai ? ++tally.cm.fn : ++tally.cm.fp;
                break;
        }
    }
    return tally;
}

MetricsRow metrics(const ConfusionMatrix& cm, std::int64_t unparseable) {
    if (cm.n() <= 0) throw EmptyTrialList("metrics need a non-empty confusion matrix");
    MetricsRow row;
    row.n = cm.n();
    row.unparseable = unparseable;
    row.accuracy = static_cast<double>(cm.correct()) / static_cast<double>(cm.n());
    row.detection_rate =
        (cm.tp + cm.fn) > 0 ? static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn) : 0.0;
    row.precision =
        (cm.tp + cm.fp) > 0 ? static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp) : 0.0;
    row.p_value = binom_p_value(cm.correct(), cm.n());
    auto [lo, hi] = wilson_ci(cm.correct(), cm.n(), 0.95);
    row.ci_low = lo;
    row.ci_high = hi;
    return row;
}

double binom_p_value(std::int64_t k, std::int64_t n) {
    if (n < 1) throw ConfigError("binom_p_value needs n >= 1");
    if (k < 0 || k > n) throw ConfigError("binom_p_value needs 0 <= k <= n");
    if (k == 0) return 1.0;
    // Terms t_j = C(n, j) * 2^-n summed smallest-first on the shorter side.
    if (2 * k > n) {
        double term = std::ldexp(1.0, -static_cast<int>(n));  // j = n
        double sum = term;
        for (std::int64_t j = n; j > k; --j) {
            term = term * static_cast<double>(j) / static_cast<double>(n - j + 1);
            sum += term;
        }
        return std::min(sum, 1.0);
    }
    // Complement of the lower tail P(X <= k-1), summed upward from j = 0.
    double term = std::ldexp(1.0, -static_cast<int>(n));  // j = 0
    double sum = term;
    for (std::int64_t j = 0; j < k - 1; ++j) {
        term = term * static_cast<double>(n - j) / static_cast<double>(j + 1);
        sum += term;
    }
    return std::max(1.0 - sum, 0.0);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("normal quantile needs p in (0, 1)");
    // Acklam's rational approximation, then one Halley step against erfc.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;

    double x;
    if (p < p_low) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
    return x;
}

std::pair<double, double> wilson_ci(std::int64_t k, std::int64_t n, double confidence) {
    if (n < 1) throw ConfigError("wilson_ci needs n >= 1");
    if (k < 0 || k > n) throw ConfigError("wilson_ci needs 0 <= k <= n");
    if (!(confidence > 0.0 && confidence < 1.0))
        throw ConfigError("wilson_ci needs confidence in (0, 1)");

    const double z = normal_quantile(0.5 + confidence / 2.0);
    const double nn = static_cast<double>(n);
    const double p_hat = static_cast<double>(k) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (p_hat + z2 / (2.0 * nn)) / denom;
    const double half_width =
        (z / denom) * std::sqrt(p_hat * (1.0 - p_hat) / nn + z2 / (4.0 * nn * nn));
    double lo = center - half_width;
    double hi = center + half_width;
    if (k == 0) lo = 0.0;
    if (k == n) hi = 1.0;
    return {std::max(0.0, lo), std::min(1.0, hi)};
}

bool significance_flag(const MetricsRow& row, double alpha) {
    std::int64_t k = std::llround(row.accuracy * static_cast<double>(row.n));
    auto [lo, unused] = wilson_ci(k, row.n, 1.0 - alpha);
    return lo > 0.5;
}

double round_half_even(double value, int digits) {
    if (digits < 0 || digits > 9) throw ConfigError("round_half_even digits out of range");
    double scale = std::pow(10.0, digits);
    // nearbyint under the default FE_TONEAREST mode resolves exact halves to
    // the even neighbor.
    return std::nearbyint(value * scale) / scale;
}

std::string format_rounded(double value, int digits) {
    double scale = std::pow(10.0, digits);
    long long scaled = static_cast<long long>(std::nearbyint(value * scale));
    bool negative = scaled < 0;
    unsigned long long magnitude =
        negative ? static_cast<unsigned long long>(-scaled) : static_cast<unsigned long long>(scaled);
    unsigned long long unit = static_cast<unsigned long long>(scale);
    char buf[64];
    if (digits == 0) {
        std::snprintf(buf, sizeof(buf), "%s%llu", negative ? "-" : "", magnitude);
    } else {
        std::snprintf(buf, sizeof(buf), "%s%llu.%0*llu", negative ? "-" : "", magnitude / unit,
                      digits, magnitude % unit);
    }
    return buf;
}

}  // namespace selfdetect
