#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "selfdetect/trial.hpp"

namespace selfdetect {

// Positive class is AI-generated throughout.
struct ConfusionMatrix {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;

    std::int64_t n() const { return tp + fp + tn + fn; }
    std::int64_t correct() const { return tp + tn; }

    bool operator==(const ConfusionMatrix&) const = default;
};

struct MetricsRow {
    // Batch labels, filled from the run manifest when available.
    std::string generator;
    std::string paraphrased;  // "Yes" / "No" / ""
    std::string detector;

    double accuracy = 0.0;
    double p_value = 1.0;
    double detection_rate = 0.0;
    double precision = 0.0;
    double ci_low = 0.0;
    double ci_high = 1.0;
    std::int64_t n = 0;
    std::int64_t unparseable = 0;
};

struct ConfusionTally {
    ConfusionMatrix cm;
    std::int64_t unparseable = 0;
};

// Tallies predicted-AI (SelfMatch, OriginAi) against truth. Unparseable
// verdicts are counted separately and, under CountAsError, scored as a
// misclassification of the true class; under Exclude they leave the matrix.
// Throws EmptyTrialList.
ConfusionTally confusion_from_trials(const std::vector<DetectionTrial>& trials,
                                     UnparseablePolicy policy);

// accuracy = (tp+tn)/n, detection_rate = tp/(tp+fn), precision = tp/(tp+fp)
// (both 0 on an empty denominator), exact binomial p-value for
// accuracy > 0.5, and a 95% Wilson interval around the accuracy.
MetricsRow metrics(const ConfusionMatrix& cm, std::int64_t unparseable = 0);

// Exact one-sided tail P(X >= k) for X ~ Binomial(n, 1/2). By construction
// binom_p_value(0, n) == 1 and binom_p_value(n, n) == 2^-n exactly.
double binom_p_value(std::int64_t k, std::int64_t n);

// Wilson score interval for k successes out of n at the given two-sided
// confidence level, clamped to [0, 1].
std::pair<double, double> wilson_ci(std::int64_t k, std::int64_t n, double confidence);

// True iff the (1 - alpha) Wilson interval around the row's accuracy lies
// entirely above 0.5.
bool significance_flag(const MetricsRow& row, double alpha = 0.05);

// Two-sided quantile helper exposed for tests: inverse standard normal CDF.
double normal_quantile(double p);

// Reporting rounds half to even, so exact .xx5 halves land on the even
// neighbor. `digits` in [0, 9].
double round_half_even(double value, int digits);
// Same rounding, formatted with a fixed number of decimals.
std::string format_rounded(double value, int digits);

}  // namespace selfdetect
