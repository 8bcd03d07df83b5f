#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "selfdetect/corpus.hpp"
#include "selfdetect/experiment.hpp"
#include "selfdetect/stats.hpp"

namespace selfdetect {

// One evaluated trial batch, traceable to its trial file and manifest.
struct EvaluatedBatch {
    MetricsRow row;
    std::string trial_file;
    std::string manifest_hash;
};

// Loads the trials plus the `<file>.manifest.json` next to them, tallies
// the confusion matrix under the manifest's unparseable policy, and labels
// the row from the plan.
EvaluatedBatch evaluate_trials_file(const std::filesystem::path& trials_path);

// The manifest path convention used by detect/evaluate.
std::filesystem::path manifest_path_for(const std::filesystem::path& trials_path);

// Metrics CSV column order:
// generator,paraphrased,detector,accuracy,p_value,detection_rate,precision
// plus ci_low,ci_high,n,unparseable trailing. Metric columns are rounded to
// two decimals, intervals to four.
std::string metrics_csv(const std::vector<EvaluatedBatch>& batches);

// Full-precision report document: rows, figure series, and manifest
// references.
std::string report_json(const std::vector<EvaluatedBatch>& batches);

// Fixed-width table render of the metric columns.
std::string render_table(const std::vector<EvaluatedBatch>& batches);

// Plot-ready series: label,accuracy,ci_low,ci_high.
std::string figure_csv(const std::vector<EvaluatedBatch>& batches);

// Group-statistics CSV: one row per (source, model, paraphrased) group in
// first-appearance order, Human last.
std::string group_stats_csv(const Corpus& corpus);

}  // namespace selfdetect
