#include "selfdetect/report.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "selfdetect/errors.hpp"

namespace selfdetect {

using nlohmann::json;

std::filesystem::path manifest_path_for(const std::filesystem::path& trials_path) {
    std::filesystem::path p = trials_path;
    p += ".manifest.json";
    return p;
}

EvaluatedBatch evaluate_trials_file(const std::filesystem::path& trials_path) {
    std::vector<DetectionTrial> trials = load_trials(trials_path);
    if (trials.empty()) throw EmptyTrialList("no trials in file: " + trials_path.string());

    std::filesystem::path mpath = manifest_path_for(trials_path);
    std::ifstream min(mpath);
    if (!min) throw SchemaViolation("missing manifest next to trials: " + mpath.string());
    json mj;
    try {
        min >> mj;
    } catch (const json::exception& e) {
        throw SchemaViolation(mpath.string() + ": invalid JSON: " + e.what());
    }
    RunManifest manifest = RunManifest::from_json(mj);

    ConfusionTally tally = confusion_from_trials(
        trials, unparseable_policy_from_string(manifest.unparseable_policy));
    EvaluatedBatch batch;
    batch.row = metrics(tally.cm, tally.unparseable);
    batch.row.generator = manifest.plan.generator;
    batch.row.paraphrased = manifest.plan.paraphrased ? "Yes" : "No";
    batch.row.detector = manifest.plan.mode == PlanMode::SelfDetect ? "Self-Detection"
                                                                    : manifest.plan.detector;
    batch.trial_file = trials_path.string();
    batch.manifest_hash = manifest.manifest_hash();
    return batch;
}

namespace {

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\n") == std::string::npos) return value;
    std::string quoted = "\"";
    for (char c : value) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    return quoted + "\"";
}

std::string row_label(const MetricsRow& row) {
    std::string label = row.generator;
    if (row.paraphrased == "Yes") label += "/paraphrased";
    label += "/" + row.detector;
    return label;
}

}  // namespace

std::string metrics_csv(const std::vector<EvaluatedBatch>& batches) {
    std::ostringstream out;
    out << "generator,paraphrased,detector,accuracy,p_value,detection_rate,precision,"
           "ci_low,ci_high,n,unparseable_count\n";
    for (const auto& batch : batches) {
        const MetricsRow& r = batch.row;
        out << csv_field(r.generator) << ',' << csv_field(r.paraphrased) << ','
            << csv_field(r.detector) << ',' << format_rounded(r.accuracy, 2) << ','
            << format_rounded(r.p_value, 2) << ',' << format_rounded(r.detection_rate, 2) << ','
            << format_rounded(r.precision, 2) << ',' << format_rounded(r.ci_low, 4) << ','
            << format_rounded(r.ci_high, 4) << ',' << r.n << ',' << r.unparseable << '\n';
    }
    return std::move(out).str();
}

std::string report_json(const std::vector<EvaluatedBatch>& batches) {
    json rows = json::array();
    json series = json::array();
    for (const auto& batch : batches) {
        const MetricsRow& r = batch.row;
        rows.push_back(json{{"generator", r.generator},
                            {"paraphrased", r.paraphrased},
                            {"detector", r.detector},
                            {"accuracy", r.accuracy},
                            {"p_value", r.p_value},
                            {"detection_rate", r.detection_rate},
                            {"precision", r.precision},
                            {"ci_low", r.ci_low},
                            {"ci_high", r.ci_high},
                            {"n", r.n},
                            {"unparseable", r.unparseable},
                            {"significant", significance_flag(r)},
                            {"trial_file", batch.trial_file},
                            {"manifest_hash", batch.manifest_hash}});
        series.push_back(json{{"label", row_label(r)},
                              {"accuracy", r.accuracy},
                              {"ci_low", r.ci_low},
                              {"ci_high", r.ci_high}});
    }
    return json{{"rows", rows}, {"figure_series", series}}.dump(2) + "\n";
}

std::string render_table(const std::vector<EvaluatedBatch>& batches) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-12s %-11s %-16s %8s %8s %14s %9s\n", "Generator",
                  "Paraphrased", "Detector", "Accuracy", "PValue", "DetectionRate", "Precision");
    out << line;
    out << std::string(82, '-') << '\n';
    for (const auto& batch : batches) {
        const MetricsRow& r = batch.row;
        std::snprintf(line, sizeof(line), "%-12s %-11s %-16s %8s %8s %14s %9s\n",
                      r.generator.c_str(), r.paraphrased.c_str(), r.detector.c_str(),
                      format_rounded(r.accuracy, 2).c_str(), format_rounded(r.p_value, 2).c_str(),
                      format_rounded(r.detection_rate, 2).c_str(),
                      format_rounded(r.precision, 2).c_str());
        out << line;
    }
    return std::move(out).str();
}

std::string figure_csv(const std::vector<EvaluatedBatch>& batches) {
    std::ostringstream out;
    out << "label,accuracy,ci_low,ci_high\n";
    for (const auto& batch : batches) {
        const MetricsRow& r = batch.row;
        out << csv_field(row_label(r)) << ',' << format_rounded(r.accuracy, 4) << ','
            << format_rounded(r.ci_low, 4) << ',' << format_rounded(r.ci_high, 4) << '\n';
    }
    return std::move(out).str();
}

std::string group_stats_csv(const Corpus& corpus) {
    if (corpus.records.empty()) throw EmptyGroup("corpus has no records");

    struct GroupKey {
        std::string model;
        bool paraphrased;
    };
    std::vector<GroupKey> ai_groups;
    bool any_human = false;
    for (const auto& rec : corpus.records) {
        if (rec.source == Source::Human) {
            any_human = true;
            continue;
        }
        GroupKey key{*rec.generator, rec.paraphrased};
        bool known = std::any_of(ai_groups.begin(), ai_groups.end(), [&](const GroupKey& g) {
            return g.model == key.model && g.paraphrased == key.paraphrased;
        });
        if (!known) ai_groups.push_back(key);
    }

    std::ostringstream out;
    out << "source,model,paraphrased,n,word_count,sentence_count,words_per_sentence,"
           "newline_count\n";
    auto emit = [&](const std::string& source, const std::string& model,
                    const std::string& paraphrased, const GroupStats& g) {
        out << source << ',' << csv_field(model) << ',' << paraphrased << ',' << g.n << ','
            << format_rounded(g.word_count, 2) << ',' << format_rounded(g.sentence_count, 2) << ','
            << format_rounded(g.words_per_sentence, 2) << ',' << format_rounded(g.newline_count, 2)
            << '\n';
    };
    for (const auto& key : ai_groups) {
        GroupFilter filter{Source::Ai, key.model, key.paraphrased};
        emit("AI", key.model, key.paraphrased ? "Yes" : "No", group_stats(corpus, filter));
    }
    if (any_human) {
        GroupFilter filter{Source::Human, std::nullopt, std::nullopt};
        emit("Human", "None", "", group_stats(corpus, filter));
    }
    return std::move(out).str();
}

}  // namespace selfdetect
