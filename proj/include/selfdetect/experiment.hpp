#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "selfdetect/corpus.hpp"
#include "selfdetect/providers.hpp"
#include "selfdetect/trial.hpp"

namespace selfdetect {

enum class PlanMode { SelfDetect, CrossDetect, Baseline };

std::string to_string(PlanMode mode);
PlanMode plan_mode_from_string(const std::string& s);

struct ExperimentPlan {
    PlanMode mode = PlanMode::SelfDetect;
    std::string generator;
    std::string detector;
    bool paraphrased = false;
    std::size_t n_per_class = 50;
    std::uint64_t rng_seed = 0;

    nlohmann::json to_json() const;
};

// SelfDetect requires generator == detector, CrossDetect requires them to
// differ; throws ConfigError otherwise.
void validate_plan(const ExperimentPlan& plan);

// Everything needed to rerun or audit a trial batch. The hash covers the
// deterministic fields only, so it is stable across reruns of the same
// configuration.
struct RunManifest {
    ExperimentPlan plan;
    std::vector<nlohmann::json> profiles;  // provider/detector descriptions
    std::string cache_mode;
    std::string unparseable_policy;
    nlohmann::json templates;
    std::string tool_version;
    std::string created_at;

    std::string manifest_hash() const;
    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
};

nlohmann::json templates_json(const PromptTemplates& templates);

using RecordSink = std::function<void(const EssayRecord&)>;
using TrialSink = std::function<void(const DetectionTrial&)>;

// One AI record per topic via the essay-generation prompt, identical
// template for every provider. Topics must be unique and non-empty.
// Records flow through the sink as they complete (partial-progress
// persistence); failures carry the offending topic.
std::vector<EssayRecord> generate_essays(Completer& provider, const PromptTemplates& templates,
                                         const std::vector<std::string>& topics,
                                         const RecordSink& sink = {});

// One paraphrased record per original, same topic, provenance linking back
// to the original id. Every original must come from this provider
// (MixedGenerator otherwise).
std::vector<EssayRecord> paraphrase_essays(Completer& provider, const PromptTemplates& templates,
                                           const std::vector<EssayRecord>& originals,
                                           const RecordSink& sink = {});

EssayRecord make_human_record(const std::string& id, const std::string& topic,
                              const std::string& text, const std::string& created_at);

// Runs one balanced detection batch: n AI records matching the plan's
// generator/paraphrased filter plus n Human records, submission order
// shuffled by rng_seed, one fresh stateless query per essay, results
// returned sorted by essay_id. Trials reach the sink in completion order.
std::vector<DetectionTrial> run_detection(const ExperimentPlan& plan, const Corpus& corpus,
                                          Completer& detector, const PromptTemplates& templates,
                                          const TrialSink& sink = {});

// Baseline variant: the external detector scores the essay text directly.
std::vector<DetectionTrial> run_baseline_detection(const ExperimentPlan& plan,
                                                   const Corpus& corpus,
                                                   const DetectorClient& client,
                                                   ReplayCache& cache, Transport& transport,
                                                   const RetryOptions& retry = {},
                                                   const TrialSink& sink = {});

struct CrossCell {
    ExperimentPlan plan;
    std::vector<DetectionTrial> trials;
};

// One batch per (generator, detector) pair; the diagonal runs SelfDetect,
// off-diagonal CrossDetect. Order: generators outer, detectors inner.
std::vector<CrossCell> cross_matrix(const std::vector<std::string>& generators,
                                    const std::vector<std::string>& detectors,
                                    const Corpus& corpus, ProviderHost& host,
                                    const ExperimentPlan& base_plan);

}  // namespace selfdetect
