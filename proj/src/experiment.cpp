#include "selfdetect/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "selfdetect/errors.hpp"
#include "selfdetect/sha256.hpp"
#include "selfdetect/util.hpp"
#include "selfdetect/version.hpp"

namespace selfdetect {

using nlohmann::json;

std::string to_string(PlanMode mode) {
    switch (mode) {
        case PlanMode::SelfDetect: return "self";
        case PlanMode::CrossDetect: return "cross";
        case PlanMode::Baseline: return "baseline";
    }
    return "self";
}

PlanMode plan_mode_from_string(const std::string& s) {
    if (s == "self") return PlanMode::SelfDetect;
    if (s == "cross") return PlanMode::CrossDetect;
    if (s == "baseline") return PlanMode::Baseline;
    throw ConfigError("unknown plan mode: " + s);
}

json ExperimentPlan::to_json() const {
    return json{{"mode", to_string(mode)},     {"generator", generator},
                {"detector", detector},        {"paraphrased", paraphrased},
                {"n_per_class", n_per_class},  {"rng_seed", rng_seed}};
}

void validate_plan(const ExperimentPlan& plan) {
    if (plan.n_per_class < 1) throw ConfigError("n_per_class must be >= 1");
    if (plan.generator.empty()) throw ConfigError("plan needs a generator");
    if (plan.detector.empty()) throw ConfigError("plan needs a detector");
    if (plan.mode == PlanMode::SelfDetect && plan.generator != plan.detector)
        throw ConfigError("self-detection requires generator == detector (got '" + plan.generator +
                          "' vs '" + plan.detector + "')");
    if (plan.mode == PlanMode::CrossDetect && plan.generator == plan.detector)
        throw ConfigError("cross-detection requires generator != detector");
}

json templates_json(const PromptTemplates& templates) {
    return json{{"essay_generation", templates.essay_generation},
                {"paraphrase", templates.paraphrase},
                {"self_detect", templates.self_detect},
                {"cross_detect", templates.cross_detect}};
}

std::string RunManifest::manifest_hash() const {
    json hashed{{"plan", plan.to_json()},
                {"profiles", profiles},
                {"cache_mode", cache_mode},
                {"unparseable_policy", unparseable_policy},
                {"templates", templates},
                {"tool_version", tool_version}};
    return sha256_hex(hashed.dump());
}

json RunManifest::to_json() const {
    return json{{"plan", plan.to_json()},
                {"profiles", profiles},
                {"cache_mode", cache_mode},
                {"unparseable_policy", unparseable_policy},
                {"templates", templates},
                {"tool_version", tool_version},
                {"created_at", created_at},
                {"manifest_hash", manifest_hash()}};
}

RunManifest RunManifest::from_json(const json& j) {
    RunManifest m;
    try {
        const json& p = j.at("plan");
        m.plan.mode = plan_mode_from_string(p.at("mode").get<std::string>());
        m.plan.generator = p.at("generator").get<std::string>();
        m.plan.detector = p.at("detector").get<std::string>();
        m.plan.paraphrased = p.at("paraphrased").get<bool>();
        m.plan.n_per_class = p.at("n_per_class").get<std::size_t>();
        m.plan.rng_seed = p.at("rng_seed").get<std::uint64_t>();
        m.profiles = j.at("profiles").get<std::vector<json>>();
        m.cache_mode = j.at("cache_mode").get<std::string>();
        m.unparseable_policy = j.at("unparseable_policy").get<std::string>();
        m.templates = j.at("templates");
        m.tool_version = j.at("tool_version").get<std::string>();
        m.created_at = j.value("created_at", std::string{});
    } catch (const json::exception& e) {
        throw SchemaViolation(std::string("malformed manifest: ") + e.what());
    }
    return m;
}

namespace {

[[noreturn]] void rethrow_with_context(const std::string& context) {
    std::string cause_text = "unknown error";
    try {
        throw;
    } catch (const std::exception& e) {
        cause_text = e.what();
    } catch (...) {
    }
    throw StepFailure(context, std::current_exception(), cause_text);
}

// Stable id for a generated essay: independent of submission order so
// resumed runs produce the same ids as uninterrupted ones. The hash suffix
// separates topics whose slugs collide.
std::string essay_id(const std::string& provider, const std::string& topic) {
    return "ai-" + provider + "-" + slugify(topic) + "-" + sha256_hex(topic).substr(0, 8);
}

EssayRecord build_ai_record(const std::string& id, const std::string& topic,
                            const ProviderProfile& profile, bool paraphrased,
                            const Completion& completion) {
    if (completion.text.empty())
        throw SchemaViolation("provider '" + profile.name + "' returned an empty completion");
    EssayRecord rec;
    rec.id = id;
    rec.topic = topic;
    rec.source = Source::Ai;
    rec.generator = profile.name;
    rec.paraphrased = paraphrased;
    rec.text = completion.text;
    rec.stats = compute_text_stats(rec.text);
    rec.created_at = completion.recorded_at;
    rec.provenance["cache_key"] = completion.cache_key;
    rec.provenance["profile_hash"] = sha256_hex(profile_json(profile).dump());
    return rec;
}

}  // namespace

std::vector<EssayRecord> generate_essays(Completer& provider, const PromptTemplates& templates,
                                         const std::vector<std::string>& topics,
                                         const RecordSink& sink) {
    if (topics.empty()) throw ConfigError("no topics given");
    std::set<std::string> seen;
    for (const auto& topic : topics) {
        if (topic.empty()) throw ConfigError("empty topic in topic list");
        if (!seen.insert(topic).second) throw ConfigError("duplicate topic: '" + topic + "'");
    }

    std::vector<EssayRecord> records;
    records.reserve(topics.size());
    for (const std::string& topic : topics) {
        try {
            std::string prompt = render_prompt(templates, PromptKind::EssayGeneration, topic);
            Completion completion = provider.complete(prompt);
            EssayRecord rec = build_ai_record(essay_id(provider.profile().name, topic), topic,
                                              provider.profile(), false, completion);
            rec.provenance["prompt_kind"] = "essay_generation";
            if (sink) sink(rec);
            records.push_back(std::move(rec));
        } catch (...) {
            rethrow_with_context("essay generation failed at topic '" + topic + "'");
        }
    }
    return records;
}

std::vector<EssayRecord> paraphrase_essays(Completer& provider, const PromptTemplates& templates,
                                           const std::vector<EssayRecord>& originals,
                                           const RecordSink& sink) {
    for (const auto& original : originals) {
        if (original.source != Source::Ai || !original.generator ||
            *original.generator != provider.profile().name) {
            throw MixedGenerator("record '" + original.id + "' was not generated by provider '" +
                                 provider.profile().name + "'");
        }
    }
    std::vector<EssayRecord> records;
    records.reserve(originals.size());
    for (const auto& original : originals) {
        try {
            std::string prompt = render_prompt(templates, PromptKind::Paraphrase, original.text);
            Completion completion = provider.complete(prompt);
            EssayRecord rec = build_ai_record(original.id + "-para", original.topic,
                                              provider.profile(), true, completion);
            rec.provenance["prompt_kind"] = "paraphrase";
            rec.provenance["original_id"] = original.id;
            if (sink) sink(rec);
            records.push_back(std::move(rec));
        } catch (...) {
            rethrow_with_context("paraphrase failed for record '" + original.id + "'");
        }
    }
    return records;
}

EssayRecord make_human_record(const std::string& id, const std::string& topic,
                              const std::string& text, const std::string& created_at) {
    EssayRecord rec;
    rec.id = id;
    rec.topic = topic;
    rec.source = Source::Human;
    rec.paraphrased = false;
    rec.text = text;
    rec.stats = compute_text_stats(text);
    rec.created_at = created_at;
    validate_record(rec);
    return rec;
}

namespace {

// Shared parallel driver: workers pull essay indices, produce trials, and
// the batch is returned sorted by essay_id regardless of completion order.
std::vector<DetectionTrial> run_batch(
    const ExperimentPlan& plan, const Corpus& corpus, int parallelism,
    const std::function<DetectionTrial(const EssayRecord&)>& one_trial, const TrialSink& sink) {
    validate_plan(plan);
    std::vector<EssayRecord> selected =
        select_balanced(corpus, plan.generator, plan.paraphrased, plan.n_per_class);
    std::mt19937_64 shuffle_rng(plan.rng_seed);
    std::shuffle(selected.begin(), selected.end(), shuffle_rng);

    std::vector<DetectionTrial> trials;
    trials.reserve(selected.size());
    std::mutex mutex;
    std::atomic<std::size_t> next_index{0};
    std::atomic<bool> abort{false};
    std::exception_ptr first_error;
    std::size_t first_error_index = selected.size();

    auto worker = [&]() {
        while (!abort.load()) {
            std::size_t index = next_index.fetch_add(1);
            if (index >= selected.size()) return;
            const EssayRecord& rec = selected[index];
            try {
                DetectionTrial trial = one_trial(rec);
                std::lock_guard lock(mutex);
                if (sink) sink(trial);
                trials.push_back(std::move(trial));
            } catch (...) {
                std::lock_guard lock(mutex);
                if (index < first_error_index) {
                    first_error_index = index;
                    first_error = std::current_exception();
                }
                abort.store(true);
                return;
            }
        }
    };

    std::size_t n_workers = std::min<std::size_t>(std::max(parallelism, 1), selected.size());
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    if (first_error) {
        try {
            std::rethrow_exception(first_error);
        } catch (...) {
            rethrow_with_context("detection batch halted at essay '" +
                                 selected[first_error_index].id + "'");
        }
    }

    std::sort(trials.begin(), trials.end(),
              [](const DetectionTrial& a, const DetectionTrial& b) { return a.essay_id < b.essay_id; });
    return trials;
}

}  // namespace

std::vector<DetectionTrial> run_detection(const ExperimentPlan& plan, const Corpus& corpus,
                                          Completer& detector, const PromptTemplates& templates,
                                          const TrialSink& sink) {
    if (plan.mode == PlanMode::Baseline)
        throw ConfigError("baseline plans go through run_baseline_detection");
    PromptKind kind =
        plan.mode == PlanMode::SelfDetect ? PromptKind::SelfDetect : PromptKind::CrossDetect;

    auto one_trial = [&](const EssayRecord& rec) {
        std::string prompt = render_prompt(templates, kind, rec.text);
        Completion completion = detector.complete(prompt);
        DetectionTrial trial;
        trial.essay_id = rec.id;
        trial.truth = rec.source;
        trial.detector = detector.profile().name;
        trial.prompt_hash = sha256_hex(prompt);
        trial.verdict = (kind == PromptKind::SelfDetect) ? parse_self_response(completion.text)
                                                         : parse_origin_response(completion.text);
        return trial;
    };
    return run_batch(plan, corpus, detector.profile().parallelism, one_trial, sink);
}

std::vector<DetectionTrial> run_baseline_detection(const ExperimentPlan& plan,
                                                   const Corpus& corpus,
                                                   const DetectorClient& client,
                                                   ReplayCache& cache, Transport& transport,
                                                   const RetryOptions& retry,
                                                   const TrialSink& sink) {
    if (plan.mode != PlanMode::Baseline)
        throw ConfigError("run_baseline_detection needs a baseline plan");

    auto one_trial = [&](const EssayRecord& rec) {
        BaselineOutcome outcome = baseline_detect(client, cache, transport, rec.text, retry);
        DetectionTrial trial;
        trial.essay_id = rec.id;
        trial.truth = rec.source;
        trial.detector = client.name;
        trial.prompt_hash = sha256_hex(rec.text);
        trial.verdict = outcome.verdict;
        return trial;
    };
    return run_batch(plan, corpus, client.parallelism, one_trial, sink);
}

std::vector<CrossCell> cross_matrix(const std::vector<std::string>& generators,
                                    const std::vector<std::string>& detectors,
                                    const Corpus& corpus, ProviderHost& host,
                                    const ExperimentPlan& base_plan) {
    for (const auto& name : generators) host.profile(name);  // resolve before any call
    for (const auto& name : detectors) host.profile(name);

    std::vector<CrossCell> cells;
    cells.reserve(generators.size() * detectors.size());
    for (const auto& generator : generators) {
        for (const auto& detector : detectors) {
            ExperimentPlan plan = base_plan;
            plan.generator = generator;
            plan.detector = detector;
            plan.mode = (generator == detector) ? PlanMode::SelfDetect : PlanMode::CrossDetect;
            CrossCell cell;
            cell.plan = plan;
            cell.trials =
                run_detection(plan, corpus, host.completer(detector), host.templates());
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

}  // namespace selfdetect
