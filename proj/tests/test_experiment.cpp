#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <set>

#include "selfdetect/errors.hpp"
#include "selfdetect/experiment.hpp"
#include "selfdetect/stats.hpp"

using namespace selfdetect;
namespace fs = std::filesystem;

namespace {

// Minimal in-process completer for driving the experiment layer directly.
class FnCompleter : public Completer {
   public:
    FnCompleter(std::string name, std::function<std::string(const std::string&)> fn,
                int parallelism = 2)
        : fn_(std::move(fn)) {
        profile_.name = std::move(name);
        profile_.request_shape = RequestShape::MockEcho;
        profile_.parallelism = parallelism;
    }
    const ProviderProfile& profile() const override { return profile_; }
    Completion complete(const std::string& prompt) override {
        return Completion{fn_(prompt), "2026-01-01T00:00:00Z", "fn-key"};
    }

   private:
    ProviderProfile profile_;
    std::function<std::string(const std::string&)> fn_;
};

Corpus balanced_corpus(const std::string& generator, std::size_t n, bool paraphrased = false) {
    Corpus corpus;
    for (std::size_t i = 0; i < n; ++i) {
        EssayRecord rec;
        rec.id = "ai-" + std::to_string(100 + i);
        rec.topic = "topic-" + std::to_string(i);
        rec.source = Source::Ai;
        rec.generator = generator;
        rec.paraphrased = paraphrased;
        rec.text = "machine text [sig:" + generator + "] number " + std::to_string(i) + ".";
        rec.stats = compute_text_stats(rec.text);
        rec.created_at = "2026-01-01T00:00:00Z";
        corpus.records.push_back(std::move(rec));
    }
    for (std::size_t i = 0; i < n; ++i) {
        EssayRecord rec;
        rec.id = "human-" + std::to_string(100 + i);
        rec.topic = "topic-" + std::to_string(i);
        rec.source = Source::Human;
        rec.text = "people wrote this text number " + std::to_string(i) + ".";
        rec.stats = compute_text_stats(rec.text);
        rec.created_at = "2026-01-01T00:00:00Z";
        corpus.records.push_back(std::move(rec));
    }
    return corpus;
}

// Answers self-detection prompts with ground truth read from the signature.
std::string truth_echo(const std::string& prompt) {
    return prompt.find("[sig:") != std::string::npos ? "TRUE" : "FALSE";
}

ExperimentPlan self_plan(const std::string& name, std::size_t n, std::uint64_t seed = 9) {
    ExperimentPlan plan;
    plan.mode = PlanMode::SelfDetect;
    plan.generator = name;
    plan.detector = name;
    plan.paraphrased = false;
    plan.n_per_class = n;
    plan.rng_seed = seed;
    return plan;
}

}  // namespace

TEST_CASE("generate_essays produces one AI record per topic") {
    FnCompleter provider("gen", [](const std::string& prompt) { return "Essay for: " + prompt; });
    auto templates = PromptTemplates::defaults();
    auto records = generate_essays(provider, templates, {"Alpha", "Beta", "Gamma"});
    REQUIRE(records.size() == 3);
    std::set<std::string> ids;
    for (const auto& rec : records) {
        CHECK(rec.source == Source::Ai);
        CHECK(*rec.generator == "gen");
        CHECK_FALSE(rec.paraphrased);
        CHECK(rec.stats == compute_text_stats(rec.text));
        ids.insert(rec.id);
    }
    CHECK(ids.size() == 3);
}

TEST_CASE("single topic yields the provider response verbatim") {
    FnCompleter provider("gen", [](const std::string&) { return "verbatim body"; });
    auto records = generate_essays(provider, PromptTemplates::defaults(), {"Only"});
    REQUIRE(records.size() == 1);
    CHECK(records[0].text == "verbatim body");
    CHECK(records[0].topic == "Only");
}

TEST_CASE("duplicate topics are rejected before any call") {
    int calls = 0;
    FnCompleter provider("gen", [&](const std::string&) {
        ++calls;
        return "x";
    });
    CHECK_THROWS_AS(
        generate_essays(provider, PromptTemplates::defaults(), {"Same", "Same"}), ConfigError);
    CHECK(calls == 0);
}

TEST_CASE("generation failures carry the topic and keep prior records flowing") {
    FnCompleter provider("gen", [](const std::string& prompt) -> std::string {
        if (prompt.find("Poison") != std::string::npos)
            throw TransportFailure("provider went away");
        return "fine";
    });
    std::vector<std::string> seen;
    try {
        generate_essays(provider, PromptTemplates::defaults(), {"One", "Two", "Poison", "Four"},
                        [&](const EssayRecord& rec) { seen.push_back(rec.topic); });
        FAIL("expected StepFailure");
    } catch (const StepFailure& e) {
        CHECK(std::string(e.what()).find("Poison") != std::string::npos);
    }
    CHECK(seen == std::vector<std::string>{"One", "Two"});
}

TEST_CASE("paraphrase_essays links provenance and flags the paraphrase") {
    FnCompleter provider("gen", [](const std::string& prompt) { return "rewritten|" + prompt; });
    auto templates = PromptTemplates::defaults();
    auto originals = generate_essays(provider, templates, {"Alpha", "Beta"});
    auto rewritten = paraphrase_essays(provider, templates, originals);
    REQUIRE(rewritten.size() == 2);
    for (std::size_t i = 0; i < rewritten.size(); ++i) {
        CHECK(rewritten[i].paraphrased);
        CHECK(rewritten[i].topic == originals[i].topic);
        CHECK(rewritten[i].provenance.at("original_id") == originals[i].id);
        CHECK(rewritten[i].id != originals[i].id);
    }
    CHECK(paraphrase_essays(provider, templates, {}).empty());
}

TEST_CASE("paraphrasing another provider's record is MixedGenerator") {
    FnCompleter bard("bard", [](const std::string&) { return "b"; });
    FnCompleter chatgpt("chatgpt", [](const std::string&) { return "c"; });
    auto originals = generate_essays(bard, PromptTemplates::defaults(), {"Alpha"});
    CHECK_THROWS_AS(paraphrase_essays(chatgpt, PromptTemplates::defaults(), originals),
                    MixedGenerator);
}

TEST_CASE("run_detection returns a balanced batch sorted by essay id") {
    Corpus corpus = balanced_corpus("gen", 12);
    FnCompleter detector("gen", truth_echo);
    auto trials = run_detection(self_plan("gen", 12), corpus, detector,
                                PromptTemplates::defaults());
    REQUIRE(trials.size() == 24);
    for (std::size_t i = 1; i < trials.size(); ++i) CHECK(trials[i - 1].essay_id < trials[i].essay_id);
    std::size_t ai = 0;
    for (const auto& t : trials)
        if (t.truth == Source::Ai) ++ai;
    CHECK(ai == 12);
    // every id resolves in the corpus and truth matches the record
    for (const auto& t : trials) {
        auto it = std::find_if(corpus.records.begin(), corpus.records.end(),
                               [&](const EssayRecord& r) { return r.id == t.essay_id; });
        REQUIRE(it != corpus.records.end());
        CHECK(it->source == t.truth);
    }
}

TEST_CASE("a ground-truth detector yields a perfect confusion matrix") {
    Corpus corpus = balanced_corpus("gen", 10);
    FnCompleter detector("gen", truth_echo);
    auto trials = run_detection(self_plan("gen", 10), corpus, detector,
                                PromptTemplates::defaults());
    auto tally = confusion_from_trials(trials, UnparseablePolicy::CountAsError);
    CHECK(tally.cm == ConfusionMatrix{10, 0, 10, 0});
}

TEST_CASE("an always-TRUE detector predicts AI for every trial") {
    Corpus corpus = balanced_corpus("gen", 8);
    FnCompleter detector("gen", [](const std::string&) { return "TRUE"; });
    auto trials = run_detection(self_plan("gen", 8), corpus, detector,
                                PromptTemplates::defaults());
    auto tally = confusion_from_trials(trials, UnparseablePolicy::CountAsError);
    CHECK(tally.cm.tp == 8);
    CHECK(tally.cm.fp == 8);
    CHECK(tally.cm.tn == 0);
    CHECK(tally.cm.fn == 0);
}

TEST_CASE("unparseable responses are conserved, not dropped") {
    Corpus corpus = balanced_corpus("gen", 6);
    FnCompleter detector("gen", [](const std::string&) { return "no verdict here"; });
    auto trials = run_detection(self_plan("gen", 6), corpus, detector,
                                PromptTemplates::defaults());
    REQUIRE(trials.size() == 12);
    auto tally = confusion_from_trials(trials, UnparseablePolicy::CountAsError);
    CHECK(tally.unparseable == 12);
    CHECK(tally.cm.n() == 12);  // count-as-error keeps them in the matrix
    auto excluded = confusion_from_trials(trials, UnparseablePolicy::Exclude);
    CHECK(excluded.unparseable + excluded.cm.n() == 12);
}

TEST_CASE("self and cross modes parse with the right verdict family") {
    Corpus corpus = balanced_corpus("gen", 4);
    FnCompleter self_detector("gen", [](const std::string&) { return "TRUE"; });
    auto self_trials = run_detection(self_plan("gen", 4), corpus, self_detector,
                                     PromptTemplates::defaults());
    for (const auto& t : self_trials)
        CHECK((t.verdict.kind == VerdictKind::SelfMatch ||
               t.verdict.kind == VerdictKind::SelfNoMatch));

    ExperimentPlan cross = self_plan("gen", 4);
    cross.mode = PlanMode::CrossDetect;
    cross.detector = "other";
    FnCompleter cross_detector("other", [](const std::string&) { return "AI"; });
    auto cross_trials =
        run_detection(cross, corpus, cross_detector, PromptTemplates::defaults());
    for (const auto& t : cross_trials)
        CHECK((t.verdict.kind == VerdictKind::OriginAi ||
               t.verdict.kind == VerdictKind::OriginHuman));
}

TEST_CASE("a mid-batch detector failure halts cleanly with the essay named") {
    Corpus corpus = balanced_corpus("gen", 10);
    FnCompleter detector("gen", [](const std::string& prompt) -> std::string {
        if (prompt.find("number 7") != std::string::npos)
            throw TransportFailure("detector offline");
        return "TRUE";
    });
    std::vector<DetectionTrial> partial;
    try {
        run_detection(self_plan("gen", 10), corpus, detector, PromptTemplates::defaults(),
                      [&](const DetectionTrial& t) { partial.push_back(t); });
        FAIL("expected StepFailure");
    } catch (const StepFailure& e) {
        CHECK(std::string(e.what()).find("detection batch halted at essay") !=
              std::string::npos);
        CHECK(std::string(e.what()).find("detector offline") != std::string::npos);
    }
    // some trials may have completed before the halt; none after
    CHECK(partial.size() < 20);
}

TEST_CASE("plan invariants are enforced") {
    ExperimentPlan bad_self;
    bad_self.mode = PlanMode::SelfDetect;
    bad_self.generator = "a";
    bad_self.detector = "b";
    CHECK_THROWS_AS(validate_plan(bad_self), ConfigError);

    ExperimentPlan bad_cross;
    bad_cross.mode = PlanMode::CrossDetect;
    bad_cross.generator = "a";
    bad_cross.detector = "a";
    CHECK_THROWS_AS(validate_plan(bad_cross), ConfigError);
}

TEST_CASE("detection reruns are byte-stable for a fixed seed") {
    Corpus corpus = balanced_corpus("gen", 9);
    FnCompleter detector("gen", truth_echo);
    auto first = run_detection(self_plan("gen", 9, 1234), corpus, detector,
                               PromptTemplates::defaults());
    auto second = run_detection(self_plan("gen", 9, 1234), corpus, detector,
                                PromptTemplates::defaults());
    CHECK(first == second);
}

TEST_CASE("results are independent of the parallelism bound") {
    Corpus corpus = balanced_corpus("gen", 15);
    std::vector<std::vector<DetectionTrial>> results;
    for (int parallelism : {1, 2, 8}) {
        FnCompleter detector("gen", truth_echo, parallelism);
        results.push_back(run_detection(self_plan("gen", 15, 77), corpus, detector,
                                        PromptTemplates::defaults()));
    }
    CHECK(results[0] == results[1]);
    CHECK(results[1] == results[2]);
}

TEST_CASE("trial files round-trip") {
    Corpus corpus = balanced_corpus("gen", 5);
    FnCompleter detector("gen", truth_echo);
    auto trials = run_detection(self_plan("gen", 5), corpus, detector,
                                PromptTemplates::defaults());
    fs::path path = fs::temp_directory_path() / "selfdetect_trials_roundtrip.jsonl";
    save_trials(trials, path);
    auto loaded = load_trials(path);
    CHECK(loaded == trials);
    fs::remove(path);
}

TEST_CASE("cross_matrix over three models yields nine batches, self on the diagonal") {
    Corpus corpus = balanced_corpus("a", 3);
    for (const char* name : {"b", "c"}) {
        Corpus more = balanced_corpus(name, 3);
        for (auto& rec : more.records) {
            if (rec.source == Source::Ai) {
                rec.id = std::string(name) + "-" + rec.id;
                corpus.records.push_back(rec);
            }
        }
    }

    ReplayCache cache("", CacheMode::Passthrough);
    std::vector<ProviderProfile> profiles;
    for (const char* name : {"a", "b", "c"}) {
        ProviderProfile p;
        p.name = name;
        p.request_shape = RequestShape::MockEcho;
        profiles.push_back(std::move(p));
    }
    ProviderHost host(profiles, PromptTemplates::defaults(), cache, nullptr, RetryOptions{1, 0});

    ExperimentPlan base;
    base.n_per_class = 3;
    base.rng_seed = 5;
    base.paraphrased = false;
    auto cells = cross_matrix({"a", "b", "c"}, {"a", "b", "c"}, corpus, host, base);
    REQUIRE(cells.size() == 9);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        bool diagonal = i % 4 == 0;  // (0,0), (1,1), (2,2) in row-major order
        CHECK(cells[i].plan.mode ==
              (diagonal ? PlanMode::SelfDetect : PlanMode::CrossDetect));
        CHECK(cells[i].trials.size() == 6);
        // the mock detectors recognize signatures, so every batch is perfect
        auto tally = confusion_from_trials(cells[i].trials, UnparseablePolicy::CountAsError);
        CHECK(tally.cm == ConfusionMatrix{3, 0, 3, 0});
    }

    // a 1x1 matrix with the same name is a single self-detection batch
    auto single = cross_matrix({"a"}, {"a"}, corpus, host, base);
    REQUIRE(single.size() == 1);
    CHECK(single[0].plan.mode == PlanMode::SelfDetect);

    CHECK_THROWS_AS(cross_matrix({"a"}, {"missing"}, corpus, host, base), ConfigError);
}

TEST_CASE("manifest hash is stable and ignores timestamps") {
    RunManifest m;
    m.plan = self_plan("gen", 50);
    m.cache_mode = "replay";
    m.unparseable_policy = "count_as_error";
    m.templates = templates_json(PromptTemplates::defaults());
    m.tool_version = "0.1.0";
    m.created_at = "2026-01-01T00:00:00Z";
    std::string h1 = m.manifest_hash();
    m.created_at = "2030-12-31T23:59:59Z";
    CHECK(m.manifest_hash() == h1);
    m.plan.rng_seed ^= 1;
    CHECK(m.manifest_hash() != h1);

    RunManifest reparsed = RunManifest::from_json(m.to_json());
    CHECK(reparsed.manifest_hash() == m.manifest_hash());
}
