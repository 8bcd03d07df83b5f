#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "selfdetect/config.hpp"
#include "selfdetect/errors.hpp"
#include "selfdetect/experiment.hpp"
#include "selfdetect/report.hpp"
#include "selfdetect/util.hpp"
#include "selfdetect/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace selfdetect;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;
constexpr int kExitTransport = 3;

int classify_exception(const std::exception& e) {
    if (const auto* step = dynamic_cast<const StepFailure*>(&e); step && step->cause) {
        try {
            std::rethrow_exception(step->cause);
        } catch (const std::exception& cause) {
            return classify_exception(cause);
        } catch (...) {
            return kExitConfig;
        }
    }
    if (dynamic_cast<const TransportFailure*>(&e) || dynamic_cast<const AuthMissing*>(&e) ||
        dynamic_cast<const CacheMiss*>(&e) || dynamic_cast<const MalformedScore*>(&e))
        return kExitTransport;
    return kExitConfig;
}

RunManifest build_manifest(const Config& cfg, const ExperimentPlan& plan,
                           std::vector<json> profiles) {
    RunManifest m;
    m.plan = plan;
    m.profiles = std::move(profiles);
    m.cache_mode = to_string(cfg.cache_mode);
    m.unparseable_policy = to_string(cfg.unparseable_policy);
    m.templates = templates_json(cfg.templates);
    m.tool_version = kToolVersion;
    m.created_at = now_utc_iso8601();
    return m;
}

ExperimentPlan generation_plan(const Config& cfg, const std::string& provider,
                               std::size_t n_topics) {
    ExperimentPlan plan;
    plan.mode = PlanMode::SelfDetect;
    plan.generator = provider;
    plan.detector = provider;
    plan.paraphrased = false;
    plan.n_per_class = n_topics;
    plan.rng_seed = cfg.rng_seed;
    return plan;
}

struct ResumeMarker {
    std::string manifest_hash;
    std::vector<std::string> completed;
};

fs::path resume_path_for(const fs::path& out) {
    fs::path p = out;
    p += ".resume.json";
    return p;
}

void write_resume(const fs::path& out, const std::string& manifest_hash,
                  const std::vector<std::string>& completed) {
    json j{{"manifest_hash", manifest_hash}, {"completed", completed}};
    write_file(resume_path_for(out), j.dump(2) + "\n");
}

std::optional<ResumeMarker> read_resume(const fs::path& out) {
    fs::path p = resume_path_for(out);
    if (!fs::exists(p)) return std::nullopt;
    try {
        json j = json::parse(read_file(p));
        ResumeMarker marker;
        marker.manifest_hash = j.at("manifest_hash").get<std::string>();
        marker.completed = j.at("completed").get<std::vector<std::string>>();
        return marker;
    } catch (const json::exception& e) {
        throw ConfigError("malformed resume marker " + p.string() + ": " + e.what());
    }
}

std::shared_ptr<Transport> make_transport() { return std::make_shared<LiveTransport>(); }

// generate: one AI essay per topic through the essay-generation prompt.
int cmd_generate(const Config& cfg, const std::string& provider_name, const fs::path& topics_path,
                 const fs::path& out) {
    std::vector<std::string> topics =
        load_topics(topics_path.empty() ? cfg.topics_file : topics_path);
    if (topics.empty()) throw ConfigError("topic list is empty");
    cfg.provider(provider_name);  // resolve before opening anything

    ReplayCache cache(cfg.cache_path, cfg.cache_mode);
    ProviderHost host(cfg.providers, cfg.templates, cache, make_transport(), cfg.retry);
    Completer& provider = host.completer(provider_name);

    RunManifest manifest =
        build_manifest(cfg, generation_plan(cfg, provider_name, topics.size()),
                       {profile_json(provider.profile())});
    const std::string manifest_hash = manifest.manifest_hash();

    std::set<std::string> completed;
    bool resuming = false;
    if (auto marker = read_resume(out); marker && fs::exists(out)) {
        if (marker->manifest_hash != manifest_hash)
            throw ConfigError("resume marker at " + resume_path_for(out).string() +
                              " was written under a different configuration; delete it to restart");
        completed.insert(marker->completed.begin(), marker->completed.end());
        resuming = true;
    }

    std::vector<std::string> pending;
    for (const auto& topic : topics)
        if (!completed.contains(topic)) pending.push_back(topic);

    CorpusWriter writer(out, resuming);
    std::vector<std::string> done(completed.begin(), completed.end());
    try {
        generate_essays(provider, cfg.templates, pending, [&](const EssayRecord& rec) {
            writer.add(rec);
            done.push_back(rec.topic);
        });
    } catch (const std::exception& e) {
        write_resume(out, manifest_hash, done);
        std::cerr << "generate: " << e.what() << "\n";
        std::cerr << "partial corpus kept at " << out.string() << "; rerun to resume\n";
        return done.empty() ? classify_exception(e) : kExitPartial;
    }
    std::error_code ec;
    fs::remove(resume_path_for(out), ec);
    std::cerr << "generate: wrote " << topics.size() << " records ("
              << topics.size() - pending.size() << " resumed) to " << out.string() << "\n";
    return kExitOk;
}

// paraphrase: one rewritten record per original by the same provider.
int cmd_paraphrase(const Config& cfg, const std::string& provider_name, const fs::path& in,
                   const fs::path& out) {
    ReplayCache cache(cfg.cache_path, cfg.cache_mode);
    ProviderHost host(cfg.providers, cfg.templates, cache, make_transport(), cfg.retry);
    Completer& provider = host.completer(provider_name);

    Corpus source = load_corpus(in);
    std::vector<EssayRecord> originals;
    for (const auto& rec : source.records) {
        if (rec.source == Source::Ai && rec.generator == provider_name && !rec.paraphrased)
            originals.push_back(rec);
    }
    if (originals.empty())
        throw ConfigError("no original records for provider '" + provider_name + "' in " +
                          in.string());

    RunManifest manifest =
        build_manifest(cfg, generation_plan(cfg, provider_name, originals.size()),
                       {profile_json(provider.profile())});
    const std::string manifest_hash = manifest.manifest_hash();

    std::set<std::string> completed;
    bool resuming = false;
    if (auto marker = read_resume(out); marker && fs::exists(out)) {
        if (marker->manifest_hash != manifest_hash)
            throw ConfigError("resume marker at " + resume_path_for(out).string() +
                              " was written under a different configuration; delete it to restart");
        completed.insert(marker->completed.begin(), marker->completed.end());
        resuming = true;
    }
    std::vector<EssayRecord> pending;
    for (const auto& rec : originals)
        if (!completed.contains(rec.id)) pending.push_back(rec);

    CorpusWriter writer(out, resuming);
    std::vector<std::string> done(completed.begin(), completed.end());
    try {
        paraphrase_essays(provider, cfg.templates, pending, [&](const EssayRecord& rec) {
            writer.add(rec);
            done.push_back(rec.provenance.at("original_id"));
        });
    } catch (const std::exception& e) {
        write_resume(out, manifest_hash, done);
        std::cerr << "paraphrase: " << e.what() << "\n";
        return done.empty() ? classify_exception(e) : kExitPartial;
    }
    std::error_code ec;
    fs::remove(resume_path_for(out), ec);
    std::cerr << "paraphrase: wrote " << originals.size() << " records to " << out.string() << "\n";
    return kExitOk;
}

// ingest-human: local .txt files (or a JSONL of {topic, text}) become Human
// records. No network is ever involved.
int cmd_ingest_human(const Config* cfg, const std::vector<fs::path>& inputs, const fs::path& out,
                     std::string timestamp) {
    if (timestamp.empty()) {
        bool replay = cfg != nullptr && cfg->cache_mode == CacheMode::Replay;
        timestamp = replay ? "1970-01-01T00:00:00Z" : now_utc_iso8601();
    }

    std::vector<fs::path> files;
    for (const auto& input : inputs) {
        if (fs::is_directory(input)) {
            for (const auto& entry : fs::directory_iterator(input))
                if (entry.path().extension() == ".txt") files.push_back(entry.path());
        } else {
            files.push_back(input);
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ConfigError("no input files to ingest");

    CorpusWriter writer(out);
    std::size_t count = 0;
    for (const auto& file : files) {
        if (file.extension() == ".jsonl") {
            std::ifstream in(file);
            if (!in) throw IoFailure("cannot open " + file.string());
            std::string line;
            std::size_t line_no = 0;
            while (std::getline(in, line)) {
                ++line_no;
                if (line.empty()) continue;
                json j;
                try {
                    j = json::parse(line);
                } catch (const json::exception& e) {
                    throw SchemaViolation(file.string() + ":" + std::to_string(line_no) + ": " +
                                          e.what());
                }
                std::string topic = j.at("topic").get<std::string>();
                std::string id = j.value("id", "human-" + slugify(topic) + "-" +
                                                   std::to_string(line_no));
                writer.add(
                    make_human_record(id, topic, j.at("text").get<std::string>(), timestamp));
                ++count;
            }
        } else {
            std::string topic = file.stem().string();
            writer.add(make_human_record("human-" + slugify(topic), topic, read_file(file),
                                         timestamp));
            ++count;
        }
    }
    std::cerr << "ingest-human: wrote " << count << " records to " << out.string() << "\n";
    return kExitOk;
}

// detect: one balanced self/cross/baseline batch -> trials JSONL + manifest.
int cmd_detect(const Config& cfg, const ExperimentPlan& plan,
               const std::vector<fs::path>& corpus_files, const fs::path& out) {
    validate_plan(plan);
    Corpus corpus = load_corpora(corpus_files.empty() ? cfg.corpora : corpus_files);

    ReplayCache cache(cfg.cache_path, cfg.cache_mode);

    std::vector<json> profiles{profile_json(cfg.provider(plan.generator))};
    if (plan.mode == PlanMode::Baseline) {
        const DetectorClient& client = cfg.detector(plan.detector);
        profiles.push_back(json{{"name", client.name},
                                {"endpoint", client.endpoint},
                                {"score_field", client.score_field},
                                {"threshold", client.threshold},
                                {"auth_env_var", client.auth_env_var}});
    } else if (plan.detector != plan.generator) {
        profiles.push_back(profile_json(cfg.provider(plan.detector)));
    }
    RunManifest manifest = build_manifest(cfg, plan, std::move(profiles));

    fs::path partial = out;
    partial += ".partial.jsonl";
    std::ofstream partial_out(partial, std::ios::trunc);
    std::size_t collected = 0;
    TrialSink sink = [&](const DetectionTrial& t) {
        json j{{"essay_id", t.essay_id},
               {"truth", to_string(t.truth)},
               {"verdict", to_string(t.verdict.kind)},
               {"detector", t.detector},
               {"prompt_hash", t.prompt_hash},
               {"raw_response", t.verdict.raw_response}};
        partial_out << j.dump() << '\n';
        partial_out.flush();
        ++collected;
    };

    std::vector<DetectionTrial> trials;
    try {
        if (plan.mode == PlanMode::Baseline) {
            auto transport = make_transport();
            trials = run_baseline_detection(plan, corpus, cfg.detector(plan.detector), cache,
                                            *transport, cfg.retry, sink);
        } else {
            ProviderHost host(cfg.providers, cfg.templates, cache, make_transport(), cfg.retry);
            trials = run_detection(plan, corpus, host.completer(plan.detector), cfg.templates, sink);
        }
    } catch (const std::exception& e) {
        std::cerr << "detect: " << e.what() << "\n";
        int cause = classify_exception(e);
        if (cause == kExitTransport) {
            std::cerr << "partial trials kept at " << partial.string() << "\n";
            return kExitTransport;
        }
        if (collected > 0) {
            std::cerr << "partial trials kept at " << partial.string() << "\n";
            return kExitPartial;
        }
        std::error_code ec;
        partial_out.close();
        fs::remove(partial, ec);
        return cause;
    }

    save_trials(trials, out);
    write_file(manifest_path_for(out), manifest.to_json().dump(2) + "\n");
    partial_out.close();
    std::error_code ec;
    fs::remove(partial, ec);
    std::cerr << "detect: wrote " << trials.size() << " trials to " << out.string() << "\n";
    return kExitOk;
}

// evaluate: trial batches -> metrics CSV + JSON report + figure data +
// fixed-width table on stdout.
int cmd_evaluate(const std::vector<fs::path>& trial_files, const std::string& out_prefix) {
    std::vector<EvaluatedBatch> batches;
    batches.reserve(trial_files.size());
    for (const auto& file : trial_files) batches.push_back(evaluate_trials_file(file));

    write_file(out_prefix + ".csv", metrics_csv(batches));
    write_file(out_prefix + ".json", report_json(batches));
    write_file(out_prefix + "_figure.csv", figure_csv(batches));
    std::cout << render_table(batches);
    std::cerr << "evaluate: wrote " << out_prefix << ".csv, " << out_prefix << ".json, "
              << out_prefix << "_figure.csv\n";
    return kExitOk;
}

int cmd_corpus_stats(const std::vector<fs::path>& corpus_files, const fs::path& out) {
    Corpus corpus = load_corpora(corpus_files);
    std::string csv = group_stats_csv(corpus);
    if (out.empty()) {
        std::cout << csv;
    } else {
        write_file(out, csv);
        std::cerr << "corpus-stats: wrote " << out.string() << "\n";
    }
    return kExitOk;
}

int cmd_replay_export(const Config& cfg, const fs::path& out) {
    if (cfg.cache_path.empty()) throw ConfigError("config has no cache path");
    ReplayCache cache(cfg.cache_path, CacheMode::Replay);
    std::ostringstream dump;
    cache.for_each_sorted([&](const std::string& key, const CacheEntry& entry) {
        dump << json{{"key", key}, {"response", entry.response}, {"recorded_at", entry.recorded_at}}
                    .dump()
             << '\n';
    });
    if (out.empty()) {
        std::cout << dump.str();
    } else {
        write_file(out, dump.str());
        std::cerr << "replay-export: wrote " << cache.size() << " entries to " << out.string()
                  << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AI-content self-detection study harness"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string provider;
    std::string topics_file;
    std::string in_file;
    std::string out_file;
    std::string out_prefix = "report";
    std::string mode = "self";
    std::string generator;
    std::string detector;
    std::string paraphrased = "no";
    std::string timestamp;
    std::vector<std::string> inputs;
    std::int64_t n_per_class = -1;
    std::int64_t seed = -1;

    auto* generate = app.add_subcommand("generate", "Generate one AI essay per topic");
    generate->add_option("--config", config_path)->required();
    generate->add_option("--provider", provider)->required();
    generate->add_option("--topics", topics_file, "Topics file (overrides config)");
    generate->add_option("--out", out_file)->required();

    auto* paraphrase = app.add_subcommand("paraphrase", "Paraphrase previously generated essays");
    paraphrase->add_option("--config", config_path)->required();
    paraphrase->add_option("--provider", provider)->required();
    paraphrase->add_option("--in", in_file)->required();
    paraphrase->add_option("--out", out_file)->required();

    auto* ingest = app.add_subcommand("ingest-human", "Ingest local human-written texts");
    ingest->add_option("--config", config_path);
    ingest->add_option("--in", inputs, "Files or directories (.txt or .jsonl)")->required();
    ingest->add_option("--out", out_file)->required();
    ingest->add_option("--timestamp", timestamp, "Pin created_at (ISO-8601)");

    auto* detect = app.add_subcommand("detect", "Run a balanced detection batch");
    detect->add_option("--config", config_path)->required();
    detect->add_option("--mode", mode)->check(CLI::IsMember({"self", "cross", "baseline"}));
    detect->add_option("--generator", generator)->required();
    detect->add_option("--detector", detector, "Defaults to the generator in self mode");
    detect->add_option("--paraphrased", paraphrased)->check(CLI::IsMember({"yes", "no"}));
    detect->add_option("--corpus", inputs, "Corpus files (override config)");
    detect->add_option("--n-per-class", n_per_class);
    detect->add_option("--seed", seed);
    detect->add_option("--out", out_file)->required();

    auto* evaluate = app.add_subcommand("evaluate", "Compute metrics from trial batches");
    evaluate->add_option("trials", inputs, "Trial files")->required();
    evaluate->add_option("--out-prefix", out_prefix);

    auto* corpus_stats = app.add_subcommand("corpus-stats", "Per-group text statistics");
    corpus_stats->add_option("corpora", inputs, "Corpus files")->required();
    corpus_stats->add_option("--out", out_file);

    auto* replay_export = app.add_subcommand("replay-export", "Dump the replay cache");
    replay_export->add_option("--config", config_path)->required();
    replay_export->add_option("--out", out_file);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;  // --help/--version exit 0
    }

    try {
        if (generate->parsed()) {
            return cmd_generate(load_config(config_path), provider, topics_file, out_file);
        }
        if (paraphrase->parsed()) {
            return cmd_paraphrase(load_config(config_path), provider, in_file, out_file);
        }
        if (ingest->parsed()) {
            std::optional<Config> cfg;
            if (!config_path.empty()) cfg = load_config(config_path);
            std::vector<fs::path> paths(inputs.begin(), inputs.end());
            return cmd_ingest_human(cfg ? &*cfg : nullptr, paths, out_file, timestamp);
        }
        if (detect->parsed()) {
            Config cfg = load_config(config_path);
            ExperimentPlan plan;
            plan.mode = plan_mode_from_string(mode);
            plan.generator = generator;
            plan.detector = detector.empty() && plan.mode == PlanMode::SelfDetect ? generator
                                                                                  : detector;
            plan.paraphrased = paraphrased == "yes";
            plan.n_per_class = n_per_class > 0 ? static_cast<std::size_t>(n_per_class)
                                               : cfg.n_per_class;
            plan.rng_seed = seed >= 0 ? static_cast<std::uint64_t>(seed) : cfg.rng_seed;
            std::vector<fs::path> paths(inputs.begin(), inputs.end());
            return cmd_detect(cfg, plan, paths, out_file);
        }
        if (evaluate->parsed()) {
            std::vector<fs::path> paths(inputs.begin(), inputs.end());
            return cmd_evaluate(paths, out_prefix);
        }
        if (corpus_stats->parsed()) {
            std::vector<fs::path> paths(inputs.begin(), inputs.end());
            return cmd_corpus_stats(paths, out_file);
        }
        if (replay_export->parsed()) {
            return cmd_replay_export(load_config(config_path), out_file);
        }
    } catch (const std::exception& e) {
        std::cerr << app.get_name() << ": " << e.what() << "\n";
        return classify_exception(e);
    }
    return kExitOk;
}
