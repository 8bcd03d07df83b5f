#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "selfdetect/corpus.hpp"
#include "selfdetect/replay_cache.hpp"
#include "selfdetect/util.hpp"

using namespace selfdetect;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// The binary path arrives via the test environment; these cases are
// skipped when it is absent (e.g. running the test binary by hand).
const char* cli_path() { return std::getenv("SELFDETECT_BIN"); }

int run(const std::string& args, const fs::path& log) {
    std::string command =
        std::string("\"") + cli_path() + "\" " + args + " >> \"" + log.string() + "\" 2>&1";
    int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct Workspace {
    fs::path dir;
    fs::path log;

    explicit Workspace(const std::string& name) {
        dir = fs::temp_directory_path() / ("selfdetect_cli_" + name);
        fs::remove_all(dir);
        fs::create_directories(dir);
        log = dir / "cli.log";
    }
    ~Workspace() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }

    std::string path(const std::string& name) const { return (dir / name).string(); }

    void write_config(const std::string& name, const std::string& cache_mode) const {
        json cfg{{"providers", json::array({json{{"name", "chatgpt"},
                                                 {"request_shape", "mock_echo"},
                                                 {"model_id", "mock-1"}}})},
                 {"cache", {{"path", "cache.jsonl"}, {"mode", cache_mode}}},
                 {"n_per_class", 4},
                 {"rng_seed", 11}};
        write_file(dir / name, cfg.dump(2) + "\n");
    }

    void write_topics(std::size_t n) const {
        std::string topics;
        for (std::size_t i = 0; i < n; ++i) topics += "Topic " + std::to_string(i) + "\n";
        write_file(dir / "topics.txt", topics);
    }
};

}  // namespace

TEST_CASE("cli: configuration errors exit with code 1") {
    if (!cli_path()) return;
    Workspace ws("config_errors");
    ws.write_config("config.json", "record");
    // argument parse errors use the validation exit code too
    CHECK(run("", ws.log) == 1);
    CHECK(run("detect", ws.log) == 1);
    // missing topics file
    CHECK(run("generate --config " + ws.path("config.json") + " --provider chatgpt --topics " +
                  ws.path("missing.txt") + " --out " + ws.path("out.jsonl"),
              ws.log) == 1);
    // unknown provider
    ws.write_topics(2);
    CHECK(run("generate --config " + ws.path("config.json") + " --provider nosuch --topics " +
                  ws.path("topics.txt") + " --out " + ws.path("out.jsonl"),
              ws.log) == 1);
    // self mode with generator != detector is rejected before any call
    CHECK(run("detect --config " + ws.path("config.json") +
                  " --mode self --generator chatgpt --detector other --out " +
                  ws.path("trials.jsonl"),
              ws.log) == 1);
}

TEST_CASE("cli: interrupted generation resumes without re-requesting finished topics") {
    if (!cli_path()) return;
    Workspace ws("resume");
    ws.write_topics(6);
    ws.write_config("record.json", "record");
    ws.write_config("replay.json", "replay");

    // full record run in a scratch directory yields the complete cache
    CHECK(run("generate --config " + ws.path("record.json") + " --provider chatgpt --topics " +
                  ws.path("topics.txt") + " --out " + ws.path("scratch.jsonl"),
              ws.log) == 0);
    std::string full_cache = read_file(ws.dir / "cache.jsonl");

    // truncate the cache to the first 3 entries and replay: a partial run
    std::vector<std::string> lines;
    {
        std::istringstream in(full_cache);
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) lines.push_back(line);
    }
    REQUIRE(lines.size() == 6);
    std::string partial_cache;
    for (std::size_t i = 0; i < 3; ++i) partial_cache += lines[i] + "\n";
    write_file(ws.dir / "cache.jsonl", partial_cache);

    int partial_code = run("generate --config " + ws.path("replay.json") +
                               " --provider chatgpt --topics " + ws.path("topics.txt") +
                               " --out " + ws.path("ai.jsonl"),
                           ws.log);
    CHECK(partial_code == 2);
    CHECK(fs::exists(ws.dir / "ai.jsonl.resume.json"));

    // restore the full cache; the rerun resumes and completes
    write_file(ws.dir / "cache.jsonl", full_cache);
    CHECK(run("generate --config " + ws.path("replay.json") + " --provider chatgpt --topics " +
                  ws.path("topics.txt") + " --out " + ws.path("ai.jsonl"),
              ws.log) == 0);
    CHECK_FALSE(fs::exists(ws.dir / "ai.jsonl.resume.json"));

    Corpus corpus = load_corpus(ws.dir / "ai.jsonl");
    CHECK(corpus.records.size() == 6);

    // resumed output matches a clean single-pass replay byte for byte
    CHECK(run("generate --config " + ws.path("replay.json") + " --provider chatgpt --topics " +
                  ws.path("topics.txt") + " --out " + ws.path("clean.jsonl"),
              ws.log) == 0);
    CHECK(read_file(ws.dir / "ai.jsonl") == read_file(ws.dir / "clean.jsonl"));
}

TEST_CASE("cli: corpus-stats and replay-export produce their documents") {
    if (!cli_path()) return;
    Workspace ws("stats_export");
    ws.write_topics(3);
    ws.write_config("config.json", "record");
    CHECK(run("generate --config " + ws.path("config.json") + " --provider chatgpt --topics " +
                  ws.path("topics.txt") + " --out " + ws.path("ai.jsonl"),
              ws.log) == 0);
    CHECK(run("corpus-stats " + ws.path("ai.jsonl") + " --out " + ws.path("stats.csv"), ws.log) ==
          0);
    std::string csv = read_file(ws.dir / "stats.csv");
    CHECK(csv.rfind("source,model,paraphrased,n,", 0) == 0);
    CHECK(csv.find("AI,chatgpt,No,3,") != std::string::npos);

    CHECK(run("replay-export --config " + ws.path("config.json") + " --out " +
                  ws.path("cache_dump.jsonl"),
              ws.log) == 0);
    std::istringstream dump(read_file(ws.dir / "cache_dump.jsonl"));
    std::string line;
    std::size_t entries = 0;
    std::string previous_key;
    while (std::getline(dump, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        std::string key = j.at("key").get<std::string>();
        CHECK(previous_key < key);  // sorted export
        previous_key = key;
        ++entries;
    }
    CHECK(entries == 3);

    // empty corpus file is an error naming the file
    write_file(ws.dir / "empty.jsonl", "");
    CHECK(run("corpus-stats " + ws.path("empty.jsonl"), ws.log) == 1);
}

TEST_CASE("cli: baseline detection runs offline from a recorded cache") {
    if (!cli_path()) return;
    Workspace ws("baseline");
    ws.write_topics(4);

    json cfg{{"providers", json::array({json{{"name", "chatgpt"},
                                             {"request_shape", "mock_echo"},
                                             {"model_id", "mock-1"}}})},
             {"detectors", json::array({json{{"name", "zerogpt"},
                                             {"endpoint", "http://localhost:9/detect"}}})},
             {"cache", {{"path", "cache.jsonl"}, {"mode", "record"}}},
             {"n_per_class", 4},
             {"rng_seed", 11}};
    write_file(ws.dir / "record.json", cfg.dump(2) + "\n");
    cfg["cache"]["mode"] = "replay";
    write_file(ws.dir / "replay.json", cfg.dump(2) + "\n");

    CHECK(run("generate --config " + ws.path("record.json") + " --provider chatgpt --topics " +
                  ws.path("topics.txt") + " --out " + ws.path("ai.jsonl"),
              ws.log) == 0);
    std::string human_lines;
    for (int i = 0; i < 4; ++i) {
        json h{{"topic", "Topic " + std::to_string(i)},
               {"text", "Handwritten paragraph number " + std::to_string(i) + "."},
               {"id", "human-" + std::to_string(i)}};
        human_lines += h.dump() + "\n";
    }
    write_file(ws.dir / "human_raw.jsonl", human_lines);
    CHECK(run("ingest-human --in " + ws.path("human_raw.jsonl") + " --out " +
                  ws.path("human.jsonl") + " --timestamp 2026-01-01T00:00:00Z",
              ws.log) == 0);

    // pre-record detector responses keyed the way baseline_detect keys them
    Corpus ai = load_corpus(ws.dir / "ai.jsonl");
    Corpus human = load_corpus(ws.dir / "human.jsonl");
    std::string cache_lines = read_file(ws.dir / "cache.jsonl");
    auto add_score = [&](const std::string& text, double score) {
        std::string key = cache_key("zerogpt", "http://localhost:9/detect",
                                    json{{"score_field", "ai_probability"}}, text);
        json body{{"ai_probability", score}};
        cache_lines += json{{"key", key},
                            {"response", body.dump()},
                            {"recorded_at", "2026-01-01T00:00:00Z"}}
                           .dump() +
                       "\n";
    };
    for (const auto& rec : ai.records) add_score(rec.text, 0.9);
    for (const auto& rec : human.records) add_score(rec.text, 0.1);
    write_file(ws.dir / "cache.jsonl", cache_lines);

    CHECK(run("detect --config " + ws.path("replay.json") +
                  " --mode baseline --generator chatgpt --detector zerogpt --corpus " +
                  ws.path("ai.jsonl") + " --corpus " + ws.path("human.jsonl") + " --out " +
                  ws.path("trials.jsonl"),
              ws.log) == 0);
    CHECK(run("evaluate " + ws.path("trials.jsonl") + " --out-prefix " + ws.path("rep"), ws.log) ==
          0);
    json rep = json::parse(read_file(ws.dir / "rep.json"));
    REQUIRE(rep.at("rows").size() == 1);
    CHECK(rep.at("rows")[0].at("accuracy").get<double>() == 1.0);
    CHECK(rep.at("rows")[0].at("detector").get<std::string>() == "zerogpt");
    CHECK(rep.at("rows")[0].at("n").get<int>() == 8);
}

TEST_CASE("cli: missing replay cache entries exit with the transport code") {
    if (!cli_path()) return;
    Workspace ws("replay_miss");
    ws.write_topics(2);
    ws.write_config("replay.json", "replay");
    write_file(ws.dir / "cache.jsonl", "");
    CHECK(run("generate --config " + ws.path("replay.json") + " --provider chatgpt --topics " +
                  ws.path("topics.txt") + " --out " + ws.path("ai.jsonl"),
              ws.log) == 3);
}
