#include "selfdetect/trial.hpp"

#include <fstream>

#include <json.hpp>

#include "selfdetect/errors.hpp"
#include "selfdetect/util.hpp"

namespace selfdetect {

using nlohmann::json;

std::string to_string(UnparseablePolicy policy) {
    return policy == UnparseablePolicy::CountAsError ? "count_as_error" : "exclude";
}

UnparseablePolicy unparseable_policy_from_string(const std::string& s) {
    if (s == "count_as_error") return UnparseablePolicy::CountAsError;
    if (s == "exclude") return UnparseablePolicy::Exclude;
    throw ConfigError("unknown unparseable policy: " + s);
}

void save_trials(const std::vector<DetectionTrial>& trials, const std::filesystem::path& path) {
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoFailure("cannot write trials file: " + path.string());
    for (const auto& t : trials) {
        json j{{"essay_id", t.essay_id},
               {"truth", to_string(t.truth)},
               {"verdict", to_string(t.verdict.kind)},
               {"detector", t.detector},
               {"prompt_hash", t.prompt_hash},
               {"raw_response", t.verdict.raw_response}};
        out << j.dump() << '\n';
    }
    if (!out) throw IoFailure("write failed: " + path.string());
}

std::vector<DetectionTrial> load_trials(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open trials file: " + path.string());
    std::vector<DetectionTrial> trials;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            DetectionTrial t;
            t.essay_id = j.at("essay_id").get<std::string>();
            t.truth = source_from_string(j.at("truth").get<std::string>());
            t.verdict.kind = verdict_kind_from_string(j.at("verdict").get<std::string>());
            t.verdict.raw_response = j.at("raw_response").get<std::string>();
            t.detector = j.at("detector").get<std::string>();
            t.prompt_hash = j.at("prompt_hash").get<std::string>();
            trials.push_back(std::move(t));
        } catch (const json::exception& e) {
            throw SchemaViolation(path.string() + ":" + std::to_string(line_no) +
                                  ": malformed trial: " + e.what());
        }
    }
    return trials;
}

}  // namespace selfdetect
