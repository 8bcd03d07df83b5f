#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "selfdetect/corpus.hpp"
#include "selfdetect/protocol.hpp"

namespace selfdetect {

// One detector query: which essay, what the truth was, what came back.
struct DetectionTrial {
    std::string essay_id;
    Source truth = Source::Human;
    Verdict verdict;  // carries the raw response
    std::string detector;
    std::string prompt_hash;

    bool operator==(const DetectionTrial&) const = default;
};

enum class UnparseablePolicy { CountAsError, Exclude };

std::string to_string(UnparseablePolicy policy);
UnparseablePolicy unparseable_policy_from_string(const std::string& s);

// JSONL, one trial per line: {essay_id, truth, verdict, detector,
// prompt_hash, raw_response}. Ordering is preserved verbatim.
void save_trials(const std::vector<DetectionTrial>& trials, const std::filesystem::path& path);
std::vector<DetectionTrial> load_trials(const std::filesystem::path& path);

}  // namespace selfdetect
