#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "selfdetect/providers.hpp"
#include "selfdetect/replay_cache.hpp"
#include "selfdetect/trial.hpp"

namespace selfdetect {

// One authoritative JSON document per study; command-line flags override
// individual fields. Secrets never appear here, only the names of
// environment variables that hold them.
struct Config {
    std::vector<ProviderProfile> providers;
    std::vector<DetectorClient> detectors;
    PromptTemplates templates = PromptTemplates::defaults();
    std::filesystem::path topics_file;
    std::vector<std::filesystem::path> corpora;
    std::filesystem::path cache_path;
    CacheMode cache_mode = CacheMode::Record;
    UnparseablePolicy unparseable_policy = UnparseablePolicy::CountAsError;
    std::size_t n_per_class = 50;
    std::uint64_t rng_seed = 0;
    RetryOptions retry;

    const ProviderProfile& provider(const std::string& name) const;
    const DetectorClient& detector(const std::string& name) const;
};

// Parses and validates: unique provider/detector names, referenced files
// exist, prompt overrides keep their {payload} placeholder.
Config load_config(const std::filesystem::path& path);

// Non-empty lines of a topics file, trimmed; '#' lines are comments.
std::vector<std::string> load_topics(const std::filesystem::path& path);

}  // namespace selfdetect
