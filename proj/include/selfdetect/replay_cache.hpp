#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include <json.hpp>

namespace selfdetect {

enum class CacheMode { Record, Replay, Passthrough };

std::string to_string(CacheMode mode);
CacheMode cache_mode_from_string(const std::string& s);

// Stable request key: SHA-256 over the canonical JSON of
// (profile name, model_id, sampling, prompt). Changing any component
// changes the key.
std::string cache_key(std::string_view profile_name, std::string_view model_id,
                      const nlohmann::json& sampling, std::string_view prompt);

struct CacheEntry {
    std::string response;
    std::string recorded_at;
};

// Persistent response store backed by a JSONL file of
// {key, response, recorded_at}. Reads may run concurrently; writes go
// through one serialized path. In Replay mode a miss is an error at the
// call site, never a live request.
class ReplayCache {
   public:
    // An empty path keeps the cache purely in memory.
    ReplayCache(std::filesystem::path file, CacheMode mode);

    CacheMode mode() const { return mode_; }
    std::size_t size() const;

    std::optional<CacheEntry> lookup(const std::string& key) const;

    // Inserts unless the key already exists; the first recording wins and is
    // returned either way, so concurrent recorders converge on one response.
    CacheEntry store(const std::string& key, const std::string& response);

    // Entries in key order; used by replay-export.
    void for_each_sorted(
        const std::function<void(const std::string&, const CacheEntry&)>& fn) const;

   private:
    CacheMode mode_;
    std::filesystem::path file_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, CacheEntry> entries_;
    std::ofstream out_;
};

}  // namespace selfdetect
