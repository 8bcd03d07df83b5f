#include "selfdetect/replay_cache.hpp"

#include <algorithm>
#include <chrono>
#include <mutex>
#include <vector>

#include "selfdetect/errors.hpp"
#include "selfdetect/sha256.hpp"
#include "selfdetect/util.hpp"

namespace selfdetect {

using nlohmann::json;

std::string to_string(CacheMode mode) {
    switch (mode) {
        case CacheMode::Record: return "record";
        case CacheMode::Replay: return "replay";
        case CacheMode::Passthrough: return "passthrough";
    }
    return "record";
}

CacheMode cache_mode_from_string(const std::string& s) {
    if (s == "record") return CacheMode::Record;
    if (s == "replay") return CacheMode::Replay;
    if (s == "passthrough") return CacheMode::Passthrough;
    throw ConfigError("unknown cache mode: " + s);
}

std::string cache_key(std::string_view profile_name, std::string_view model_id,
                      const json& sampling, std::string_view prompt) {
    json canonical{{"profile", std::string(profile_name)},
                   {"model", std::string(model_id)},
                   {"sampling", sampling},
                   {"prompt", std::string(prompt)}};
    return sha256_hex(canonical.dump());
}

ReplayCache::ReplayCache(std::filesystem::path file, CacheMode mode)
    : mode_(mode), file_(std::move(file)) {
    if (file_.empty()) return;
    if (std::filesystem::exists(file_)) {
        std::ifstream in(file_);
        if (!in) throw IoFailure("cannot open cache file: " + file_.string());
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            try {
                json j = json::parse(line);
                CacheEntry entry{j.at("response").get<std::string>(),
                                 j.at("recorded_at").get<std::string>()};
                entries_.emplace(j.at("key").get<std::string>(), std::move(entry));
            } catch (const json::exception& e) {
                throw SchemaViolation(file_.string() + ":" + std::to_string(line_no) +
                                      ": malformed cache entry: " + e.what());
            }
        }
    }
    if (mode_ == CacheMode::Record) {
        ensure_parent_dir(file_);
        out_.open(file_, std::ios::app);
        if (!out_) throw IoFailure("cannot open cache file for append: " + file_.string());
    }
}

std::size_t ReplayCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

std::optional<CacheEntry> ReplayCache::lookup(const std::string& key) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

CacheEntry ReplayCache::store(const std::string& key, const std::string& response) {
    std::unique_lock lock(mutex_);
    auto [it, inserted] = entries_.try_emplace(key, CacheEntry{response, now_utc_iso8601()});
    if (inserted && out_.is_open()) {
        out_ << json{{"key", key},
                     {"response", it->second.response},
                     {"recorded_at", it->second.recorded_at}}
                    .dump()
             << '\n';
        out_.flush();
        if (!out_) throw IoFailure("cache write failed: " + file_.string());
    }
    return it->second;
}

void ReplayCache::for_each_sorted(
    const std::function<void(const std::string&, const CacheEntry&)>& fn) const {
    std::shared_lock lock(mutex_);
    std::vector<const std::string*> keys;
    keys.reserve(entries_.size());
    for (const auto& [key, unused] : entries_) keys.push_back(&key);
    std::sort(keys.begin(), keys.end(),
              [](const std::string* a, const std::string* b) { return *a < *b; });
    for (const std::string* key : keys) fn(*key, entries_.at(*key));
}

}  // namespace selfdetect
