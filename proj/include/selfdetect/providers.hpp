#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "selfdetect/markov.hpp"
#include "selfdetect/protocol.hpp"
#include "selfdetect/replay_cache.hpp"

namespace selfdetect {

// Vendor adapters: each maps the canonical single-turn request
// {system: none, user: prompt} to one wire format. The two synthetic shapes
// never touch the network.
enum class RequestShape { OpenAiChat, AnthropicMessages, GoogleGenerateContent, MockEcho, Markov };

std::string to_string(RequestShape shape);
RequestShape request_shape_from_string(const std::string& s);

struct SamplingParams {
    double temperature = 1.0;
    int max_tokens = 512;
};

// Settings for the synthetic autoregressive provider. Training text comes
// from `train_file` (one text per line) when set, otherwise from the
// built-in stylized corpus for `style`.
struct MarkovSettings {
    int order = 2;
    double alpha = 0.1;
    std::uint64_t seed = 1;
    int style = 0;
    int other_style = 1;  // calibration foil
    std::size_t corpus_tokens = 10000;
    std::size_t calibration_samples = 20;
    std::size_t generate_tokens = 120;
    std::string train_file;
};

struct ProviderProfile {
    std::string name;
    std::string endpoint;  // full URL of the completion resource
    std::string model_id;
    SamplingParams sampling;
    std::string auth_env_var;
    RequestShape request_shape = RequestShape::MockEcho;
    int parallelism = 2;
    MarkovSettings markov;
};

// Canonical sampling JSON; part of the cache key and the run manifest.
nlohmann::json sampling_json(const SamplingParams& sampling);
// Profile as recorded in manifests: names the auth env var, never its value.
nlohmann::json profile_json(const ProviderProfile& profile);

struct HttpResponse {
    int status = 0;
    std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

// Connection-level failures surface as TransportFailure; HTTP statuses are
// returned for the retry policy to inspect.
class Transport {
   public:
    virtual ~Transport() = default;
    virtual HttpResponse post(const std::string& url, const HttpHeaders& headers,
                              const std::string& json_body) = 0;
};

// cpp-httplib client with TLS support.
class LiveTransport : public Transport {
   public:
    explicit LiveTransport(int timeout_seconds = 60);
    HttpResponse post(const std::string& url, const HttpHeaders& headers,
                      const std::string& json_body) override;

   private:
    int timeout_seconds_;
};

struct RetryOptions {
    int max_attempts = 3;
    int backoff_base_ms = 250;  // doubled per retry
};

struct Completion {
    std::string text;
    std::string recorded_at;
    std::string cache_key;
};

// A provider behind the replay cache. Record stores live responses under
// the request key; Replay serves them byte-exactly and treats a miss as an
// error; Passthrough skips the cache entirely.
class Completer {
   public:
    virtual ~Completer() = default;
    virtual const ProviderProfile& profile() const = 0;
    virtual Completion complete(const std::string& prompt) = 0;
};

// Owns one Completer per configured profile plus the synthetic providers'
// state (trained models, calibrated thresholds).
class ProviderHost {
   public:
    ProviderHost(std::vector<ProviderProfile> profiles, PromptTemplates templates,
                 ReplayCache& cache, std::shared_ptr<Transport> transport,
                 RetryOptions retry = {});
    ~ProviderHost();

    Completer& completer(const std::string& name);
    const ProviderProfile& profile(const std::string& name) const;
    const PromptTemplates& templates() const { return templates_; }
    std::vector<std::string> provider_names() const;

   private:
    PromptTemplates templates_;
    std::vector<std::unique_ptr<Completer>> completers_;
};

// External score-based detector (the study's baseline tool), modeled as a
// black box returning an AI-likelihood in [0, 1].
struct DetectorClient {
    std::string name;
    std::string endpoint;
    std::string text_field = "text";            // request body field
    std::string score_field = "ai_probability"; // response body field
    double threshold = 0.5;                     // AI iff score > threshold
    std::string auth_env_var;
    std::string auth_header = "Authorization";
    int parallelism = 2;
};

struct BaselineOutcome {
    Verdict verdict;  // OriginAi / OriginHuman; raw_response carries the body
    double score = 0.0;
    std::string cache_key;
    std::string recorded_at;
};

// Posts the text, reads the score field, applies the threshold (ties go to
// Human). Runs through the same replay cache discipline as completions.
// Throws TransportFailure or MalformedScore.
BaselineOutcome baseline_detect(const DetectorClient& client, ReplayCache& cache,
                                Transport& transport, const std::string& text,
                                const RetryOptions& retry = {});

// Splits a rendered prompt back into (kind, payload) by matching the
// templates' fixed prefix/suffix. Synthetic providers use this to decide
// how to answer.
std::optional<std::pair<PromptKind, std::string>> classify_prompt(const PromptTemplates& templates,
                                                                  const std::string& prompt);

}  // namespace selfdetect
