#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "selfdetect/providers.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include "selfdetect/errors.hpp"
#include "selfdetect/sha256.hpp"
#include "selfdetect/util.hpp"

namespace selfdetect {

using nlohmann::json;

std::string to_string(RequestShape shape) {
    switch (shape) {
        case RequestShape::OpenAiChat: return "openai_chat";
        case RequestShape::AnthropicMessages: return "anthropic_messages";
        case RequestShape::GoogleGenerateContent: return "google_generate_content";
        case RequestShape::MockEcho: return "mock_echo";
        case RequestShape::Markov: return "markov";
    }
    return "mock_echo";
}

RequestShape request_shape_from_string(const std::string& s) {
    if (s == "openai_chat") return RequestShape::OpenAiChat;
    if (s == "anthropic_messages") return RequestShape::AnthropicMessages;
    if (s == "google_generate_content") return RequestShape::GoogleGenerateContent;
    if (s == "mock_echo") return RequestShape::MockEcho;
    if (s == "markov") return RequestShape::Markov;
    throw ConfigError("unknown request shape: " + s);
}

json sampling_json(const SamplingParams& sampling) {
    return json{{"temperature", sampling.temperature}, {"max_tokens", sampling.max_tokens}};
}

json profile_json(const ProviderProfile& profile) {
    return json{{"name", profile.name},
                {"endpoint", profile.endpoint},
                {"model_id", profile.model_id},
                {"sampling", sampling_json(profile.sampling)},
                {"request_shape", to_string(profile.request_shape)},
                {"auth_env_var", profile.auth_env_var},
                {"parallelism", profile.parallelism}};
}

LiveTransport::LiveTransport(int timeout_seconds) : timeout_seconds_(timeout_seconds) {}

HttpResponse LiveTransport::post(const std::string& url, const HttpHeaders& headers,
                                 const std::string& json_body) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw TransportFailure("malformed URL: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    std::string base = (path_start == std::string::npos) ? url : url.substr(0, path_start);
    std::string path = (path_start == std::string::npos) ? "/" : url.substr(path_start);

    httplib::Client client(base);
    client.set_connection_timeout(timeout_seconds_);
    client.set_read_timeout(timeout_seconds_);
    httplib::Headers hl;
    for (const auto& [k, v] : headers) hl.emplace(k, v);

    auto result = client.Post(path, hl, json_body, "application/json");
    if (!result) {
        throw TransportFailure("connection to " + base + " failed: " +
                               httplib::to_string(result.error()));
    }
    return HttpResponse{result->status, result->body};
}

namespace {

bool transient_status(int status) {
    return status == 408 || status == 429 || (status >= 500 && status < 600);
}

std::string snippet(const std::string& body) {
    return body.size() <= 200 ? body : body.substr(0, 200) + "...";
}

// Retries transient failures (connection errors, 408/429/5xx) with
// exponential backoff; other statuses abort immediately. The thrown error
// names the attempt count.
std::string post_with_retries(Transport& transport, const std::string& url,
                              const HttpHeaders& headers, const std::string& body,
                              const RetryOptions& retry) {
    std::string last_error;
    for (int attempt = 1; attempt <= retry.max_attempts; ++attempt) {
        if (attempt > 1 && retry.backoff_base_ms > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(retry.backoff_base_ms << (attempt - 2)));
        }
        HttpResponse resp;
        try {
            resp = transport.post(url, headers, body);
        } catch (const TransportFailure& e) {
            last_error = e.what();
            if (attempt == retry.max_attempts) break;
            continue;
        }
        if (resp.status >= 200 && resp.status < 300) return resp.body;
        last_error = "HTTP " + std::to_string(resp.status) + ": " + snippet(resp.body);
        if (!transient_status(resp.status)) {
            throw TransportFailure("request to " + url + " failed (" + last_error + ") on attempt " +
                                   std::to_string(attempt) + ", not retryable");
        }
    }
    throw TransportFailure("request to " + url + " failed after " +
                           std::to_string(retry.max_attempts) + " attempts: " + last_error);
}

std::string require_api_key(const ProviderProfile& profile) {
    if (profile.auth_env_var.empty())
        throw AuthMissing("profile '" + profile.name + "' has no auth_env_var configured");
    const char* key = std::getenv(profile.auth_env_var.c_str());
    if (key == nullptr || *key == '\0')
        throw AuthMissing("environment variable " + profile.auth_env_var + " is not set (profile '" +
                          profile.name + "')");
    return key;
}

struct WireRequest {
    HttpHeaders headers;
    std::string body;
};

WireRequest build_request(const ProviderProfile& profile, const std::string& prompt,
                          const std::string& api_key) {
    WireRequest req;
    switch (profile.request_shape) {
        case RequestShape::OpenAiChat:
            req.headers.emplace_back("Authorization", "Bearer " + api_key);
            req.body = json{{"model", profile.model_id},
                            {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
                            {"temperature", profile.sampling.temperature},
                            {"max_tokens", profile.sampling.max_tokens}}
                           .dump();
            break;
        case RequestShape::AnthropicMessages:
            req.headers.emplace_back("x-api-key", api_key);
            req.headers.emplace_back("anthropic-version", "2023-06-01");
            req.body = json{{"model", profile.model_id},
                            {"max_tokens", profile.sampling.max_tokens},
                            {"temperature", profile.sampling.temperature},
                            {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})}}
                           .dump();
            break;
        case RequestShape::GoogleGenerateContent:
            req.headers.emplace_back("x-goog-api-key", api_key);
            req.body = json{{"contents", json::array({json{
                                {"parts", json::array({json{{"text", prompt}}})}}})},
                            {"generationConfig",
                             {{"temperature", profile.sampling.temperature},
                              {"maxOutputTokens", profile.sampling.max_tokens}}}}
                           .dump();
            break;
        default:
            throw ConfigError("no wire format for synthetic shape");
    }
    return req;
}

std::string parse_completion_body(const ProviderProfile& profile, const std::string& body) {
    try {
        json j = json::parse(body);
        switch (profile.request_shape) {
            case RequestShape::OpenAiChat:
                return j.at("choices").at(0).at("message").at("content").get<std::string>();
            case RequestShape::AnthropicMessages:
                return j.at("content").at(0).at("text").get<std::string>();
            case RequestShape::GoogleGenerateContent:
                return j.at("candidates")
                    .at(0)
                    .at("content")
                    .at("parts")
                    .at(0)
                    .at("text")
                    .get<std::string>();
            default:
                break;
        }
    } catch (const json::exception& e) {
        throw TransportFailure("provider '" + profile.name +
                               "' returned an unexpected response shape: " + e.what() +
                               " (body: " + snippet(body) + ")");
    }
    throw ConfigError("no response parser for synthetic shape");
}

std::uint64_t hash_seed(std::string_view data) {
    // First 16 hex digits of the SHA-256.
    return std::stoull(sha256_hex(data).substr(0, 16), nullptr, 16);
}

// Offline provider that marks its essays with a recognizable signature and
// answers detection prompts from that signature, i.e. it echoes ground
// truth. Exists for plumbing tests and offline pipeline runs.
class MockEchoBackend {
   public:
    explicit MockEchoBackend(const ProviderProfile& profile) : name_(profile.name) {}

    std::string respond(const PromptTemplates& templates, const std::string& prompt) const {
        auto classified = classify_prompt(templates, prompt);
        if (!classified) return "mock response: " + prompt;
        const auto& [kind, payload] = *classified;
        switch (kind) {
            case PromptKind::EssayGeneration: {
                std::string text = "Synthetic essay regarding " + payload + ".";
                std::size_t extra = 2 + hash_seed(name_ + "|" + payload) % 3;
                for (std::size_t i = 0; i < extra; ++i)
                    text += " It restates " + payload + " in slightly different words.";
                return text + " " + signature();
            }
            case PromptKind::Paraphrase:
                return "In other words: " + payload;
            case PromptKind::SelfDetect:
                return payload.find(signature()) != std::string::npos ? "TRUE" : "FALSE";
            case PromptKind::CrossDetect:
                return payload.find("[sig:") != std::string::npos ? "AI" : "Human";
        }
        return "mock response: " + prompt;
    }

   private:
    std::string signature() const { return "[sig:" + name_ + "]"; }
    std::string name_;
};

// The synthetic autoregressive provider: essays are sampled from its
// learned next-token distribution, and detection answers come from scoring
// the paragraph's likelihood against a calibrated threshold.
class MarkovBackend {
   public:
    explicit MarkovBackend(const ProviderProfile& profile)
        : settings_(profile.markov),
          model_(train(profile)),
          threshold_(calibrate(profile)) {}

    std::string respond(const PromptTemplates& templates, const std::string& prompt) const {
        auto classified = classify_prompt(templates, prompt);
        PromptKind kind = classified ? classified->first : PromptKind::EssayGeneration;
        const std::string& payload = classified ? classified->second : prompt;
        switch (kind) {
            case PromptKind::EssayGeneration:
                return generate_text(hash_seed(payload) ^ settings_.seed);
            case PromptKind::Paraphrase:
                return generate_text(hash_seed(payload) ^ settings_.seed ^ 0x70617261ULL);
            case PromptKind::SelfDetect:
                return self_match(model_, tokenize_words(payload), threshold_) ? "TRUE" : "FALSE";
            case PromptKind::CrossDetect:
                return self_match(model_, tokenize_words(payload), threshold_) ? "AI" : "Human";
        }
        return generate_text(hash_seed(prompt) ^ settings_.seed);
    }

    const MarkovModel& model() const { return model_; }
    double threshold() const { return threshold_; }

   private:
    MarkovModel train(const ProviderProfile& profile) const {
        const MarkovSettings& s = profile.markov;
        std::vector<TokenSeq> texts;
        if (!s.train_file.empty()) {
            std::string raw = read_file(s.train_file);
            std::string line;
            for (char c : raw) {
                if (c == '\n') {
                    if (auto tokens = tokenize_words(line); !tokens.empty())
                        texts.push_back(std::move(tokens));
                    line.clear();
                } else {
                    line.push_back(c);
                }
            }
            if (auto tokens = tokenize_words(line); !tokens.empty())
                texts.push_back(std::move(tokens));
        } else {
            texts = stylized_corpus(s.style, s.corpus_tokens, s.seed);
        }
        return MarkovModel::train(texts, s.order, s.alpha);
    }

    double calibrate(const ProviderProfile& profile) const {
        const MarkovSettings& s = profile.markov;
        std::vector<TokenSeq> own;
        for (std::size_t i = 0; i < s.calibration_samples; ++i) {
            TokenSeq sample = model_.generate(s.seed * 0x9e3779b97f4a7c15ULL + i, s.generate_tokens);
            if (!sample.empty()) own.push_back(std::move(sample));
        }
        std::vector<TokenSeq> other =
            stylized_corpus(s.other_style, s.calibration_samples * 16, s.seed + 101);
        if (other.size() > s.calibration_samples) other.resize(s.calibration_samples);
        return calibrate_threshold(model_, own, other);
    }

    std::string generate_text(std::uint64_t seed) const {
        for (std::uint64_t bump = 0; bump < 64; ++bump) {
            TokenSeq tokens = model_.generate(seed + bump, settings_.generate_tokens);
            if (tokens.empty()) continue;
            std::string text;
            for (std::size_t i = 0; i < tokens.size(); ++i) {
                if (i > 0) text += ' ';
                text += tokens[i];
            }
            return text + ".";
        }
        throw TransportFailure("markov provider produced only empty sequences");
    }

    MarkovSettings settings_;
    MarkovModel model_;
    double threshold_;
};

class ProviderCompleter : public Completer {
   public:
    ProviderCompleter(ProviderProfile profile, const PromptTemplates& templates, ReplayCache& cache,
                      std::shared_ptr<Transport> transport, RetryOptions retry)
        : profile_(std::move(profile)),
          templates_(templates),
          cache_(cache),
          transport_(std::move(transport)),
          retry_(retry) {
        if (profile_.request_shape == RequestShape::MockEcho)
            mock_ = std::make_unique<MockEchoBackend>(profile_);
        if (profile_.request_shape == RequestShape::Markov)
            markov_ = std::make_unique<MarkovBackend>(profile_);
    }

    const ProviderProfile& profile() const override { return profile_; }

    Completion complete(const std::string& prompt) override {
        if (prompt.empty()) throw EmptyPayload("empty prompt for provider '" + profile_.name + "'");
        std::string key =
            cache_key(profile_.name, profile_.model_id, sampling_json(profile_.sampling), prompt);
        switch (cache_.mode()) {
            case CacheMode::Replay: {
                auto entry = cache_.lookup(key);
                if (!entry)
                    throw CacheMiss("replay cache miss for provider '" + profile_.name +
                                    "' (key " + key + ")");
                return Completion{entry->response, entry->recorded_at, key};
            }
            case CacheMode::Record: {
                if (auto entry = cache_.lookup(key))
                    return Completion{entry->response, entry->recorded_at, key};
                CacheEntry entry = cache_.store(key, invoke_backend(prompt));
                return Completion{entry.response, entry.recorded_at, key};
            }
            case CacheMode::Passthrough:
                return Completion{invoke_backend(prompt), now_utc_iso8601(), key};
        }
        throw ConfigError("unreachable cache mode");
    }

   private:
    std::string invoke_backend(const std::string& prompt) {
        if (mock_) return mock_->respond(templates_, prompt);
        if (markov_) return markov_->respond(templates_, prompt);
        std::string api_key = require_api_key(profile_);
        WireRequest req = build_request(profile_, prompt, api_key);
        std::string body =
            post_with_retries(*transport_, profile_.endpoint, req.headers, req.body, retry_);
        return parse_completion_body(profile_, body);
    }

    ProviderProfile profile_;
    const PromptTemplates& templates_;
    ReplayCache& cache_;
    std::shared_ptr<Transport> transport_;
    RetryOptions retry_;
    std::unique_ptr<MockEchoBackend> mock_;
    std::unique_ptr<MarkovBackend> markov_;
};

}  // namespace

ProviderHost::ProviderHost(std::vector<ProviderProfile> profiles, PromptTemplates templates,
                           ReplayCache& cache, std::shared_ptr<Transport> transport,
                           RetryOptions retry)
    : templates_(std::move(templates)) {
    for (auto& profile : profiles) {
        for (const auto& existing : completers_) {
            if (existing->profile().name == profile.name)
                throw ConfigError("duplicate provider name: " + profile.name);
        }
        completers_.push_back(std::make_unique<ProviderCompleter>(std::move(profile), templates_,
                                                                  cache, transport, retry));
    }
}

ProviderHost::~ProviderHost() = default;

Completer& ProviderHost::completer(const std::string& name) {
    for (auto& c : completers_)
        if (c->profile().name == name) return *c;
    throw ConfigError("unknown provider: " + name);
}

const ProviderProfile& ProviderHost::profile(const std::string& name) const {
    for (const auto& c : completers_)
        if (c->profile().name == name) return c->profile();
    throw ConfigError("unknown provider: " + name);
}

std::vector<std::string> ProviderHost::provider_names() const {
    std::vector<std::string> names;
    names.reserve(completers_.size());
    for (const auto& c : completers_) names.push_back(c->profile().name);
    return names;
}

BaselineOutcome baseline_detect(const DetectorClient& client, ReplayCache& cache,
                                Transport& transport, const std::string& text,
                                const RetryOptions& retry) {
    if (text.empty()) throw EmptyPayload("empty text for detector '" + client.name + "'");
    std::string key = cache_key(client.name, client.endpoint,
                                nlohmann::json{{"score_field", client.score_field}}, text);

    std::string body;
    std::string recorded_at;
    auto fetch_live = [&]() {
        HttpHeaders headers;
        if (!client.auth_env_var.empty()) {
            const char* api_key = std::getenv(client.auth_env_var.c_str());
            if (api_key == nullptr || *api_key == '\0')
                throw AuthMissing("environment variable " + client.auth_env_var +
                                  " is not set (detector '" + client.name + "')");
            headers.emplace_back(client.auth_header, client.auth_header == "Authorization"
                                                         ? "Bearer " + std::string(api_key)
                                                         : std::string(api_key));
        }
        nlohmann::json req{{client.text_field, text}};
        return post_with_retries(transport, client.endpoint, headers, req.dump(), retry);
    };

    switch (cache.mode()) {
        case CacheMode::Replay: {
            auto entry = cache.lookup(key);
            if (!entry)
                throw CacheMiss("replay cache miss for detector '" + client.name + "' (key " + key +
                                ")");
            body = entry->response;
            recorded_at = entry->recorded_at;
            break;
        }
        case CacheMode::Record: {
            if (auto cached = cache.lookup(key)) {
                body = cached->response;
                recorded_at = cached->recorded_at;
            } else {
                CacheEntry stored = cache.store(key, fetch_live());
                body = stored.response;
                recorded_at = stored.recorded_at;
            }
            break;
        }
        case CacheMode::Passthrough:
            body = fetch_live();
            recorded_at = now_utc_iso8601();
            break;
    }

    double score = 0.0;
    try {
        nlohmann::json j = nlohmann::json::parse(body);
        if (!j.contains(client.score_field) || !j.at(client.score_field).is_number())
            throw MalformedScore("detector '" + client.name + "' response lacks numeric field '" +
                                 client.score_field + "': " + snippet(body));
        score = j.at(client.score_field).get<double>();
    } catch (const nlohmann::json::exception&) {
        throw MalformedScore("detector '" + client.name +
                             "' returned a non-JSON body: " + snippet(body));
    }
    if (score < 0.0 || score > 1.0)
        throw MalformedScore("detector '" + client.name + "' score " + std::to_string(score) +
                             " outside [0, 1]");

    BaselineOutcome outcome;
    outcome.score = score;
    outcome.cache_key = key;
    outcome.recorded_at = recorded_at;
    outcome.verdict.kind = score > client.threshold ? VerdictKind::OriginAi : VerdictKind::OriginHuman;
    outcome.verdict.raw_response = body;
    return outcome;
}

std::optional<std::pair<PromptKind, std::string>> classify_prompt(const PromptTemplates& templates,
                                                                  const std::string& prompt) {
    static constexpr PromptKind kKinds[] = {PromptKind::SelfDetect, PromptKind::CrossDetect,
                                            PromptKind::Paraphrase, PromptKind::EssayGeneration};
    for (PromptKind kind : kKinds) {
        const std::string& tpl = templates.for_kind(kind);
        std::size_t pos = tpl.find("{payload}");
        if (pos == std::string::npos) continue;
        std::string prefix = tpl.substr(0, pos);
        std::string suffix = tpl.substr(pos + std::string("{payload}").size());
        if (prompt.size() < prefix.size() + suffix.size()) continue;
        if (prompt.compare(0, prefix.size(), prefix) != 0) continue;
        if (!suffix.empty() &&
            prompt.compare(prompt.size() - suffix.size(), suffix.size(), suffix) != 0)
            continue;
        std::string payload =
            prompt.substr(prefix.size(), prompt.size() - prefix.size() - suffix.size());
        if (payload.empty()) continue;
        return std::make_pair(kind, payload);
    }
    return std::nullopt;
}

}  // namespace selfdetect
