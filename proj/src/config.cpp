#include "selfdetect/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "selfdetect/errors.hpp"
#include "selfdetect/protocol.hpp"

namespace selfdetect {

using nlohmann::json;

const ProviderProfile& Config::provider(const std::string& name) const {
    for (const auto& p : providers)
        if (p.name == name) return p;
    throw ConfigError("unknown provider: " + name);
}

const DetectorClient& Config::detector(const std::string& name) const {
    for (const auto& d : detectors)
        if (d.name == name) return d;
    throw ConfigError("unknown detector: " + name);
}

namespace {

ProviderProfile provider_from_json(const json& j) {
    ProviderProfile p;
    try {
        p.name = j.at("name").get<std::string>();
        p.request_shape = request_shape_from_string(j.at("request_shape").get<std::string>());
        p.endpoint = j.value("endpoint", std::string{});
        p.model_id = j.value("model_id", std::string{});
        p.auth_env_var = j.value("auth_env_var", std::string{});
        p.parallelism = j.value("parallelism", 2);
        if (j.contains("sampling")) {
            const json& s = j.at("sampling");
            p.sampling.temperature = s.value("temperature", 1.0);
            p.sampling.max_tokens = s.value("max_tokens", 512);
        }
        if (j.contains("markov")) {
            const json& m = j.at("markov");
            p.markov.order = m.value("order", 2);
            p.markov.alpha = m.value("alpha", 0.1);
            p.markov.seed = m.value("seed", std::uint64_t{1});
            p.markov.style = m.value("style", 0);
            p.markov.other_style = m.value("other_style", 1);
            p.markov.corpus_tokens = m.value("corpus_tokens", std::size_t{10000});
            p.markov.calibration_samples = m.value("calibration_samples", std::size_t{20});
            p.markov.generate_tokens = m.value("generate_tokens", std::size_t{120});
            p.markov.train_file = m.value("train_file", std::string{});
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed provider profile: ") + e.what());
    }
    if (p.name.empty()) throw ConfigError("provider profile with empty name");
    if (p.sampling.temperature < 0.0)
        throw ConfigError("provider '" + p.name + "': temperature must be >= 0");
    if (p.parallelism < 1) throw ConfigError("provider '" + p.name + "': parallelism must be >= 1");
    bool live = p.request_shape == RequestShape::OpenAiChat ||
                p.request_shape == RequestShape::AnthropicMessages ||
                p.request_shape == RequestShape::GoogleGenerateContent;
    if (live && p.endpoint.empty())
        throw ConfigError("provider '" + p.name + "': live shapes need an endpoint");
    return p;
}

DetectorClient detector_from_json(const json& j) {
    DetectorClient d;
    try {
        d.name = j.at("name").get<std::string>();
        d.endpoint = j.at("endpoint").get<std::string>();
        d.text_field = j.value("text_field", std::string{"text"});
        d.score_field = j.value("score_field", std::string{"ai_probability"});
        d.threshold = j.value("threshold", 0.5);
        d.auth_env_var = j.value("auth_env_var", std::string{});
        d.auth_header = j.value("auth_header", std::string{"Authorization"});
        d.parallelism = j.value("parallelism", 2);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed detector client: ") + e.what());
    }
    if (d.threshold < 0.0 || d.threshold > 1.0)
        throw ConfigError("detector '" + d.name + "': threshold must be in [0, 1]");
    return d;
}

}  // namespace

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": invalid JSON: " + e.what());
    }

    Config cfg;
    try {
        std::set<std::string> names;
        for (const json& pj : j.value("providers", json::array())) {
            ProviderProfile p = provider_from_json(pj);
            if (!names.insert(p.name).second)
                throw ConfigError("duplicate provider name: " + p.name);
            cfg.providers.push_back(std::move(p));
        }
        std::set<std::string> detector_names;
        for (const json& dj : j.value("detectors", json::array())) {
            DetectorClient d = detector_from_json(dj);
            if (!detector_names.insert(d.name).second)
                throw ConfigError("duplicate detector name: " + d.name);
            cfg.detectors.push_back(std::move(d));
        }
        if (j.contains("prompts")) {
            for (const auto& [key, value] : j.at("prompts").items()) {
                PromptKind kind = prompt_kind_from_string(key);
                std::string tpl = value.get<std::string>();
                if (tpl.find("{payload}") == std::string::npos)
                    throw ConfigError("prompt override for " + key + " lacks {payload}");
                cfg.templates.for_kind(kind) = tpl;
            }
        }
        if (j.contains("topics_file"))
            cfg.topics_file = j.at("topics_file").get<std::string>();
        for (const json& c : j.value("corpora", json::array()))
            cfg.corpora.emplace_back(c.get<std::string>());
        if (j.contains("cache")) {
            const json& c = j.at("cache");
            if (c.contains("path")) cfg.cache_path = c.at("path").get<std::string>();
            cfg.cache_mode = cache_mode_from_string(c.value("mode", std::string{"record"}));
        }
        cfg.unparseable_policy = unparseable_policy_from_string(
            j.value("unparseable_policy", std::string{"count_as_error"}));
        cfg.n_per_class = j.value("n_per_class", std::size_t{50});
        cfg.rng_seed = j.value("rng_seed", std::uint64_t{0});
        if (j.contains("retry")) {
            const json& r = j.at("retry");
            cfg.retry.max_attempts = r.value("max_attempts", 3);
            cfg.retry.backoff_base_ms = r.value("backoff_base_ms", 250);
        }
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }

    if (cfg.n_per_class < 1) throw ConfigError("n_per_class must be >= 1");
    auto base = path.parent_path();
    auto resolve = [&](std::filesystem::path& p) {
        if (!p.empty() && p.is_relative()) p = base / p;
    };
    resolve(cfg.topics_file);
    resolve(cfg.cache_path);
    for (auto& c : cfg.corpora) resolve(c);
    if (!cfg.topics_file.empty() && !std::filesystem::exists(cfg.topics_file))
        throw ConfigError("topics file does not exist: " + cfg.topics_file.string());
    for (const auto& c : cfg.corpora)
        if (!std::filesystem::exists(c))
            throw ConfigError("corpus file does not exist: " + c.string());
    return cfg;
}

std::vector<std::string> load_topics(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open topics file: " + path.string());
    std::vector<std::string> topics;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
            line.pop_back();
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos) continue;
        std::string trimmed = line.substr(start);
        if (trimmed.empty() || trimmed[0] == '#') continue;
        topics.push_back(std::move(trimmed));
    }
    return topics;
}

}  // namespace selfdetect
