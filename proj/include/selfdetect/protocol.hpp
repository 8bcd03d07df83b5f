#pragma once

#include <string>
#include <string_view>

namespace selfdetect {

enum class PromptKind { EssayGeneration, Paraphrase, SelfDetect, CrossDetect };

std::string to_string(PromptKind kind);
PromptKind prompt_kind_from_string(const std::string& s);

// One template per prompt kind, each containing a single {payload}
// placeholder. Defaults are the study's templates; a config file section can
// replace any of them for prompt-variation runs.
struct PromptTemplates {
    std::string essay_generation;
    std::string paraphrase;
    std::string self_detect;
    std::string cross_detect;

    static PromptTemplates defaults();
    const std::string& for_kind(PromptKind kind) const;
    std::string& for_kind(PromptKind kind);
};

// Substitutes the payload into the template for `kind`. The payload is never
// altered; the result always contains it verbatim. Throws EmptyPayload, or
// ConfigError when the template lacks the placeholder.
std::string render_prompt(const PromptTemplates& templates, PromptKind kind,
                          std::string_view payload);

enum class VerdictKind { SelfMatch, SelfNoMatch, OriginHuman, OriginAi, Unparseable };

std::string to_string(VerdictKind kind);
VerdictKind verdict_kind_from_string(const std::string& s);

struct Verdict {
    VerdictKind kind = VerdictKind::Unparseable;
    std::string raw_response;

    bool operator==(const Verdict&) const = default;
};

// Case-insensitive scan for the first standalone TRUE/FALSE token
// ("falsely" does not count). No match yields Unparseable; the raw response
// is always preserved. Total and pure.
Verdict parse_self_response(std::string_view raw);

// Same scan for the first standalone "human" or "ai" token; first
// occurrence wins when both appear.
Verdict parse_origin_response(std::string_view raw);

}  // namespace selfdetect
