#include "selfdetect/protocol.hpp"

#include <array>
#include <cctype>

#include "selfdetect/errors.hpp"

namespace selfdetect {
namespace {

constexpr std::string_view kPlaceholder = "{payload}";

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

// Position of the first standalone, case-insensitive occurrence of `token`,
// or npos. Standalone means not flanked by word characters.
std::size_t find_token(std::string_view text, std::string_view token) {
    if (token.empty() || text.size() < token.size()) return std::string_view::npos;
    for (std::size_t i = 0; i + token.size() <= text.size(); ++i) {
        bool match = true;
        for (std::size_t j = 0; j < token.size(); ++j) {
            if (lower(text[i + j]) != lower(token[j])) {
                match = false;
                break;
            }
        }
        if (!match) continue;
        if (i > 0 && is_word_char(text[i - 1])) continue;
        std::size_t end = i + token.size();
        if (end < text.size() && is_word_char(text[end])) continue;
        return i;
    }
    return std::string_view::npos;
}

Verdict parse_two_way(std::string_view raw, std::string_view first_token, VerdictKind first_kind,
                      std::string_view second_token, VerdictKind second_kind) {
    std::size_t a = find_token(raw, first_token);
    std::size_t b = find_token(raw, second_token);
    Verdict v;
    v.raw_response = std::string(raw);
    if (a == std::string_view::npos && b == std::string_view::npos) {
        v.kind = VerdictKind::Unparseable;
    } else if (b == std::string_view::npos || a < b) {
        v.kind = first_kind;
    } else {
        v.kind = second_kind;
    }
    return v;
}

}  // namespace

std::string to_string(PromptKind kind) {
    switch (kind) {
        case PromptKind::EssayGeneration: return "essay_generation";
        case PromptKind::Paraphrase: return "paraphrase";
        case PromptKind::SelfDetect: return "self_detect";
        case PromptKind::CrossDetect: return "cross_detect";
    }
    return "unknown";
}

PromptKind prompt_kind_from_string(const std::string& s) {
    if (s == "essay_generation") return PromptKind::EssayGeneration;
    if (s == "paraphrase") return PromptKind::Paraphrase;
    if (s == "self_detect") return PromptKind::SelfDetect;
    if (s == "cross_detect") return PromptKind::CrossDetect;
    throw ConfigError("unknown prompt kind: " + s);
}

PromptTemplates PromptTemplates::defaults() {
    PromptTemplates t;
    t.essay_generation = "Write an essay within 250 words regarding {payload} in one paragraph";
    t.paraphrase = "Paraphrase the following paragraph: {payload}";
    t.self_detect =
        "Check if the following paragraph matches your text patterns and choice of words for "
        "generating the response. If it matches, respond TRUE; otherwise, FALSE.\n{payload}";
    t.cross_detect =
        "Check if the given paragraph matches or contains AI jargon or Human written patterns. "
        "Give your answer as either Human or AI.\n{payload}";
    return t;
}

const std::string& PromptTemplates::for_kind(PromptKind kind) const {
    switch (kind) {
        case PromptKind::EssayGeneration: return essay_generation;
        case PromptKind::Paraphrase: return paraphrase;
        case PromptKind::SelfDetect: return self_detect;
        case PromptKind::CrossDetect: return cross_detect;
    }
    return essay_generation;
}

std::string& PromptTemplates::for_kind(PromptKind kind) {
    return const_cast<std::string&>(static_cast<const PromptTemplates*>(this)->for_kind(kind));
}

std::string render_prompt(const PromptTemplates& templates, PromptKind kind,
                          std::string_view payload) {
    if (payload.empty()) throw EmptyPayload("empty payload for prompt kind " + to_string(kind));
    const std::string& tpl = templates.for_kind(kind);
    std::size_t pos = tpl.find(kPlaceholder);
    if (pos == std::string::npos)
        throw ConfigError("prompt template for " + to_string(kind) + " lacks {payload}");
    std::string out;
    out.reserve(tpl.size() + payload.size());
    out.append(tpl, 0, pos);
    out.append(payload);
    out.append(tpl, pos + kPlaceholder.size(), std::string::npos);
    return out;
}

std::string to_string(VerdictKind kind) {
    switch (kind) {
        case VerdictKind::SelfMatch: return "self_match";
        case VerdictKind::SelfNoMatch: return "self_no_match";
        case VerdictKind::OriginHuman: return "origin_human";
        case VerdictKind::OriginAi: return "origin_ai";
        case VerdictKind::Unparseable: return "unparseable";
    }
    return "unparseable";
}

VerdictKind verdict_kind_from_string(const std::string& s) {
    if (s == "self_match") return VerdictKind::SelfMatch;
    if (s == "self_no_match") return VerdictKind::SelfNoMatch;
    if (s == "origin_human") return VerdictKind::OriginHuman;
    if (s == "origin_ai") return VerdictKind::OriginAi;
    if (s == "unparseable") return VerdictKind::Unparseable;
    throw SchemaViolation("unknown verdict kind: " + s);
}

Verdict parse_self_response(std::string_view raw) {
    return parse_two_way(raw, "TRUE", VerdictKind::SelfMatch, "FALSE", VerdictKind::SelfNoMatch);
}

Verdict parse_origin_response(std::string_view raw) {
    return parse_two_way(raw, "human", VerdictKind::OriginHuman, "ai", VerdictKind::OriginAi);
}

}  // namespace selfdetect
