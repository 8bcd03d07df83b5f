#include "selfdetect/markov.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <set>

#include "selfdetect/errors.hpp"

namespace selfdetect {
namespace {

bool is_token_char(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

char to_lower_ascii(unsigned char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

// Uniform double in [0, 1) with 53 random bits; keeps sampling independent
// of the standard library's distribution implementation.
double next_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

TokenSeq tokenize_words(std::string_view text) {
    TokenSeq tokens;
    std::string current;
    for (char ch : text) {
        if (is_token_char(static_cast<unsigned char>(ch))) {
            current.push_back(to_lower_ascii(static_cast<unsigned char>(ch)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::string MarkovModel::context_key(const TokenSeq& context) const {
    // Last `order_` tokens, BOS-padded on the left.
    std::string key;
    std::size_t have = context.size();
    std::size_t take = std::min<std::size_t>(have, static_cast<std::size_t>(order_));
    for (int i = 0; i < order_ - static_cast<int>(take); ++i) {
        key += kBos;
        key += '\x1f';
    }
    for (std::size_t i = have - take; i < have; ++i) {
        key += context[i];
        key += '\x1f';
    }
    return key;
}

MarkovModel MarkovModel::train(const std::vector<TokenSeq>& texts, int order, double alpha) {
    if (order < 1) throw ConfigError("markov order must be >= 1");
    if (!(alpha > 0.0)) throw ConfigError("markov alpha must be > 0");
    bool any_nonempty = false;
    for (const auto& t : texts)
        if (!t.empty()) any_nonempty = true;
    if (!any_nonempty) throw EmptyCorpus("markov training needs at least one non-empty text");

    MarkovModel model;
    model.order_ = order;
    model.alpha_ = alpha;

    std::set<Token> vocab;
    const Token eos{kEos};
    vocab.insert(eos);
    for (const auto& text : texts) {
        if (text.empty()) continue;
        TokenSeq context;
        for (std::size_t i = 0; i <= text.size(); ++i) {
            const Token& next = (i < text.size()) ? text[i] : eos;
            auto& slot = model.counts_[model.context_key(context)];
            ++slot.next[next];
            ++slot.total;
            if (i < text.size()) {
                vocab.insert(text[i]);
                context.push_back(text[i]);
            }
        }
    }
    model.vocab_.assign(vocab.begin(), vocab.end());
    return model;
}

double MarkovModel::prob(const TokenSeq& context, const Token& next) const {
    std::int64_t count = 0;
    std::int64_t total = 0;
    auto it = counts_.find(context_key(context));
    if (it != counts_.end()) {
        total = it->second.total;
        auto jt = it->second.next.find(next);
        if (jt != it->second.next.end()) count = jt->second;
    }
    return (static_cast<double>(count) + alpha_) /
           (static_cast<double>(total) + alpha_ * static_cast<double>(vocab_.size()));
}

TokenSeq MarkovModel::generate(std::uint64_t seed, std::size_t max_tokens) const {
    std::mt19937_64 rng(seed);
    TokenSeq out;
    TokenSeq context;
    while (out.size() < max_tokens) {
        double u = next_unit(rng);
        double cumulative = 0.0;
        const Token* chosen = &vocab_.back();
        for (const Token& candidate : vocab_) {
            cumulative += prob(context, candidate);
            if (u < cumulative) {
                chosen = &candidate;
                break;
            }
        }
        if (*chosen == kEos) break;
        out.push_back(*chosen);
        context.push_back(*chosen);
    }
    return out;
}

double MarkovModel::score(const TokenSeq& tokens) const {
    if (tokens.empty()) throw EmptyCorpus("cannot score an empty sequence");
    double nll = 0.0;
    const Token eos{kEos};
    TokenSeq context;
    for (std::size_t i = 0; i <= tokens.size(); ++i) {
        const Token& next = (i < tokens.size()) ? tokens[i] : eos;
        nll -= std::log(prob(context, next));
        if (i < tokens.size()) context.push_back(tokens[i]);
    }
    return nll / static_cast<double>(tokens.size() + 1);
}

std::vector<TokenSeq> MarkovModel::contexts() const {
    std::vector<TokenSeq> out;
    out.reserve(counts_.size());
    for (const auto& [key, unused] : counts_) {
        TokenSeq ctx;
        std::string token;
        for (char c : key) {
            if (c == '\x1f') {
                ctx.push_back(token);
                token.clear();
            } else {
                token.push_back(c);
            }
        }
        out.push_back(std::move(ctx));
    }
    return out;
}

double calibrate_threshold(const MarkovModel& model, const std::vector<TokenSeq>& own_samples,
                           const std::vector<TokenSeq>& other_samples) {
    if (own_samples.empty() || other_samples.empty())
        throw ConfigError("calibration needs non-empty sample sets");
    auto mean_score = [&](const std::vector<TokenSeq>& samples) {
        double sum = 0.0;
        for (const auto& s : samples) sum += model.score(s);
        return sum / static_cast<double>(samples.size());
    };
    double own_mean = mean_score(own_samples);
    double other_mean = mean_score(other_samples);
    if (own_mean == other_mean)
        throw DegenerateCalibration("own and other mean NLL coincide at " +
                                    std::to_string(own_mean));
    return (own_mean + other_mean) / 2.0;
}

bool self_match(const MarkovModel& model, const TokenSeq& tokens, double threshold) {
    return model.score(tokens) < threshold;
}

std::vector<TokenSeq> stylized_corpus(int style, std::size_t min_tokens, std::uint64_t seed) {
    static const std::vector<std::vector<Token>> kNouns = {
        {"river", "stone", "moss", "heron", "willow", "reed", "otter", "pebble", "rain", "mist"},
        {"furnace", "gear", "piston", "rivet", "boiler", "crank", "spark", "ingot", "valve",
         "smoke"}};
    static const std::vector<std::vector<Token>> kVerbs = {
        {"drifts", "settles", "murmurs", "glides", "pools", "weaves", "ripples", "bends"},
        {"clangs", "grinds", "hammers", "roars", "flares", "churns", "rattles", "stamps"}};
    static const std::vector<std::vector<Token>> kAdjectives = {
        {"quiet", "silver", "cold", "smooth", "pale"},
        {"molten", "heavy", "loud", "rusty", "black"}};
    if (style != 0 && style != 1) throw ConfigError("stylized corpus style must be 0 or 1");

    const auto& nouns = kNouns[static_cast<std::size_t>(style)];
    const auto& verbs = kVerbs[static_cast<std::size_t>(style)];
    const auto& adjectives = kAdjectives[static_cast<std::size_t>(style)];

    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(style + 1)));
    auto pick = [&](const std::vector<Token>& pool) {
        return pool[static_cast<std::size_t>(next_unit(rng) * static_cast<double>(pool.size()))];
    };

    std::vector<TokenSeq> sentences;
    std::size_t total = 0;
    while (total < min_tokens) {
        std::size_t clauses = 3 + static_cast<std::size_t>(next_unit(rng) * 4.0);
        TokenSeq sentence;
        for (std::size_t c = 0; c < clauses; ++c) {
            if (next_unit(rng) < 0.5) sentence.push_back(pick(adjectives));
            sentence.push_back(pick(nouns));
            sentence.push_back(pick(verbs));
        }
        total += sentence.size();
        sentences.push_back(std::move(sentence));
    }
    return sentences;
}

}  // namespace selfdetect
