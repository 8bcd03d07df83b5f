#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace selfdetect {

using Token = std::string;
using TokenSeq = std::vector<Token>;

// Lowercased word tokens; alphanumeric runs, with punctuation and whitespace
// as boundaries. Bytes >= 0x80 stay inside tokens so UTF-8 words survive.
TokenSeq tokenize_words(std::string_view text);

// Order-k next-token model with add-alpha smoothing.
//
// Probabilities follow
//     P(t | c) = (count(c, t) + alpha) / (total(c) + alpha * |V|)
// where V is the observed vocabulary plus the end token. A context never
// seen in training has total 0, which reduces to the uniform 1/|V|; a token
// outside V scores with count 0. The begin token pads contexts and is never
// predicted.
class MarkovModel {
   public:
    static constexpr const char* kBos = "<s>";
    static constexpr const char* kEos = "</s>";

    // Counts every k-gram -> next transition over the texts, BOS-padded and
    // EOS-terminated. Requires order >= 1, alpha > 0, and at least one
    // non-empty text (else EmptyCorpus).
    static MarkovModel train(const std::vector<TokenSeq>& texts, int order, double alpha);

    // Smoothed conditional for `next` given the last `order()` tokens of
    // `context` (BOS-padded on the left when shorter).
    double prob(const TokenSeq& context, const Token& next) const;

    // Autoregressive sampling from the BOS context until EOS or max_tokens.
    // Deterministic for a fixed seed. The returned sequence excludes EOS and
    // may be empty when EOS is drawn first.
    TokenSeq generate(std::uint64_t seed, std::size_t max_tokens) const;

    // Mean negative log-likelihood per scored position, including the final
    // EOS. Smoothing keeps every term finite. Requires a non-empty sequence.
    double score(const TokenSeq& tokens) const;

    int order() const { return order_; }
    double alpha() const { return alpha_; }
    std::size_t vocab_size() const { return vocab_.size(); }
    const std::vector<Token>& vocab() const { return vocab_; }

    // Stored contexts, for normalization checks. Keys are kgram joins.
    std::vector<TokenSeq> contexts() const;

   private:
    struct ContextCounts {
        std::map<Token, std::int64_t> next;
        std::int64_t total = 0;
    };

    std::string context_key(const TokenSeq& context) const;

    int order_ = 1;
    double alpha_ = 1.0;
    std::vector<Token> vocab_;  // sorted; includes EOS, excludes BOS
    std::unordered_map<std::string, ContextCounts> counts_;
};

// Midpoint between the mean NLL of the model's own samples and of foreign
// samples. Throws DegenerateCalibration when the means coincide. A sequence
// scoring strictly below the threshold counts as the model's own.
double calibrate_threshold(const MarkovModel& model, const std::vector<TokenSeq>& own_samples,
                           const std::vector<TokenSeq>& other_samples);

bool self_match(const MarkovModel& model, const TokenSeq& tokens, double threshold);

// Deterministic synthetic prose in one of two styles with disjoint
// vocabularies; one sentence per returned sequence, at least min_tokens in
// total. Styles 0 and 1 share no words, so models trained on them are
// cleanly separable.
std::vector<TokenSeq> stylized_corpus(int style, std::size_t min_tokens, std::uint64_t seed);

}  // namespace selfdetect
