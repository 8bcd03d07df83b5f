#pragma once

#include <cstdint>
#include <string_view>

namespace selfdetect {

struct TextStats {
    std::int64_t word_count = 0;
    std::int64_t sentence_count = 0;
    double words_per_sentence = 0.0;
    std::int64_t newline_count = 0;

    bool operator==(const TextStats&) const = default;
};

// Counting rules:
//   - a word is a maximal run of non-whitespace (Unicode whitespace splits);
//   - a sentence ends at a maximal run of '.', '!', '?' followed by
//     whitespace or end-of-text; unterminated text with >= 1 word counts
//     as one sentence;
//   - words_per_sentence = word_count / sentence_count (0 when no sentence);
//   - newline_count counts '\n' after normalizing "\r\n" to "\n".
// Pure and deterministic; empty input yields all zeros.
TextStats compute_text_stats(std::string_view text);

}  // namespace selfdetect
