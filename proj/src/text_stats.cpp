#include "selfdetect/text_stats.hpp"

#include <cstdint>

namespace selfdetect {
namespace {

bool is_unicode_space(char32_t cp) {
    switch (cp) {
        case U'\t':
        case U'\n':
        case U'\v':
        case U'\f':
        case U'\r':
        case U' ':
        case 0x0085:  // NEL
        case 0x00A0:  // NBSP
        case 0x1680:
        case 0x2028:
        case 0x2029:
        case 0x202F:
        case 0x205F:
        case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

// Decodes one UTF-8 codepoint at `i`, advancing `i`. Invalid bytes are
// consumed one at a time and returned as-is so malformed input still gets
// deterministic counts.
char32_t next_codepoint(std::string_view s, std::size_t& i) {
    unsigned char b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    char32_t cp = b0;
    if (b0 >= 0xF0)
        len = 4, cp = b0 & 0x07;
    else if (b0 >= 0xE0)
        len = 3, cp = b0 & 0x0F;
    else if (b0 >= 0xC0)
        len = 2, cp = b0 & 0x1F;
    if (len == 1 || i + len > s.size()) {
        ++i;
        return b0 < 0x80 ? cp : 0xFFFD;
    }
    for (std::size_t j = 1; j < len; ++j) {
        unsigned char cont = static_cast<unsigned char>(s[i + j]);
        if ((cont & 0xC0) != 0x80) {
            ++i;
            return 0xFFFD;
        }
        cp = (cp << 6) | (cont & 0x3F);
    }
    i += len;
    return cp;
}

bool is_terminator(char32_t cp) { return cp == U'.' || cp == U'!' || cp == U'?'; }

}  // namespace

TextStats compute_text_stats(std::string_view text) {
    TextStats stats;

    bool in_word = false;
    bool in_terminator_run = false;
    std::size_t i = 0;
    while (i < text.size()) {
        char32_t cp = next_codepoint(text, i);
        bool space = is_unicode_space(cp);

        if (cp == U'\n') ++stats.newline_count;

        if (in_terminator_run && !is_terminator(cp)) {
            in_terminator_run = false;
            if (space) ++stats.sentence_count;
        }
        if (is_terminator(cp)) in_terminator_run = true;

        if (space) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++stats.word_count;
        }
    }
    if (in_terminator_run) ++stats.sentence_count;  // run ends at end-of-text

    if (stats.sentence_count == 0 && stats.word_count > 0) stats.sentence_count = 1;
    if (stats.sentence_count > 0) {
        stats.words_per_sentence =
            static_cast<double>(stats.word_count) / static_cast<double>(stats.sentence_count);
    }
    return stats;
}

}  // namespace selfdetect
