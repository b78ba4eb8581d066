#include "presy/unicode.hpp"

namespace presy::unicode {

std::u32string decode_utf8(std::string_view text)
{
    std::u32string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        const auto b0 = static_cast<unsigned char>(text[i]);
        int len = 0;
        char32_t cp = 0;
        if (b0 < 0x80) {
            out.push_back(b0);
            ++i;
            continue;
        } else if ((b0 & 0xE0) == 0xC0) {
            len = 2;
            cp = b0 & 0x1F;
        } else if ((b0 & 0xF0) == 0xE0) {
            len = 3;
            cp = b0 & 0x0F;
        } else if ((b0 & 0xF8) == 0xF0) {
            len = 4;
            cp = b0 & 0x07;
        } else {
            out.push_back(replacement_char);
            ++i;
            continue;
        }
        if (i + len > text.size()) {
            out.push_back(replacement_char);
            ++i;
            continue;
        }
        bool ok = true;
        for (int k = 1; k < len; ++k) {
            const auto b = static_cast<unsigned char>(text[i + k]);
            if ((b & 0xC0) != 0x80) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (b & 0x3F);
        }
        // Reject overlong forms, surrogates and out-of-range values.
        static constexpr char32_t min_for_len[] = {0, 0, 0x80, 0x800, 0x10000};
        if (!ok || cp < min_for_len[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            out.push_back(replacement_char);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

void append_utf8(std::string& out, char32_t cp)
{
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::string encode_utf8(std::u32string_view text)
{
    std::string out;
    out.reserve(text.size());
    for (char32_t cp : text) append_utf8(out, cp);
    return out;
}

char32_t simple_fold(char32_t cp) noexcept
{
    if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;

    // Latin-1 Supplement
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
    if (cp == 0xB5) return 0x3BC;

    // Latin Extended-A
    if ((cp >= 0x100 && cp <= 0x12F) || (cp >= 0x132 && cp <= 0x137) || (cp >= 0x14A && cp <= 0x177))
        return (cp % 2 == 0) ? cp + 1 : cp;
    if ((cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E))
        return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp == 0x178) return 0xFF;
    if (cp == 0x17F) return 's';

    // Greek
    if (cp == 0x386) return 0x3AC;
    if (cp >= 0x388 && cp <= 0x38A) return cp + 37;
    if (cp == 0x38C) return 0x3CC;
    if (cp == 0x38E || cp == 0x38F) return cp + 63;
    if ((cp >= 0x391 && cp <= 0x3A1) || (cp >= 0x3A3 && cp <= 0x3AB)) return cp + 32;
    if (cp == 0x3C2) return 0x3C3;

    // Cyrillic
    if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
    if (cp >= 0x410 && cp <= 0x42F) return cp + 32;
    if ((cp >= 0x460 && cp <= 0x481) || (cp >= 0x48A && cp <= 0x4BF))
        return (cp % 2 == 0) ? cp + 1 : cp;

    // Latin Extended Additional
    if ((cp >= 0x1E00 && cp <= 0x1E95) || (cp >= 0x1EA0 && cp <= 0x1EFF))
        return (cp % 2 == 0) ? cp + 1 : cp;

    // Fullwidth Latin capitals
    if (cp >= 0xFF21 && cp <= 0xFF3A) return cp + 32;

    return cp;
}

bool is_space(char32_t cp) noexcept
{
    switch (cp) {
    case ' ': case '\t': case '\n': case '\v': case '\f': case '\r':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000: case 0xFEFF:
        return true;
    default:
        return cp >= 0x2000 && cp <= 0x200B;
    }
}

bool is_word_char(char32_t cp) noexcept
{
    if (cp < 0x80)
        return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');

    // Latin-1 punctuation and symbols, keeping the three letters in the block.
    if (cp <= 0xBF) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;
    if (cp == 0xD7 || cp == 0xF7) return false;

    if (cp == 0x37E || cp == 0x387) return false;                 // Greek punctuation
    if (cp >= 0x55A && cp <= 0x55F) return false;                 // Armenian punctuation
    if (cp == 0x589 || cp == 0x5BE || cp == 0x5C0 || cp == 0x5C3) return false;
    if (cp >= 0x60C && cp <= 0x60D) return false;                 // Arabic comma
    if (cp == 0x61B || cp == 0x61F || cp == 0x6D4) return false;
    if (cp == 0x964 || cp == 0x965) return false;                 // Devanagari danda
    if (cp == 0x1680 || cp == 0x180E) return false;

    if (cp >= 0x2000 && cp <= 0x2BFF) return false;               // punctuation, symbols, arrows, math, shapes
    if (cp >= 0x2E00 && cp <= 0x2E7F) return false;               // supplemental punctuation
    if (cp >= 0x3000 && cp <= 0x303F) return false;               // CJK symbols and punctuation
    if (cp >= 0xE000 && cp <= 0xF8FF) return false;               // private use
    if (cp >= 0xFE10 && cp <= 0xFE1F) return false;               // vertical forms
    if (cp >= 0xFE30 && cp <= 0xFE6F) return false;               // CJK compatibility / small forms
    if (cp == 0xFEFF) return false;
    if ((cp >= 0xFF00 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
        (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65))
        return false;                                             // fullwidth punctuation
    if (cp >= 0xFFF0) return cp > 0xFFFF && !(cp >= 0x1F000 && cp <= 0x1FAFF); // specials, emoji
    return true;
}

} // namespace presy::unicode
