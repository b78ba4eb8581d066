#pragma once

#include <string>
#include <string_view>
#include <vector>

// Minimal UTF-8 handling for term normalization. Case folding covers the
// simple (one-to-one) mappings of Latin, Greek and Cyrillic scripts, which
// is what the shipped anti-dictionaries need.
namespace presy::unicode {

inline constexpr char32_t replacement_char = 0xFFFD;

// Invalid sequences decode to U+FFFD, one per offending byte.
std::u32string decode_utf8(std::string_view text);
void append_utf8(std::string& out, char32_t cp);
std::string encode_utf8(std::u32string_view text);

char32_t simple_fold(char32_t cp) noexcept;
bool is_word_char(char32_t cp) noexcept;
bool is_space(char32_t cp) noexcept;

} // namespace presy::unicode
