#include "presy/text_pipeline.hpp"

#include "presy/error.hpp"
#include "presy/unicode.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace presy {

std::string normalize(std::string_view text)
{
    const std::u32string cps = unicode::decode_utf8(text);
    std::size_t begin = 0;
    std::size_t end = cps.size();
    while (begin < end && unicode::is_space(cps[begin])) ++begin;
    while (end > begin && unicode::is_space(cps[end - 1])) --end;

    std::string out;
    out.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) unicode::append_utf8(out, unicode::simple_fold(cps[i]));
    return out;
}

std::vector<Token> segment(std::string_view text)
{
    std::vector<Token> tokens;
    std::string current;
    for (char32_t cp : unicode::decode_utf8(text)) {
        if (unicode::is_word_char(cp)) {
            unicode::append_utf8(current, unicode::simple_fold(cp));
        } else if (!current.empty()) {
            tokens.push_back({std::move(current), tokens.size()});
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back({std::move(current), tokens.size()});
    return tokens;
}

std::vector<std::string> segment_words(std::string_view text)
{
    std::vector<std::string> words;
    for (auto& token : segment(text)) words.push_back(std::move(token.surface));
    return words;
}

std::size_t char_length(std::string_view term)
{
    return static_cast<std::size_t>(std::count_if(term.begin(), term.end(), [](char c) {
        return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
    }));
}

AntiDictionary::AntiDictionary(std::string language, std::unordered_set<std::string> words)
    : language_(std::move(language)), words_(std::move(words))
{
}

AntiDictionary AntiDictionary::parse(std::string language, std::string_view contents)
{
    std::unordered_set<std::string> words;
    std::size_t pos = 0;
    while (pos <= contents.size()) {
        std::size_t eol = contents.find('\n', pos);
        if (eol == std::string_view::npos) eol = contents.size();
        std::string_view line = contents.substr(pos, eol - pos);
        pos = eol + 1;

        if (!line.empty() && line.front() == '#') continue;
        std::string word = normalize(line);
        // A stop-word is a single term; stray internal whitespace would never match a token.
        if (word.empty() || word.find_first_of(" \t") != std::string::npos) continue;
        words.insert(std::move(word));
    }
    return AntiDictionary(std::move(language), std::move(words));
}

AntiDictionary AntiDictionary::load(std::string language, const std::filesystem::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(Errc::io_error, fmt::format("cannot read anti-dictionary {}", file.string()));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(std::move(language), buffer.str());
}

bool AntiDictionary::contains(std::string_view token) const
{
    return !token.empty() && words_.find(std::string(token)) != words_.end();
}

bool is_stopword(std::string_view token, const AntiDictionary& dictionary)
{
    return dictionary.contains(token);
}

namespace {

bool all_digits(std::string_view term)
{
    return std::all_of(term.begin(), term.end(), [](char c) { return c >= '0' && c <= '9'; });
}

} // namespace

std::vector<std::string> extract_candidates(std::span<const std::string> titles,
                                            const AntiDictionary& dictionary,
                                            std::size_t cap)
{
    if (cap == 0) throw Error(Errc::invalid_argument, "candidate cap must be at least 1");

    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& title : titles) {
        for (auto& token : segment(title)) {
            if (out.size() == cap) return out;
            const std::string& term = token.surface;
            if (char_length(term) < kMinCandidateLength || all_digits(term)) continue;
            if (dictionary.contains(term)) continue;
            if (!seen.insert(term).second) continue;
            out.push_back(std::move(token.surface));
        }
    }
    return out;
}

bool is_language_code(std::string_view code) noexcept
{
    return code.size() == 2 && code[0] >= 'a' && code[0] <= 'z' && code[1] >= 'a' && code[1] <= 'z';
}

StopwordCatalog::StopwordCatalog(std::filesystem::path directory) : directory_(std::move(directory)) {}

std::shared_ptr<const AntiDictionary> StopwordCatalog::lookup(std::string_view language) const
{
    if (!is_language_code(language)) return nullptr;

    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(language); it != cache_.end()) return it->second;

    std::shared_ptr<const AntiDictionary> dict;
    const std::string lang(language);
    std::error_code ec;
    if (!directory_.empty()) {
        const auto file = directory_ / (lang + ".txt");
        if (std::filesystem::is_regular_file(file, ec))
            dict = std::make_shared<AntiDictionary>(AntiDictionary::load(lang, file));
    }
    if (!dict) {
        const std::string_view builtin = detail::builtin_stopwords(language);
        if (builtin.empty()) return nullptr;
        dict = std::make_shared<AntiDictionary>(AntiDictionary::parse(lang, builtin));
    }
    cache_.emplace(lang, dict);
    return dict;
}

bool StopwordCatalog::has(std::string_view language) const
{
    return lookup(language) != nullptr;
}

std::shared_ptr<const AntiDictionary> StopwordCatalog::get(std::string_view language) const
{
    auto dict = lookup(language);
    if (!dict)
        throw Error(Errc::unsupported_language, fmt::format("no anti-dictionary for language '{}'", language));
    return dict;
}

} // namespace presy
