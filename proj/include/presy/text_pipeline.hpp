#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace presy {

// Proposals offered per search; area-sized, not a hard protocol limit.
inline constexpr std::size_t kDefaultProposalCap = 20;
inline constexpr std::size_t kMinCandidateLength = 2;

// Case-fold and trim. Internal whitespace is preserved.
std::string normalize(std::string_view text);

struct Token {
    std::string surface;
    std::size_t position = 0;

    friend bool operator==(const Token&, const Token&) = default;
};

// Splits on every character that is neither a letter nor a digit and
// case-folds each piece. Positions run 0, 1, 2, ...
std::vector<Token> segment(std::string_view text);
std::vector<std::string> segment_words(std::string_view text);

// Number of code points; candidate length filters count characters, not bytes.
std::size_t char_length(std::string_view term);

class AntiDictionary {
public:
    AntiDictionary() = default;
    AntiDictionary(std::string language, std::unordered_set<std::string> words);

    // One word per line, '#' comments, surrounding whitespace trimmed.
    static AntiDictionary parse(std::string language, std::string_view contents);
    static AntiDictionary load(std::string language, const std::filesystem::path& file);

    const std::string& language() const noexcept { return language_; }
    std::size_t size() const noexcept { return words_.size(); }
    bool contains(std::string_view token) const;

private:
    std::string language_;
    std::unordered_set<std::string> words_;
};

bool is_stopword(std::string_view token, const AntiDictionary& dictionary);

// Title words in rank order, minus stop-words, short and all-digit tokens,
// first occurrence kept, truncated to cap.
std::vector<std::string> extract_candidates(std::span<const std::string> titles,
                                            const AntiDictionary& dictionary,
                                            std::size_t cap = kDefaultProposalCap);

bool is_language_code(std::string_view code) noexcept;

// Resolves a language code to its anti-dictionary. A file at
// <dir>/<lang>.txt overrides the compiled-in English and French lists.
class StopwordCatalog {
public:
    explicit StopwordCatalog(std::filesystem::path directory = {});

    bool has(std::string_view language) const;
    // Throws Error(unsupported_language).
    std::shared_ptr<const AntiDictionary> get(std::string_view language) const;

private:
    std::shared_ptr<const AntiDictionary> lookup(std::string_view language) const;

    std::filesystem::path directory_;
    mutable std::mutex mutex_;
    mutable std::map<std::string, std::shared_ptr<const AntiDictionary>, std::less<>> cache_;
};

namespace detail {
std::string_view builtin_stopwords(std::string_view language);
}

} // namespace presy
