#pragma once

#include "presy/context_store.hpp"
#include "presy/reformulation.hpp"
#include "presy/text_pipeline.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace presy {

// The evaluation examines the first ten results; so does the history log.
inline constexpr std::size_t kDefaultResultLimit = 10;

struct SearchResult {
    int rank = 0;
    std::string title;
    std::string url;
    std::string snippet;
    std::string engine_id;

    friend bool operator==(const SearchResult&, const SearchResult&) = default;
};

struct SearchResponse {
    std::string query;
    std::vector<SearchResult> results;
    std::uint64_t total_estimate = 0;

    friend bool operator==(const SearchResponse&, const SearchResponse&) = default;
};

class SearchProvider {
public:
    virtual ~SearchProvider() = default;

    virtual const std::string& id() const noexcept = 0;
    virtual std::string_view kind() const noexcept = 0;
    // Must be safe to call concurrently.
    virtual SearchResponse search(std::string_view query, std::size_t limit) const = 0;
};

// ---------------------------------------------------------------------------
// Local corpus provider

struct CorpusDocument {
    std::string url;
    std::string title;
    std::string body;

    friend bool operator==(const CorpusDocument&, const CorpusDocument&) = default;
};

// UTF-8 JSON array of {url, title, body}.
std::vector<CorpusDocument> load_corpus(const std::filesystem::path& file);
std::vector<CorpusDocument> parse_corpus(std::string_view json_text);

// Immutable inverted index over title and body words.
class LocalIndex {
public:
    struct Posting {
        std::uint32_t doc = 0;
        std::uint32_t tf = 0;
    };
    struct ScoredDocument {
        std::uint32_t doc = 0;
        double score = 0.0;
    };

    // Throws Error(duplicate_url).
    static LocalIndex build(std::vector<CorpusDocument> documents);

    std::size_t size() const noexcept { return documents_.size(); }
    const CorpusDocument& document(std::size_t i) const { return documents_.at(i); }
    std::uint32_t document_frequency(std::string_view term) const;
    std::uint32_t term_frequency(std::size_t doc, std::string_view term) const;

    // Sum over distinct terms of tf * ln(1 + N / df); only documents with a
    // positive score, ordered by score desc then url asc.
    std::vector<ScoredDocument> rank(const std::vector<std::string>& terms) const;

private:
    std::vector<CorpusDocument> documents_;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
};

LocalIndex index_corpus(std::vector<CorpusDocument> documents);

class LocalProvider final : public SearchProvider {
public:
    LocalProvider(std::string id, LocalIndex index, std::shared_ptr<const AntiDictionary> stopwords);

    const std::string& id() const noexcept override { return id_; }
    std::string_view kind() const noexcept override { return "local"; }
    SearchResponse search(std::string_view query, std::size_t limit) const override;

    const LocalIndex& index() const noexcept { return index_; }

private:
    std::string id_;
    LocalIndex index_;
    std::shared_ptr<const AntiDictionary> stopwords_;
};

// ---------------------------------------------------------------------------
// Generic HTTP provider

// JSON pointers into the provider's response. Item fields are relative to
// each element of the results array. An empty total path means the engine
// reports no estimate and the result count is used.
struct ResponseMapping {
    std::string results = "/results";
    std::string title = "/title";
    std::string url = "/url";
    std::string snippet = "/snippet";
    std::string total = "/total";
};

class HttpProvider final : public SearchProvider {
public:
    // endpoint: "http://host[:port]/path?q={query}&n={limit}"
    HttpProvider(std::string id, std::string endpoint, ResponseMapping mapping, std::chrono::milliseconds timeout);

    const std::string& id() const noexcept override { return id_; }
    std::string_view kind() const noexcept override { return "http"; }
    SearchResponse search(std::string_view query, std::size_t limit) const override;

    // Maps a response body; exposed for testing the wire mapping directly.
    SearchResponse map_response(std::string_view query, std::string_view body, std::size_t limit) const;

private:
    std::string id_;
    std::string origin_;        // scheme://host:port
    std::string path_template_; // /path?query
    ResponseMapping mapping_;
    std::chrono::milliseconds timeout_;
};

std::string url_encode(std::string_view text);

// ---------------------------------------------------------------------------
// Registry

enum class ProviderKind { local, http };

struct ProviderConfig {
    ProviderKind kind = ProviderKind::local;
    std::optional<std::filesystem::path> corpus;
    std::optional<std::string> endpoint;
    ResponseMapping mapping;
    std::chrono::milliseconds timeout{10'000};
    std::string language = "en";
};

class ProviderRegistry {
public:
    explicit ProviderRegistry(const StopwordCatalog& stopwords);

    // Throws Error(duplicate_id) or Error(missing_config).
    std::shared_ptr<const SearchProvider> register_provider(const std::string& id, const ProviderConfig& config);
    std::shared_ptr<const SearchProvider> add(std::shared_ptr<const SearchProvider> provider);

    // Throws Error(unknown_provider).
    std::shared_ptr<const SearchProvider> get(std::string_view id) const;
    std::vector<std::string> ids() const;

private:
    const StopwordCatalog& stopwords_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::shared_ptr<const SearchProvider>, std::less<>> providers_;
};

// ---------------------------------------------------------------------------
// Dual search

struct SearchMode {
    ReformulationMode mode = ReformulationMode::off;
    std::vector<std::string> manual_terms;
};

struct ComparisonResult {
    SearchResponse baseline;
    SearchResponse reformulated;
    ReformulatedQuery reformulation;
    std::vector<std::string> proposals;
    // Store entries backing the proposals, in proposal order. A proposal equal
    // to the attribute word has no entry.
    std::vector<ContextEntry> proposal_entries;

    friend bool operator==(const ComparisonResult&, const ComparisonResult&) = default;
};

// Runs the query with and without reformulation, logs the search, and
// registers title words as proposed context for the last query word.
ComparisonResult dual_search(ReformulationEngine& engine,
                             const SearchProvider& provider,
                             std::string_view profile_id,
                             std::string_view query,
                             const SearchMode& mode,
                             std::size_t limit = kDefaultResultLimit);

} // namespace presy
