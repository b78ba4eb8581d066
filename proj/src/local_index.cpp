#include "presy/error.hpp"
#include "presy/json_io.hpp"
#include "presy/search_gateway.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace presy {

namespace {

constexpr std::size_t kSnippetChars = 200;

std::string make_snippet(std::string_view body)
{
    std::size_t chars = 0;
    for (std::size_t i = 0; i < body.size(); ++i) {
        if ((static_cast<unsigned char>(body[i]) & 0xC0) == 0x80) continue;
        if (chars == kSnippetChars) return std::string(body.substr(0, i)) + "...";
        ++chars;
    }
    return std::string(body);
}

std::vector<std::string> distinct(std::vector<std::string> terms)
{
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (auto& t : terms)
        if (seen.insert(t).second) out.push_back(std::move(t));
    return out;
}

} // namespace

std::vector<CorpusDocument> parse_corpus(std::string_view json_text)
{
    Json doc;
    try {
        doc = Json::parse(json_text);
    } catch (const Json::exception& e) {
        throw Error(Errc::corrupt_data, fmt::format("corpus is not valid JSON: {}", e.what()));
    }
    if (!doc.is_array()) throw Error(Errc::corrupt_data, "corpus must be a JSON array");

    std::vector<CorpusDocument> out;
    out.reserve(doc.size());
    for (const auto& item : doc) {
        CorpusDocument d;
        d.url = require(item, "url").get<std::string>();
        d.title = item.value("title", "");
        d.body = item.value("body", "");
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<CorpusDocument> load_corpus(const std::filesystem::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(Errc::io_error, fmt::format("cannot read corpus {}", file.string()));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_corpus(buffer.str());
}

LocalIndex LocalIndex::build(std::vector<CorpusDocument> documents)
{
    LocalIndex index;
    std::unordered_set<std::string> urls;
    for (const auto& d : documents) {
        if (d.url.empty()) throw Error(Errc::invalid_field, "corpus document without url");
        if (!urls.insert(d.url).second) throw Error(Errc::duplicate_url, fmt::format("duplicate url '{}'", d.url));
    }
    index.documents_ = std::move(documents);

    for (std::uint32_t i = 0; i < index.documents_.size(); ++i) {
        const auto& d = index.documents_[i];
        std::unordered_map<std::string, std::uint32_t> counts;
        for (auto& w : segment_words(d.title)) ++counts[std::move(w)];
        for (auto& w : segment_words(d.body)) ++counts[std::move(w)];
        for (auto& [term, tf] : counts) index.postings_[term].push_back({i, tf});
    }
    return index;
}

LocalIndex index_corpus(std::vector<CorpusDocument> documents)
{
    return LocalIndex::build(std::move(documents));
}

std::uint32_t LocalIndex::document_frequency(std::string_view term) const
{
    auto it = postings_.find(std::string(term));
    return it == postings_.end() ? 0 : static_cast<std::uint32_t>(it->second.size());
}

std::uint32_t LocalIndex::term_frequency(std::size_t doc, std::string_view term) const
{
    auto it = postings_.find(std::string(term));
    if (it == postings_.end()) return 0;
    auto p = std::lower_bound(it->second.begin(), it->second.end(), doc,
                              [](const Posting& posting, std::size_t d) { return posting.doc < d; });
    return (p != it->second.end() && p->doc == doc) ? p->tf : 0;
}

std::vector<LocalIndex::ScoredDocument> LocalIndex::rank(const std::vector<std::string>& terms) const
{
    const double n = static_cast<double>(documents_.size());
    std::vector<double> scores(documents_.size(), 0.0);
    std::vector<bool> touched(documents_.size(), false);

    for (const auto& term : distinct(terms)) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const double idf = std::log(1.0 + n / static_cast<double>(it->second.size()));
        for (const auto& p : it->second) {
            scores[p.doc] += static_cast<double>(p.tf) * idf;
            touched[p.doc] = true;
        }
    }

    std::vector<ScoredDocument> ranked;
    for (std::uint32_t i = 0; i < scores.size(); ++i)
        if (touched[i] && scores[i] > 0.0) ranked.push_back({i, scores[i]});
    std::sort(ranked.begin(), ranked.end(), [this](const ScoredDocument& a, const ScoredDocument& b) {
        if (a.score != b.score) return a.score > b.score;
        return documents_[a.doc].url < documents_[b.doc].url;
    });
    return ranked;
}

LocalProvider::LocalProvider(std::string id, LocalIndex index, std::shared_ptr<const AntiDictionary> stopwords)
    : id_(std::move(id)), index_(std::move(index)), stopwords_(std::move(stopwords))
{
}

SearchResponse LocalProvider::search(std::string_view query, std::size_t limit) const
{
    if (limit == 0) throw Error(Errc::invalid_argument, "limit must be at least 1");

    std::vector<std::string> terms;
    for (auto& w : segment_words(query))
        if (!stopwords_ || !stopwords_->contains(w)) terms.push_back(std::move(w));

    SearchResponse response;
    response.query = std::string(query);
    const auto ranked = index_.rank(terms);
    response.total_estimate = ranked.size();
    for (std::size_t i = 0; i < ranked.size() && i < limit; ++i) {
        const auto& d = index_.document(ranked[i].doc);
        response.results.push_back({static_cast<int>(i + 1), d.title, d.url, make_snippet(d.body), id_});
    }
    return response;
}

} // namespace presy
