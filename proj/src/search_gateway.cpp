#include "presy/search_gateway.hpp"

#include "presy/error.hpp"

#include <fmt/core.h>

#include <mutex>

namespace presy {

ProviderRegistry::ProviderRegistry(const StopwordCatalog& stopwords) : stopwords_(stopwords) {}

std::shared_ptr<const SearchProvider> ProviderRegistry::register_provider(const std::string& id,
                                                                          const ProviderConfig& config)
{
    if (id.empty()) throw Error(Errc::invalid_argument, "provider id must not be empty");
    {
        std::shared_lock lock(mutex_);
        if (providers_.count(id) != 0) throw Error(Errc::duplicate_id, fmt::format("provider '{}' already registered", id));
    }

    std::shared_ptr<const SearchProvider> provider;
    switch (config.kind) {
    case ProviderKind::local:
        if (!config.corpus) throw Error(Errc::missing_config, fmt::format("local provider '{}' needs a corpus path", id));
        provider = std::make_shared<LocalProvider>(id, index_corpus(load_corpus(*config.corpus)),
                                                   stopwords_.get(config.language));
        break;
    case ProviderKind::http:
        if (!config.endpoint || config.endpoint->empty())
            throw Error(Errc::missing_config, fmt::format("http provider '{}' needs an endpoint template", id));
        provider = std::make_shared<HttpProvider>(id, *config.endpoint, config.mapping, config.timeout);
        break;
    }
    return add(std::move(provider));
}

std::shared_ptr<const SearchProvider> ProviderRegistry::add(std::shared_ptr<const SearchProvider> provider)
{
    std::unique_lock lock(mutex_);
    auto [it, inserted] = providers_.emplace(provider->id(), provider);
    if (!inserted) throw Error(Errc::duplicate_id, fmt::format("provider '{}' already registered", provider->id()));
    return it->second;
}

std::shared_ptr<const SearchProvider> ProviderRegistry::get(std::string_view id) const
{
    std::shared_lock lock(mutex_);
    auto it = providers_.find(id);
    if (it == providers_.end()) throw Error(Errc::unknown_provider, fmt::format("unknown engine '{}'", id));
    return it->second;
}

std::vector<std::string> ProviderRegistry::ids() const
{
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, p] : providers_) out.push_back(id);
    return out;
}

ComparisonResult dual_search(ReformulationEngine& engine,
                             const SearchProvider& provider,
                             std::string_view profile_id,
                             std::string_view query,
                             const SearchMode& mode,
                             std::size_t limit)
{
    ContextStore& store = engine.store();
    const auto dictionary = store.dictionary_for(profile_id);

    ComparisonResult result;
    result.baseline = provider.search(query, limit);

    switch (mode.mode) {
    case ReformulationMode::off:
        result.reformulation = identity_reformulation(query);
        break;
    case ReformulationMode::automatic:
        result.reformulation = engine.auto_reformulate(profile_id, query);
        break;
    case ReformulationMode::manual:
        result.reformulation = expand(query, mode.manual_terms);
        break;
    }

    const bool shared = result.reformulation.added_terms.empty();
    result.reformulated = shared ? result.baseline : provider.search(result.reformulation.expanded, limit);

    std::vector<std::string> titles;
    for (const auto& r : result.baseline.results) titles.push_back(r.title);
    if (!shared)
        for (const auto& r : result.reformulated.results) titles.push_back(r.title);
    result.proposals = extract_candidates(titles, *dictionary, kDefaultProposalCap);

    HistoryRecord record;
    record.profile_id = std::string(profile_id);
    record.timestamp = store.now();
    record.raw_query = std::string(query);
    if (result.reformulation.mode != ReformulationMode::off) record.reformulated_query = result.reformulation.expanded;
    record.engine_id = provider.id();
    for (const auto& r : result.baseline.results) {
        if (record.result_titles.size() == kMaxHistoryResults) break;
        record.result_titles.push_back(r.title);
        record.result_urls.push_back(r.url);
    }
    record.total_estimate_baseline = result.baseline.total_estimate;
    record.total_estimate_reformulated = result.reformulated.total_estimate;
    store.append_history(record);

    const auto words = segment_words(query);
    if (!words.empty() && !result.proposals.empty())
        result.proposal_entries = store.propose_dynamic_entries(profile_id, words.back(), result.proposals);
    return result;
}

} // namespace presy
