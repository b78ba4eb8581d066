#include "presy/reformulation.hpp"

#include "presy/error.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <unordered_set>

namespace presy {

std::string_view to_string(ReformulationMode mode) noexcept
{
    switch (mode) {
    case ReformulationMode::off: return "off";
    case ReformulationMode::manual: return "manual";
    case ReformulationMode::automatic: return "auto";
    }
    return "off";
}

ReformulationMode parse_reformulation_mode(std::string_view name)
{
    if (name == "off") return ReformulationMode::off;
    if (name == "manual") return ReformulationMode::manual;
    if (name == "auto") return ReformulationMode::automatic;
    throw Error(Errc::invalid_argument, fmt::format("unknown mode '{}' (expected off, auto or manual)", name));
}

double score_suggestion(std::span<const ContextEntry> entries,
                        const UserProfile& profile,
                        Timestamp now,
                        const ScoreWeights& weights)
{
    if (entries.empty()) throw Error(Errc::invalid_argument, "cannot score an empty entry group");

    constexpr double ms_per_day = 86'400'000.0;
    double score = 0.0;
    for (const auto& e : entries) {
        const double base = e.kind == EntryKind::static_context ? weights.static_base : weights.dynamic_base;
        const double age_days = std::max(0.0, static_cast<double>((now - e.last_used_at).count()) / ms_per_day);
        score += base + std::log1p(static_cast<double>(e.use_count)) + 1.0 / (1.0 + age_days);
    }

    const std::string& value = entries.front().value;
    bool in_domain = std::find(profile.domains.begin(), profile.domains.end(), value) != profile.domains.end();
    if (!in_domain) {
        const auto words = segment_words(profile.specialty);
        in_domain = std::find(words.begin(), words.end(), value) != words.end();
    }
    if (in_domain) score += weights.domain_bonus;
    return score;
}

ReformulatedQuery identity_reformulation(std::string_view query)
{
    ReformulatedQuery q;
    q.original = std::string(query);
    q.expanded = q.original;
    q.mode = ReformulationMode::off;
    return q;
}

ReformulatedQuery expand(std::string_view query, std::span<const std::string> terms)
{
    ReformulatedQuery q;
    q.original = std::string(query);
    q.mode = ReformulationMode::manual;

    std::unordered_set<std::string> present;
    for (auto& w : segment_words(query)) present.insert(std::move(w));

    for (const auto& term : terms) {
        for (auto& word : segment_words(term)) {
            if (q.added_terms.size() == kMaxAddedTerms) break;
            if (present.insert(word).second) q.added_terms.push_back(std::move(word));
        }
    }

    if (q.added_terms.empty()) {
        q.expanded = q.original;
        return q;
    }
    std::string_view base = query;
    while (!base.empty() && (base.back() == ' ' || base.back() == '\t' || base.back() == '\n')) base.remove_suffix(1);
    q.expanded = std::string(base);
    for (const auto& t : q.added_terms) {
        if (!q.expanded.empty()) q.expanded += ' ';
        q.expanded += t;
    }
    return q;
}

ReformulationEngine::ReformulationEngine(ContextStore& store, ScoreWeights weights)
    : store_(store), weights_(weights)
{
}

std::vector<Suggestion> ReformulationEngine::suggest(std::string_view profile_id,
                                                     std::string_view partial_query,
                                                     std::size_t limit) const
{
    if (limit == 0) throw Error(Errc::invalid_argument, "limit must be at least 1");
    const UserProfile profile = store_.profile(profile_id);

    const auto words = segment_words(partial_query);
    if (words.empty()) return {};
    const std::unordered_set<std::string> query_words(words.begin(), words.end());

    // query_entries matches on prefix, which covers both the exact and the
    // still-being-typed attribute.
    std::map<std::string, std::vector<ContextEntry>> groups;
    for (auto& e : store_.query_entries(profile_id, words.back(), {EntryStatus::validated})) {
        if (query_words.count(e.value) != 0) continue;
        groups[e.value].push_back(std::move(e));
    }

    const Timestamp now = store_.now();
    std::vector<Suggestion> out;
    out.reserve(groups.size());
    for (auto& [value, group] : groups) {
        // A fixed (created_at, id) order keeps the floating-point sum reproducible.
        std::sort(group.begin(), group.end(), [](const ContextEntry& a, const ContextEntry& b) {
            return a.created_at != b.created_at ? a.created_at < b.created_at : a.id < b.id;
        });
        Suggestion s;
        s.value = value;
        s.score = score_suggestion(group, profile, now, weights_);
        for (const auto& e : group) s.source_entry_ids.push_back(e.id);
        const std::string terms[] = {value};
        s.preview = expand(partial_query, terms).expanded;
        out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end(), [](const Suggestion& a, const Suggestion& b) {
        return a.score != b.score ? a.score > b.score : a.value < b.value;
    });
    if (out.size() > limit) out.resize(limit);
    return out;
}

ReformulatedQuery ReformulationEngine::auto_reformulate(std::string_view profile_id, std::string_view query)
{
    const auto suggestions = suggest(profile_id, query, kAutoSuggestionCount);
    if (suggestions.empty()) return identity_reformulation(query);

    std::vector<std::string> values;
    std::vector<std::string> consumed;
    for (const auto& s : suggestions) {
        values.push_back(s.value);
        consumed.insert(consumed.end(), s.source_entry_ids.begin(), s.source_entry_ids.end());
    }
    ReformulatedQuery q = expand(query, values);
    if (q.added_terms.empty()) return identity_reformulation(query);
    q.mode = ReformulationMode::automatic;
    store_.record_usage(profile_id, consumed);
    return q;
}

} // namespace presy
