#pragma once

#include "presy/context_store.hpp"

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace presy {

inline constexpr std::size_t kMaxAddedTerms = 4;
inline constexpr std::size_t kAutoSuggestionCount = 2;
inline constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

// Weights of the suggestion score.
struct ScoreWeights {
    double static_base = 1.0;
    double dynamic_base = 0.5;
    double domain_bonus = 1.0;
};

enum class ReformulationMode { off, manual, automatic };

std::string_view to_string(ReformulationMode mode) noexcept;
ReformulationMode parse_reformulation_mode(std::string_view name);

struct Suggestion {
    std::string value;
    std::vector<std::string> source_entry_ids;
    double score = 0.0;
    std::string preview;

    friend bool operator==(const Suggestion&, const Suggestion&) = default;
};

struct ReformulatedQuery {
    std::string original;
    std::string expanded;
    std::vector<std::string> added_terms;
    ReformulationMode mode = ReformulationMode::off;

    friend bool operator==(const ReformulatedQuery&, const ReformulatedQuery&) = default;
};

// Sum over entries of base(kind) + ln(1 + use_count) + 1 / (1 + age_days),
// plus the domain bonus once when the value is one of the profile's domains
// or specialty words. Age is measured from last_used_at in fractional days
// and never negative.
double score_suggestion(std::span<const ContextEntry> entries,
                        const UserProfile& profile,
                        Timestamp now,
                        const ScoreWeights& weights = {});

// Appends terms that are not already query tokens, in order, up to
// kMaxAddedTerms. Multi-word terms contribute each of their words.
ReformulatedQuery expand(std::string_view query, std::span<const std::string> terms);

ReformulatedQuery identity_reformulation(std::string_view query);

class ReformulationEngine {
public:
    explicit ReformulationEngine(ContextStore& store, ScoreWeights weights = {});

    // Validated pairs whose attribute equals or extends the last query word,
    // grouped by value, best first; ties broken by value.
    std::vector<Suggestion> suggest(std::string_view profile_id,
                                    std::string_view partial_query,
                                    std::size_t limit) const;

    // Expands with the top suggestions and records their use. Falls back to
    // an off-mode identity when the context has nothing to offer.
    ReformulatedQuery auto_reformulate(std::string_view profile_id, std::string_view query);

    ContextStore& store() noexcept { return store_; }

private:
    ContextStore& store_;
    ScoreWeights weights_;
};

} // namespace presy
