#pragma once

#include "presy/reformulation.hpp"
#include "presy/search_gateway.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace presy {

inline constexpr std::size_t kSuiteSize = 15;       // 10 simple + 5 complex scenarios
inline constexpr std::size_t kScoredResults = 10;
inline constexpr std::size_t kHeadSlots = 3;        // C1 looks at ranks 1-3
inline constexpr std::size_t kTailSlots = 7;        // C2 looks at ranks 4-10
inline constexpr double kCriterionScale = 10.0;
inline constexpr double kSuiteMaximum = 450.0;      // 30 points x 15 scenarios

enum class ScenarioClass { simple, complex };
enum class EvalMode { without_reformulation, with_reformulation };

std::string_view to_string(ScenarioClass c) noexcept;
std::string_view to_string(EvalMode m) noexcept;
EvalMode parse_eval_mode(std::string_view name);

using Judgments = std::map<std::string, bool>;

struct EvaluationScenario {
    std::string id;
    std::string query;
    ScenarioClass scenario_class = ScenarioClass::simple;
    Judgments judgments;
};

// {"scenarios": [{id, query, class, judgments: {url: bool}}]}
std::vector<EvaluationScenario> parse_scenarios(std::string_view json_text);
std::vector<EvaluationScenario> load_scenarios(const std::filesystem::path& file);

// Lowercase authority without a leading "www.", port or user info.
// Accepts scheme-less urls ("a.com/x"). Throws Error(unparsable_url).
std::string url_host(std::string_view url);

// Judgment key form: fragment removed, authority lowercased, "www." stripped.
std::string canonical_url(std::string_view url);

// true where a result repeats an earlier url or an earlier result's host.
std::vector<bool> redundancy_flags(std::span<const SearchResult> results);

struct ScoreRow {
    std::string scenario_id;
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
    double total = 0.0;
};

// c1 = 10 * relevant(1..3) / 3, c2 = 10 * relevant(4..10) / 7,
// c3 = 10 * (1 - redundant / n), 10 for an empty list. Denominators stay fixed
// when fewer than ten results come back.
ScoreRow score_query(std::span<const SearchResult> results, const Judgments& judgments,
                     std::string scenario_id = {});

struct EngineReport {
    std::string engine_id;
    EvalMode mode = EvalMode::without_reformulation;
    std::vector<ScoreRow> rows;
    double sum_450 = 0.0;
    double note_10 = 0.0;
    double mean_c1 = 0.0;
    double mean_c2 = 0.0;
    double mean_c3 = 0.0;
};

// Exactly kSuiteSize rows, else Error(wrong_row_count).
EngineReport aggregate(std::span<const ScoreRow> rows, std::string engine_id, EvalMode mode);

struct Deltas {
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
    double note = 0.0;
};

struct EngineComparison {
    std::string engine_id;
    std::optional<EngineReport> without;
    std::optional<EngineReport> with;
    std::optional<Deltas> deltas;
};

struct ComparisonReport {
    std::vector<EngineComparison> engines;
};

// with - without, per criterion and for the /10 note.
EngineComparison compare(const EngineReport& without, const EngineReport& with);

// Scores every scenario in each requested mode and compares the two runs.
// The "with" run reformulates through the engine's automatic mode.
ComparisonReport run_suite(std::span<const EvaluationScenario> scenarios,
                           const SearchProvider& provider,
                           ReformulationEngine& engine,
                           std::string_view profile_id,
                           const std::set<EvalMode>& modes);

// Fixed field order, reals with two decimals.
std::string report_to_json(const ComparisonReport& report);

} // namespace presy
