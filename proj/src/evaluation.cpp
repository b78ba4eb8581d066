#include "presy/evaluation.hpp"

#include "presy/error.hpp"
#include "presy/json_io.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace presy {

std::string_view to_string(ScenarioClass c) noexcept
{
    return c == ScenarioClass::simple ? "simple" : "complex";
}

std::string_view to_string(EvalMode m) noexcept
{
    return m == EvalMode::without_reformulation ? "without" : "with";
}

EvalMode parse_eval_mode(std::string_view name)
{
    if (name == "without") return EvalMode::without_reformulation;
    if (name == "with") return EvalMode::with_reformulation;
    throw Error(Errc::invalid_argument, fmt::format("unknown evaluation mode '{}' (expected with or without)", name));
}

// ---------------------------------------------------------------------------
// Scenario files

std::vector<EvaluationScenario> parse_scenarios(std::string_view json_text)
{
    Json doc;
    try {
        doc = Json::parse(json_text);
    } catch (const Json::exception& e) {
        throw Error(Errc::corrupt_data, fmt::format("scenario file is not valid JSON: {}", e.what()));
    }
    const Json& list = require(doc, "scenarios");
    if (!list.is_array()) throw Error(Errc::corrupt_data, "'scenarios' must be an array");

    std::vector<EvaluationScenario> out;
    std::unordered_set<std::string> ids;
    for (const auto& item : list) {
        EvaluationScenario s;
        try {
            s.id = require(item, "id").get<std::string>();
            s.query = require(item, "query").get<std::string>();
            const auto cls = require(item, "class").get<std::string>();
            if (cls == "simple") s.scenario_class = ScenarioClass::simple;
            else if (cls == "complex") s.scenario_class = ScenarioClass::complex;
            else throw Error(Errc::invalid_field, fmt::format("scenario '{}': unknown class '{}'", s.id, cls));
            const Json judgments = item.value("judgments", Json::object());
            if (!judgments.is_object())
                throw Error(Errc::corrupt_data, fmt::format("scenario '{}': judgments must be an object", s.id));
            for (const auto& [url, relevant] : judgments.items()) s.judgments[url] = relevant.get<bool>();
        } catch (const Json::exception& e) {
            throw Error(Errc::corrupt_data, fmt::format("scenario entry: {}", e.what()));
        }
        if (s.query.empty()) throw Error(Errc::invalid_field, fmt::format("scenario '{}' has an empty query", s.id));
        if (!ids.insert(s.id).second) throw Error(Errc::invalid_field, fmt::format("duplicate scenario id '{}'", s.id));
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<EvaluationScenario> load_scenarios(const std::filesystem::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(Errc::io_error, fmt::format("cannot read scenarios {}", file.string()));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scenarios(buffer.str());
}

// ---------------------------------------------------------------------------
// URLs

namespace {

struct UrlParts {
    std::string_view before; // scheme and "://", if any
    std::string_view authority;
    std::string_view rest;
};

bool is_scheme_char(char c)
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '+' || c == '-' ||
           c == '.';
}

UrlParts split_url(std::string_view url)
{
    UrlParts parts;
    std::size_t start = 0;
    if (const auto sep = url.find("://"); sep != std::string_view::npos && sep > 0) {
        const auto scheme = url.substr(0, sep);
        const bool valid = std::all_of(scheme.begin(), scheme.end(), is_scheme_char) &&
                           ((scheme[0] >= 'a' && scheme[0] <= 'z') || (scheme[0] >= 'A' && scheme[0] <= 'Z'));
        if (valid) start = sep + 3;
    }
    const auto end = url.find_first_of("/?#", start);
    parts.before = url.substr(0, start);
    parts.authority = url.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    parts.rest = end == std::string_view::npos ? std::string_view{} : url.substr(end);
    return parts;
}

std::string lower_ascii(std::string_view s)
{
    std::string out(s);
    for (auto& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

std::string strip_www(std::string host)
{
    if (host.rfind("www.", 0) == 0) host.erase(0, 4);
    return host;
}

} // namespace

std::string url_host(std::string_view url)
{
    const auto parts = split_url(url);
    std::string_view authority = parts.authority;
    if (const auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);

    std::string_view host = authority;
    if (!host.empty() && host.front() == '[') {
        const auto close = host.find(']');
        if (close == std::string_view::npos) throw Error(Errc::unparsable_url, fmt::format("unparsable url '{}'", url));
        host = host.substr(0, close + 1);
    } else if (const auto colon = host.find(':'); colon != std::string_view::npos) {
        const auto port = host.substr(colon + 1);
        if (!std::all_of(port.begin(), port.end(), [](char c) { return c >= '0' && c <= '9'; }))
            throw Error(Errc::unparsable_url, fmt::format("unparsable url '{}'", url));
        host = host.substr(0, colon);
    }

    std::string out = strip_www(lower_ascii(host));
    const bool ok = !out.empty() && std::all_of(out.begin(), out.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '_' || c == '[' ||
               c == ']' || c == ':' || (static_cast<unsigned char>(c) & 0x80) != 0;
    });
    if (!ok || out.find_first_not_of('.') == std::string::npos)
        throw Error(Errc::unparsable_url, fmt::format("unparsable url '{}'", url));
    return out;
}

std::string canonical_url(std::string_view url)
{
    if (const auto hash = url.find('#'); hash != std::string_view::npos) url = url.substr(0, hash);
    const auto parts = split_url(url);
    return lower_ascii(parts.before) + strip_www(lower_ascii(parts.authority)) + std::string(parts.rest);
}

std::vector<bool> redundancy_flags(std::span<const SearchResult> results)
{
    std::vector<bool> flags;
    flags.reserve(results.size());
    std::unordered_set<std::string> urls;
    std::unordered_set<std::string> hosts;
    for (const auto& r : results) {
        std::string host = url_host(r.url);
        const bool repeated_url = !urls.insert(r.url).second;
        const bool repeated_host = !hosts.insert(std::move(host)).second;
        flags.push_back(repeated_url || repeated_host);
    }
    return flags;
}

// ---------------------------------------------------------------------------
// Scoring

ScoreRow score_query(std::span<const SearchResult> results, const Judgments& judgments, std::string scenario_id)
{
    if (results.size() > kScoredResults)
        throw Error(Errc::too_many_results, fmt::format("{} results; at most {} are scored", results.size(), kScoredResults));

    Judgments canonical;
    for (const auto& [url, relevant] : judgments) {
        bool& slot = canonical[canonical_url(url)];
        slot = slot || relevant;
    }
    auto relevant = [&](const SearchResult& r) {
        auto it = canonical.find(canonical_url(r.url));
        return it != canonical.end() && it->second;
    };

    std::size_t head = 0;
    std::size_t tail = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!relevant(results[i])) continue;
        if (i < kHeadSlots) ++head;
        else ++tail;
    }
    const auto flags = redundancy_flags(results);
    const auto redundant = static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));

    ScoreRow row;
    row.scenario_id = std::move(scenario_id);
    row.c1 = kCriterionScale * static_cast<double>(head) / static_cast<double>(kHeadSlots);
    row.c2 = kCriterionScale * static_cast<double>(tail) / static_cast<double>(kTailSlots);
    row.c3 = results.empty()
                 ? kCriterionScale
                 : kCriterionScale * (1.0 - static_cast<double>(redundant) / static_cast<double>(results.size()));
    row.total = row.c1 + row.c2 + row.c3;
    return row;
}

EngineReport aggregate(std::span<const ScoreRow> rows, std::string engine_id, EvalMode mode)
{
    if (rows.size() != kSuiteSize)
        throw Error(Errc::wrong_row_count, fmt::format("expected {} score rows, got {}", kSuiteSize, rows.size()));

    EngineReport report;
    report.engine_id = std::move(engine_id);
    report.mode = mode;
    report.rows.assign(rows.begin(), rows.end());
    double c1 = 0.0, c2 = 0.0, c3 = 0.0;
    for (const auto& r : rows) {
        report.sum_450 += r.total;
        c1 += r.c1;
        c2 += r.c2;
        c3 += r.c3;
    }
    const double n = static_cast<double>(kSuiteSize);
    report.note_10 = report.sum_450 / (kSuiteMaximum / kCriterionScale);
    report.mean_c1 = c1 / n;
    report.mean_c2 = c2 / n;
    report.mean_c3 = c3 / n;
    return report;
}

EngineComparison compare(const EngineReport& without, const EngineReport& with)
{
    if (without.engine_id != with.engine_id)
        throw Error(Errc::mismatched_engines,
                    fmt::format("cannot compare engine '{}' with engine '{}'", without.engine_id, with.engine_id));
    if (without.mode != EvalMode::without_reformulation || with.mode != EvalMode::with_reformulation)
        throw Error(Errc::mismatched_engines, "comparison needs one report without and one with reformulation");

    EngineComparison c;
    c.engine_id = without.engine_id;
    c.without = without;
    c.with = with;
    c.deltas = Deltas{with.mean_c1 - without.mean_c1, with.mean_c2 - without.mean_c2,
                      with.mean_c3 - without.mean_c3, with.note_10 - without.note_10};
    return c;
}

ComparisonReport run_suite(std::span<const EvaluationScenario> scenarios,
                           const SearchProvider& provider,
                           ReformulationEngine& engine,
                           std::string_view profile_id,
                           const std::set<EvalMode>& modes)
{
    if (scenarios.size() != kSuiteSize)
        throw Error(Errc::wrong_row_count, fmt::format("a suite has {} scenarios, got {}", kSuiteSize, scenarios.size()));
    engine.store().profile(profile_id);

    EngineComparison entry;
    entry.engine_id = provider.id();
    for (EvalMode mode : {EvalMode::without_reformulation, EvalMode::with_reformulation}) {
        if (modes.count(mode) == 0) continue;
        std::vector<ScoreRow> rows;
        for (const auto& s : scenarios) {
            try {
                std::string query = s.query;
                if (mode == EvalMode::with_reformulation) query = engine.auto_reformulate(profile_id, s.query).expanded;
                const auto response = provider.search(query, kScoredResults);
                rows.push_back(score_query(response.results, s.judgments, s.id));
            } catch (const Error& e) {
                throw Error(e.code(), fmt::format("scenario '{}' ({} reformulation): {}", s.id, to_string(mode), e.what()));
            }
        }
        auto report = aggregate(rows, provider.id(), mode);
        if (mode == EvalMode::without_reformulation) entry.without = std::move(report);
        else entry.with = std::move(report);
    }
    if (entry.without && entry.with) entry = compare(*entry.without, *entry.with);

    ComparisonReport out;
    out.engines.push_back(std::move(entry));
    return out;
}

// ---------------------------------------------------------------------------
// Report serialization

namespace {

std::string real(double v)
{
    std::string s = fmt::format("{:.2f}", v);
    if (s == "-0.00") s = "0.00";
    return s;
}

std::string json_quote(std::string_view s)
{
    return Json(std::string(s)).dump();
}

void write_engine_report(std::string& out, const EngineReport& r, std::string_view indent)
{
    out += fmt::format("{{\n{0}  \"engine_id\": {1},\n{0}  \"mode\": {2},\n{0}  \"rows\": [", indent,
                       json_quote(r.engine_id), json_quote(to_string(r.mode)));
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        const auto& row = r.rows[i];
        out += fmt::format("{}\n{}    {{\"scenario_id\": {}, \"c1\": {}, \"c2\": {}, \"c3\": {}, \"total\": {}}}",
                           i == 0 ? "" : ",", indent, json_quote(row.scenario_id), real(row.c1), real(row.c2),
                           real(row.c3), real(row.total));
    }
    out += fmt::format("\n{0}  ],\n{0}  \"sum_450\": {1},\n{0}  \"note_10\": {2},\n{0}  \"mean_c1\": {3},\n"
                       "{0}  \"mean_c2\": {4},\n{0}  \"mean_c3\": {5}\n{0}}}",
                       indent, real(r.sum_450), real(r.note_10), real(r.mean_c1), real(r.mean_c2), real(r.mean_c3));
}

} // namespace

std::string report_to_json(const ComparisonReport& report)
{
    std::string out = "{\n  \"engines\": [";
    for (std::size_t i = 0; i < report.engines.size(); ++i) {
        const auto& e = report.engines[i];
        out += fmt::format("{}\n    {{\n      \"engine_id\": {}", i == 0 ? "" : ",", json_quote(e.engine_id));
        if (e.without) {
            out += ",\n      \"without\": ";
            write_engine_report(out, *e.without, "      ");
        }
        if (e.with) {
            out += ",\n      \"with\": ";
            write_engine_report(out, *e.with, "      ");
        }
        if (e.deltas) {
            out += fmt::format(",\n      \"delta_c1\": {},\n      \"delta_c2\": {},\n      \"delta_c3\": {},\n"
                               "      \"delta_note\": {}",
                               real(e.deltas->c1), real(e.deltas->c2), real(e.deltas->c3), real(e.deltas->note));
        }
        out += "\n    }";
    }
    out += report.engines.empty() ? "]\n}\n" : "\n  ]\n}\n";
    return out;
}

} // namespace presy
