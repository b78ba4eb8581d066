#include "presy/json_io.hpp"

#include "presy/error.hpp"

#include <fmt/core.h>

#include <algorithm>

namespace presy {

const Json& require(const Json& j, std::string_view key)
{
    if (!j.is_object()) throw Error(Errc::corrupt_data, fmt::format("expected an object holding '{}'", key));
    auto it = j.find(std::string(key));
    if (it == j.end()) throw Error(Errc::corrupt_data, fmt::format("missing field '{}'", key));
    return *it;
}

namespace {

template <typename T>
T get(const Json& j, std::string_view key)
{
    try {
        return require(j, key).get<T>();
    } catch (const Json::exception& e) {
        throw Error(Errc::corrupt_data, fmt::format("field '{}': {}", key, e.what()));
    }
}

Timestamp get_time(const Json& j, std::string_view key)
{
    return parse_rfc3339(get<std::string>(j, key));
}

} // namespace

// --- profiles and entries --------------------------------------------------

Json to_json(const UserProfile& p)
{
    Json j;
    j["id"] = p.id;
    j["age"] = p.age;
    j["sex"] = to_string(p.sex);
    j["language"] = p.language;
    j["domains"] = p.domains;
    j["specialty"] = p.specialty;
    j["profession"] = p.profession;
    j["study_level"] = to_string(p.study_level);
    j["created_at"] = format_rfc3339(p.created_at);
    if (p.idempotency_key) j["idempotency_key"] = *p.idempotency_key;
    return j;
}

UserProfile profile_from_json(const Json& j)
{
    UserProfile p;
    p.id = get<std::string>(j, "id");
    p.age = get<int>(j, "age");
    p.sex = parse_sex(get<std::string>(j, "sex"));
    p.language = get<std::string>(j, "language");
    p.domains = get<std::vector<std::string>>(j, "domains");
    p.specialty = get<std::string>(j, "specialty");
    p.profession = get<std::string>(j, "profession");
    p.study_level = parse_study_level(get<std::string>(j, "study_level"));
    p.created_at = get_time(j, "created_at");
    if (j.contains("idempotency_key")) p.idempotency_key = get<std::string>(j, "idempotency_key");
    return p;
}

ProfileDraft draft_from_json(const Json& j)
{
    if (!j.is_object()) throw Error(Errc::invalid_field, "profile body must be a JSON object");
    ProfileDraft d;
    try {
        d.id = j.value("id", "");
        d.age = j.value("age", 0);
        d.sex = parse_sex(j.value("sex", "unspecified"));
        d.language = j.value("language", "en");
        d.domains = j.value("domains", std::vector<std::string>{});
        d.specialty = j.value("specialty", "");
        d.profession = j.value("profession", "");
        d.study_level = parse_study_level(j.value("study_level", "unspecified"));
    } catch (const Json::exception& e) {
        throw Error(Errc::invalid_field, e.what());
    }
    return d;
}

Json to_json(const ContextEntry& e)
{
    Json j;
    j["id"] = e.id;
    j["profile_id"] = e.profile_id;
    j["kind"] = to_string(e.kind);
    j["attribute"] = e.attribute;
    j["value"] = e.value;
    j["status"] = to_string(e.status);
    j["use_count"] = e.use_count;
    j["created_at"] = format_rfc3339(e.created_at);
    j["last_used_at"] = format_rfc3339(e.last_used_at);
    return j;
}

ContextEntry entry_from_json(const Json& j)
{
    ContextEntry e;
    e.id = get<std::string>(j, "id");
    e.profile_id = get<std::string>(j, "profile_id");
    e.kind = parse_entry_kind(get<std::string>(j, "kind"));
    e.attribute = get<std::string>(j, "attribute");
    e.value = get<std::string>(j, "value");
    e.status = parse_entry_status(get<std::string>(j, "status"));
    e.use_count = get<std::uint64_t>(j, "use_count");
    e.created_at = get_time(j, "created_at");
    e.last_used_at = get_time(j, "last_used_at");
    return e;
}

Json to_json(const HistoryRecord& r)
{
    Json j;
    j["profile_id"] = r.profile_id;
    j["timestamp"] = format_rfc3339(r.timestamp);
    j["raw_query"] = r.raw_query;
    j["reformulated_query"] = r.reformulated_query ? Json(*r.reformulated_query) : Json(nullptr);
    j["engine_id"] = r.engine_id;
    j["result_titles"] = r.result_titles;
    j["result_urls"] = r.result_urls;
    j["total_estimate_baseline"] = r.total_estimate_baseline;
    j["total_estimate_reformulated"] = r.total_estimate_reformulated;
    return j;
}

HistoryRecord history_from_json(const Json& j)
{
    HistoryRecord r;
    r.profile_id = get<std::string>(j, "profile_id");
    r.timestamp = get_time(j, "timestamp");
    r.raw_query = get<std::string>(j, "raw_query");
    if (const Json& q = require(j, "reformulated_query"); !q.is_null()) r.reformulated_query = get<std::string>(j, "reformulated_query");
    r.engine_id = get<std::string>(j, "engine_id");
    r.result_titles = get<std::vector<std::string>>(j, "result_titles");
    r.result_urls = get<std::vector<std::string>>(j, "result_urls");
    r.total_estimate_baseline = get<std::uint64_t>(j, "total_estimate_baseline");
    r.total_estimate_reformulated = get<std::uint64_t>(j, "total_estimate_reformulated");
    return r;
}

// --- reformulation ---------------------------------------------------------

Json to_json(const Suggestion& s)
{
    Json j;
    j["value"] = s.value;
    j["score"] = s.score;
    j["source_entry_ids"] = s.source_entry_ids;
    j["preview"] = s.preview;
    return j;
}

Json to_json(const ReformulatedQuery& q)
{
    Json j;
    j["original"] = q.original;
    j["expanded"] = q.expanded;
    j["added_terms"] = q.added_terms;
    j["mode"] = to_string(q.mode);
    return j;
}

ReformulatedQuery reformulation_from_json(const Json& j)
{
    ReformulatedQuery q;
    q.original = get<std::string>(j, "original");
    q.expanded = get<std::string>(j, "expanded");
    q.added_terms = get<std::vector<std::string>>(j, "added_terms");
    q.mode = parse_reformulation_mode(get<std::string>(j, "mode"));
    return q;
}

// --- search ----------------------------------------------------------------

Json to_json(const SearchResult& r)
{
    Json j;
    j["rank"] = r.rank;
    j["title"] = r.title;
    j["url"] = r.url;
    j["snippet"] = r.snippet;
    j["engine_id"] = r.engine_id;
    return j;
}

SearchResult result_from_json(const Json& j)
{
    SearchResult r;
    r.rank = get<int>(j, "rank");
    r.title = get<std::string>(j, "title");
    r.url = get<std::string>(j, "url");
    r.snippet = get<std::string>(j, "snippet");
    r.engine_id = get<std::string>(j, "engine_id");
    return r;
}

Json to_json(const SearchResponse& r)
{
    Json j;
    j["query"] = r.query;
    j["total_estimate"] = r.total_estimate;
    Json results = Json::array();
    for (const auto& item : r.results) results.push_back(to_json(item));
    j["results"] = std::move(results);
    return j;
}

SearchResponse response_from_json(const Json& j)
{
    SearchResponse r;
    r.query = get<std::string>(j, "query");
    r.total_estimate = get<std::uint64_t>(j, "total_estimate");
    for (const auto& item : require(j, "results")) r.results.push_back(result_from_json(item));
    return r;
}

Json to_json(const ComparisonResult& c)
{
    Json j;
    j["baseline"] = to_json(c.baseline);
    j["reformulated"] = to_json(c.reformulated);
    j["reformulation"] = to_json(c.reformulation);
    j["total_estimates"] = {{"baseline", c.baseline.total_estimate},
                            {"reformulated", c.reformulated.total_estimate}};

    Json proposals = Json::array();
    for (const auto& term : c.proposals) {
        Json p;
        p["term"] = term;
        auto it = std::find_if(c.proposal_entries.begin(), c.proposal_entries.end(),
                               [&](const ContextEntry& e) { return e.value == term; });
        if (it != c.proposal_entries.end()) {
            p["entry"] = to_json(*it);
        } else {
            p["entry"] = nullptr;
        }
        proposals.push_back(std::move(p));
    }
    j["proposals"] = std::move(proposals);
    return j;
}

ComparisonResult comparison_from_json(const Json& j)
{
    ComparisonResult c;
    c.baseline = response_from_json(require(j, "baseline"));
    c.reformulated = response_from_json(require(j, "reformulated"));
    c.reformulation = reformulation_from_json(require(j, "reformulation"));
    for (const auto& p : require(j, "proposals")) {
        c.proposals.push_back(get<std::string>(p, "term"));
        if (const Json& e = require(p, "entry"); !e.is_null()) c.proposal_entries.push_back(entry_from_json(e));
    }
    return c;
}

} // namespace presy
