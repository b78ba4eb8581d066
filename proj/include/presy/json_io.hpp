#pragma once

// JSON mappings for the wire and file formats. Field names follow the
// persisted documents; timestamps are RFC 3339 strings.

#include "presy/context_store.hpp"
#include "presy/evaluation.hpp"
#include "presy/reformulation.hpp"
#include "presy/search_gateway.hpp"

#include <nlohmann/json.hpp>

namespace presy {

using Json = nlohmann::ordered_json;

Json to_json(const UserProfile& p);
UserProfile profile_from_json(const Json& j);

Json to_json(const ContextEntry& e);
ContextEntry entry_from_json(const Json& j);

Json to_json(const HistoryRecord& r);
HistoryRecord history_from_json(const Json& j);

Json to_json(const Suggestion& s);
Json to_json(const ReformulatedQuery& q);
ReformulatedQuery reformulation_from_json(const Json& j);

Json to_json(const SearchResult& r);
SearchResult result_from_json(const Json& j);
Json to_json(const SearchResponse& r);
SearchResponse response_from_json(const Json& j);

// The comparison payload shared by the API and `presy search`.
Json to_json(const ComparisonResult& c);
ComparisonResult comparison_from_json(const Json& j);

ProfileDraft draft_from_json(const Json& j);

// Throws Error(corrupt_data) when a required field is missing or mistyped.
const Json& require(const Json& j, std::string_view key);

} // namespace presy
