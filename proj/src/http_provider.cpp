#include "presy/error.hpp"
#include "presy/json_io.hpp"
#include "presy/search_gateway.hpp"

#include "httplib.h"

#include <fmt/core.h>

namespace presy {

namespace {

Json::json_pointer pointer(const std::string& path)
{
    try {
        return Json::json_pointer(path);
    } catch (const Json::exception& e) {
        throw Error(Errc::invalid_argument, fmt::format("bad response mapping path '{}': {}", path, e.what()));
    }
}

[[noreturn]] void malformed(const std::string& provider, const std::string& what)
{
    throw Error(Errc::malformed_provider_response, fmt::format("provider '{}': {}", provider, what));
}

void replace_all(std::string& text, std::string_view from, std::string_view to)
{
    for (std::size_t pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size()))
        text.replace(pos, from.size(), to);
}

} // namespace

std::string url_encode(std::string_view text)
{
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' ||
            c == '.' || c == '~') {
            out.push_back(ch);
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0x0F]);
        }
    }
    return out;
}

HttpProvider::HttpProvider(std::string id, std::string endpoint, ResponseMapping mapping,
                           std::chrono::milliseconds timeout)
    : id_(std::move(id)), mapping_(std::move(mapping)), timeout_(timeout)
{
    constexpr std::string_view scheme = "http://";
    if (endpoint.rfind(scheme, 0) != 0)
        throw Error(Errc::invalid_argument, fmt::format("endpoint '{}' must start with http://", endpoint));
    const auto slash = endpoint.find('/', scheme.size());
    origin_ = endpoint.substr(0, slash);
    path_template_ = slash == std::string::npos ? "/" : endpoint.substr(slash);
    if (origin_.size() == scheme.size()) throw Error(Errc::invalid_argument, fmt::format("endpoint '{}' has no host", endpoint));

    // Fail at registration rather than on the first search.
    pointer(mapping_.results);
    pointer(mapping_.title);
    pointer(mapping_.url);
    pointer(mapping_.snippet);
    if (!mapping_.total.empty()) pointer(mapping_.total);
}

SearchResponse HttpProvider::search(std::string_view query, std::size_t limit) const
{
    if (limit == 0) throw Error(Errc::invalid_argument, "limit must be at least 1");

    std::string path = path_template_;
    replace_all(path, "{query}", url_encode(query));
    replace_all(path, "{limit}", std::to_string(limit));

    httplib::Client client(origin_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    auto res = client.Get(path);
    if (!res)
        throw Error(Errc::provider_unavailable,
                    fmt::format("provider '{}': {}", id_, httplib::to_string(res.error())));
    if (res->status < 200 || res->status >= 300)
        throw Error(Errc::provider_unavailable, fmt::format("provider '{}': HTTP status {}", id_, res->status));
    return map_response(query, res->body, limit);
}

SearchResponse HttpProvider::map_response(std::string_view query, std::string_view body, std::size_t limit) const
{
    Json doc;
    try {
        doc = Json::parse(body);
    } catch (const Json::exception& e) {
        malformed(id_, fmt::format("body is not JSON ({})", e.what()));
    }

    const auto results_ptr = pointer(mapping_.results);
    if (!doc.contains(results_ptr) || !doc.at(results_ptr).is_array())
        malformed(id_, fmt::format("no results array at '{}'", mapping_.results));
    const Json& items = doc.at(results_ptr);

    auto text_at = [&](const Json& item, const std::string& path, bool required) -> std::string {
        const auto ptr = pointer(path);
        if (!item.contains(ptr)) {
            if (required) malformed(id_, fmt::format("result without '{}'", path));
            return {};
        }
        const Json& v = item.at(ptr);
        if (!v.is_string()) malformed(id_, fmt::format("'{}' is not a string", path));
        return v.get<std::string>();
    };

    SearchResponse response;
    response.query = std::string(query);
    for (const auto& item : items) {
        if (response.results.size() == limit) break;
        SearchResult r;
        r.rank = static_cast<int>(response.results.size() + 1);
        r.url = text_at(item, mapping_.url, true);
        if (r.url.empty()) malformed(id_, "result with empty url");
        r.title = text_at(item, mapping_.title, false);
        r.snippet = text_at(item, mapping_.snippet, false);
        r.engine_id = id_;
        response.results.push_back(std::move(r));
    }

    std::uint64_t total = items.size();
    if (!mapping_.total.empty()) {
        const auto total_ptr = pointer(mapping_.total);
        if (!doc.contains(total_ptr)) malformed(id_, fmt::format("no total estimate at '{}'", mapping_.total));
        const Json& t = doc.at(total_ptr);
        if (t.is_number_unsigned() || (t.is_number_integer() && t.get<std::int64_t>() >= 0)) {
            total = t.get<std::uint64_t>();
        } else if (t.is_string()) {
            try {
                std::size_t used = 0;
                const std::string s = t.get<std::string>();
                total = std::stoull(s, &used);
                if (used != s.size()) throw std::invalid_argument("trailing characters");
            } catch (const std::exception&) {
                malformed(id_, "total estimate is not a whole number");
            }
        } else {
            malformed(id_, "total estimate is not a whole number");
        }
    }
    response.total_estimate = std::max<std::uint64_t>(total, response.results.size());
    return response;
}

} // namespace presy
