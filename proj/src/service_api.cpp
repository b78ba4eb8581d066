#include "presy/service_api.hpp"

#include "presy/evaluation.hpp"
#include "presy/json_io.hpp"
#include "presy/reformulation.hpp"

#include "httplib.h"

#include <fmt/core.h>

#include <charconv>
#include <cstdlib>

namespace presy {

ListenAddress parse_listen_address(std::string_view text)
{
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos || colon == 0)
        throw Error(Errc::invalid_argument, fmt::format("listen address '{}' must be host:port", text));
    ListenAddress addr;
    addr.host = std::string(text.substr(0, colon));
    const auto port = text.substr(colon + 1);
    auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), addr.port);
    if (ec != std::errc{} || ptr != port.data() + port.size() || addr.port < 0 || addr.port > 65535)
        throw Error(Errc::invalid_argument, fmt::format("listen address '{}' has a bad port", text));
    return addr;
}

ListenAddress default_listen_address()
{
    if (const char* env = std::getenv("PRESY_ADDR"); env && *env) return parse_listen_address(env);
    return {};
}

int http_status_for(Errc code) noexcept
{
    switch (code) {
    case Errc::unknown_profile:
    case Errc::unknown_entry:
    case Errc::unknown_provider:
        return 404;
    case Errc::duplicate_id:
    case Errc::illegal_transition:
        return 409;
    case Errc::provider_unavailable:
    case Errc::malformed_provider_response:
        return 502;
    case Errc::io_error:
    case Errc::corrupt_data:
        return 500;
    default:
        return 400;
    }
}

namespace {

constexpr std::size_t kDefaultSuggestLimit = 10;

struct ApiError {
    int status;
    std::string code;
    std::string message;
};

void send_json(httplib::Response& res, int status, const Json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const ApiError& e)
{
    send_json(res, e.status, Json{{"code", e.code}, {"message", e.message}});
}

Json parse_body(const httplib::Request& req)
{
    try {
        return Json::parse(req.body);
    } catch (const Json::exception&) {
        throw ApiError{400, "invalid_json", "request body is not valid JSON"};
    }
}

std::string string_field(const Json& body, const char* key, bool required)
{
    auto it = body.is_object() ? body.find(key) : body.end();
    if (it == body.end() || it->is_null()) {
        if (required) throw ApiError{400, "missing_parameter", fmt::format("'{}' is required", key)};
        return {};
    }
    if (!it->is_string()) throw ApiError{400, "invalid_parameter", fmt::format("'{}' must be a string", key)};
    return it->get<std::string>();
}

std::size_t parse_limit(const httplib::Request& req)
{
    if (!req.has_param("limit")) return kDefaultSuggestLimit;
    const std::string text = req.get_param_value("limit");
    std::size_t limit = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), limit);
    if (ec != std::errc{} || ptr != text.data() + text.size() || limit == 0)
        throw ApiError{400, "invalid_parameter", "limit must be a positive integer"};
    return limit;
}

Json profile_payload(const ContextStore& store, const UserProfile& profile)
{
    Json j = to_json(profile);
    Json entries = Json::array();
    for (const auto& e : store.entries(profile.id)) entries.push_back(to_json(e));
    j["entries"] = std::move(entries);
    return j;
}

} // namespace

struct ApiServer::Impl {
    ContextStore& store;
    ProviderRegistry& providers;
    ReformulationEngine engine;
    ServiceOptions options;
    httplib::Server server;

    Impl(ContextStore& s, ProviderRegistry& p, ServiceOptions o)
        : store(s), providers(p), engine(s), options(std::move(o))
    {
        // Small JSON replies would otherwise wait on delayed ACKs.
        server.set_tcp_nodelay(true);
        routes();
    }

    // Runs a handler, turning domain and request errors into error bodies.
    template <typename Handler>
    httplib::Server::Handler wrap(Handler handler)
    {
        return [handler](const httplib::Request& req, httplib::Response& res) {
            try {
                handler(req, res);
            } catch (const ApiError& e) {
                send_error(res, e);
            } catch (const Error& e) {
                send_error(res, {http_status_for(e.code()), std::string(to_string(e.code())), e.what()});
            } catch (const std::exception&) {
                send_error(res, {500, "internal", "internal error"});
            }
        };
    }

    void routes()
    {
        server.set_post_routing_handler([this](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Origin", options.cors_origin);
            res.set_header("Vary", "Origin");
        });
        server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type, Idempotency-Key");
            res.status = 204;
        });

        server.Post("/profiles", wrap([this](const httplib::Request& req, httplib::Response& res) {
            const Json body = parse_body(req);
            ProfileDraft draft = draft_from_json(body);
            std::string key = req.get_header_value("Idempotency-Key");
            if (key.empty()) key = string_field(body, "idempotency_key", false);
            if (key.empty())
                throw ApiError{400, "missing_idempotency_key", "profile creation needs an Idempotency-Key header"};
            draft.idempotency_key = key;
            bool repeat = false;
            for (const auto& id : store.profile_ids()) repeat = repeat || store.profile(id).idempotency_key == key;
            const UserProfile p = store.create_profile(draft);
            send_json(res, repeat ? 200 : 201, profile_payload(store, p));
        }));

        server.Get(R"(/profiles/([A-Za-z0-9_-]+))", wrap([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, profile_payload(store, store.profile(req.matches[1].str())));
        }));

        server.Get(R"(/profiles/([A-Za-z0-9_-]+)/context)",
                   wrap([this](const httplib::Request& req, httplib::Response& res) {
                       StatusSet statuses;
                       if (req.has_param("status")) {
                           statuses.insert(parse_entry_status(req.get_param_value("status")));
                       } else {
                           statuses = {EntryStatus::proposed, EntryStatus::validated, EntryStatus::rejected};
                       }
                       const std::string prefix = req.has_param("prefix") ? req.get_param_value("prefix") : "";
                       Json entries = Json::array();
                       for (const auto& e : store.query_entries(req.matches[1].str(), prefix, statuses))
                           entries.push_back(to_json(e));
                       send_json(res, 200, Json{{"entries", std::move(entries)}});
                   }));

        server.Get(R"(/profiles/([A-Za-z0-9_-]+)/suggest)",
                   wrap([this](const httplib::Request& req, httplib::Response& res) {
                       const std::string profile_id = req.matches[1].str();
                       store.profile(profile_id);
                       if (!req.has_param("q")) throw ApiError{400, "missing_parameter", "'q' is required"};
                       const std::string q = req.get_param_value("q");
                       Json list = Json::array();
                       for (const auto& s : engine.suggest(profile_id, q, parse_limit(req))) list.push_back(to_json(s));
                       send_json(res, 200, Json{{"query", q}, {"suggestions", std::move(list)}});
                   }));

        server.Post(R"(/profiles/([A-Za-z0-9_-]+)/search)",
                    wrap([this](const httplib::Request& req, httplib::Response& res) {
                        const std::string profile_id = req.matches[1].str();
                        store.profile(profile_id);
                        const Json body = parse_body(req);
                        const std::string query = string_field(body, "query", true);
                        const auto provider = providers.get(string_field(body, "engine", true));
                        SearchMode mode;
                        const std::string mode_name = string_field(body, "mode", false);
                        mode.mode = parse_reformulation_mode(mode_name.empty() ? "off" : mode_name);
                        if (auto it = body.find("terms"); it != body.end()) {
                            try {
                                mode.manual_terms = it->get<std::vector<std::string>>();
                            } catch (const Json::exception&) {
                                throw ApiError{400, "invalid_parameter", "'terms' must be a list of strings"};
                            }
                        }
                        send_json(res, 200, to_json(dual_search(engine, *provider, profile_id, query, mode)));
                    }));

        server.Post(R"(/profiles/([A-Za-z0-9_-]+)/context/validate)",
                    wrap([this](const httplib::Request& req, httplib::Response& res) {
                        const std::string profile_id = req.matches[1].str();
                        store.profile(profile_id);
                        const Json body = parse_body(req);
                        const Json* items = &body;
                        if (body.is_object()) {
                            auto it = body.find("decisions");
                            if (it == body.end()) throw ApiError{400, "missing_parameter", "'decisions' is required"};
                            items = &*it;
                        }
                        if (!items->is_array())
                            throw ApiError{400, "invalid_parameter", "expected a list of {entry_id, decision}"};

                        Json results = Json::array();
                        for (const auto& item : *items) {
                            const std::string entry_id = string_field(item, "entry_id", true);
                            Json out{{"entry_id", entry_id}};
                            try {
                                if (store.entry(entry_id).profile_id != profile_id)
                                    throw Error(Errc::unknown_entry,
                                                fmt::format("entry '{}' does not belong to '{}'", entry_id, profile_id));
                                const auto decision = parse_entry_status(string_field(item, "decision", true));
                                out["ok"] = true;
                                out["entry"] = to_json(store.set_entry_status(entry_id, decision));
                            } catch (const Error& e) {
                                out["ok"] = false;
                                out["error"] = {{"code", to_string(e.code())}, {"message", e.what()}};
                            }
                            results.push_back(std::move(out));
                        }
                        send_json(res, 200, Json{{"results", std::move(results)}});
                    }));

        server.Get(R"(/profiles/([A-Za-z0-9_-]+)/history)",
                   wrap([this](const httplib::Request& req, httplib::Response& res) {
                       Json list = Json::array();
                       for (const auto& r : store.history(req.matches[1].str())) list.push_back(to_json(r));
                       send_json(res, 200, Json{{"history", std::move(list)}});
                   }));

        server.Get("/engines", wrap([this](const httplib::Request&, httplib::Response& res) {
            Json list = Json::array();
            for (const auto& id : providers.ids()) {
                const auto p = providers.get(id);
                list.push_back({{"id", id}, {"kind", p->kind()}});
            }
            send_json(res, 200, Json{{"engines", std::move(list)}});
        }));

        server.Post("/eval/run", wrap([this](const httplib::Request& req, httplib::Response& res) {
            const Json body = parse_body(req);
            const std::string profile_id = string_field(body, "profile", true);
            const auto provider = providers.get(string_field(body, "engine", true));
            auto list = body.find("scenarios");
            if (list == body.end()) throw ApiError{400, "missing_parameter", "'scenarios' is required"};
            std::vector<EvaluationScenario> scenarios;
            try {
                scenarios = parse_scenarios(Json{{"scenarios", *list}}.dump());
            } catch (const Error& e) {
                throw ApiError{400, "invalid_scenarios", e.what()};
            }
            std::set<EvalMode> modes{EvalMode::without_reformulation, EvalMode::with_reformulation};
            if (auto it = body.find("modes"); it != body.end()) {
                modes.clear();
                if (!it->is_array()) throw ApiError{400, "invalid_parameter", "'modes' must be a list"};
                for (const auto& m : *it) {
                    if (!m.is_string()) throw ApiError{400, "invalid_parameter", "'modes' must be a list of strings"};
                    modes.insert(parse_eval_mode(m.get<std::string>()));
                }
            }
            const auto report = run_suite(scenarios, *provider, engine, profile_id, modes);
            res.status = 200;
            res.set_content(report_to_json(report), "application/json");
        }));
    }
};

ApiServer::ApiServer(ContextStore& store, ProviderRegistry& providers, ServiceOptions options)
    : impl_(std::make_unique<Impl>(store, providers, std::move(options)))
{
}

ApiServer::~ApiServer()
{
    stop();
}

int ApiServer::bind(const std::string& host, int port)
{
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) throw Error(Errc::io_error, fmt::format("cannot bind {}", host));
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) throw Error(Errc::io_error, fmt::format("cannot bind {}:{}", host, port));
    return port;
}

void ApiServer::listen()
{
    impl_->server.listen_after_bind();
}

void ApiServer::stop()
{
    if (impl_) impl_->server.stop();
}

} // namespace presy
