#pragma once

#include "presy/context_store.hpp"
#include "presy/error.hpp"
#include "presy/search_gateway.hpp"

#include <memory>
#include <string>
#include <string_view>

namespace presy {

struct ListenAddress {
    std::string host = "127.0.0.1";
    int port = 8750;
};

// "host:port"; throws Error(invalid_argument).
ListenAddress parse_listen_address(std::string_view text);
// PRESY_ADDR, else 127.0.0.1:8750
ListenAddress default_listen_address();

struct ServiceOptions {
    std::string cors_origin = "*";
};

// HTTP status for a domain error on the wire.
int http_status_for(Errc code) noexcept;

// JSON API over the store, the reformulation engine and the providers:
//
//   POST /profiles                          create (Idempotency-Key required)
//   GET  /profiles/{id}                     profile with its context entries
//   GET  /profiles/{id}/context             entries, ?prefix= &status=
//   GET  /profiles/{id}/suggest?q=&limit=   reformulation suggestions
//   POST /profiles/{id}/search              {query, engine, mode, terms}
//   POST /profiles/{id}/context/validate    [{entry_id, decision}]
//   GET  /profiles/{id}/history
//   GET  /engines
//   POST /eval/run                          {profile, engine, scenarios, modes}
//
// Errors are {"code": ..., "message": ...}.
class ApiServer {
public:
    ApiServer(ContextStore& store, ProviderRegistry& providers, ServiceOptions options = {});
    ~ApiServer();

    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    // Port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port);
    // Blocks until stop().
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace presy
