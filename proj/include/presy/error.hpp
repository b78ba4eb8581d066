#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace presy {

enum class Errc {
    invalid_argument,
    invalid_field,
    unsupported_language,
    unknown_profile,
    unknown_entry,
    illegal_transition,
    malformed_record,
    duplicate_id,
    missing_config,
    duplicate_url,
    unknown_provider,
    provider_unavailable,
    malformed_provider_response,
    unparsable_url,
    too_many_results,
    wrong_row_count,
    mismatched_engines,
    io_error,
    corrupt_data,
};

// Stable machine-readable identifier, also used as the API error code.
std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace presy
