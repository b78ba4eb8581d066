#include "presy/error.hpp"

namespace presy {

std::string_view to_string(Errc code) noexcept
{
    switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::invalid_field: return "invalid_field";
    case Errc::unsupported_language: return "unsupported_language";
    case Errc::unknown_profile: return "unknown_profile";
    case Errc::unknown_entry: return "unknown_entry";
    case Errc::illegal_transition: return "illegal_transition";
    case Errc::malformed_record: return "malformed_record";
    case Errc::duplicate_id: return "duplicate_id";
    case Errc::missing_config: return "missing_config";
    case Errc::duplicate_url: return "duplicate_url";
    case Errc::unknown_provider: return "unknown_provider";
    case Errc::provider_unavailable: return "provider_unavailable";
    case Errc::malformed_provider_response: return "malformed_provider_response";
    case Errc::unparsable_url: return "unparsable_url";
    case Errc::too_many_results: return "too_many_results";
    case Errc::wrong_row_count: return "wrong_row_count";
    case Errc::mismatched_engines: return "mismatched_engines";
    case Errc::io_error: return "io_error";
    case Errc::corrupt_data: return "corrupt_data";
    }
    return "unknown";
}

} // namespace presy
