#pragma once

#include "presy/search_gateway.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace presy::cli {

enum ExitStatus : int { kSuccess = 0, kDomainError = 1, kUsageError = 2 };

enum class Format { json, table };

// json is the API payload; table is a side-by-side listing for terminals.
std::string render_comparison(const ComparisonResult& result, Format format);

// presy.json: {"engines": [{"id", "kind", "corpus" | "endpoint", "mapping",
// "timeout_ms", "language"}]}. Relative corpus paths resolve against the
// config file's directory.
struct EngineDecl {
    std::string id;
    ProviderConfig config;
};
std::vector<EngineDecl> parse_config(std::string_view json_text, const std::filesystem::path& base_dir);
std::vector<EngineDecl> load_config(const std::filesystem::path& file);

// Entry point behind the `presy` binary. args excludes the program name.
int dispatch(std::span<const std::string> args, std::istream& in, std::ostream& out, std::ostream& err);

} // namespace presy::cli
