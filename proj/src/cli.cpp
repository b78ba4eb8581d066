#include "presy/cli.hpp"

#include "presy/context_store.hpp"
#include "presy/error.hpp"
#include "presy/evaluation.hpp"
#include "presy/json_io.hpp"
#include "presy/reformulation.hpp"
#include "presy/service_api.hpp"

#include "CLI11.hpp"

#include <fmt/core.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace presy::cli {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Rendering

namespace {

constexpr std::size_t kColumnWidth = 44;

// Pads or truncates to a fixed number of code points.
std::string fit(std::string_view text, std::size_t width)
{
    std::string out;
    std::size_t chars = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const bool lead = (static_cast<unsigned char>(text[i]) & 0xC0) != 0x80;
        if (lead) {
            if (chars == width) {
                // Replace the last character with an ellipsis marker.
                while (!out.empty() && (static_cast<unsigned char>(out.back()) & 0xC0) == 0x80) out.pop_back();
                if (!out.empty()) out.pop_back();
                out += '~';
                return out;
            }
            ++chars;
        }
        out += text[i];
    }
    out.append(width - chars, ' ');
    return out;
}

std::string join(const std::vector<std::string>& items, std::string_view sep)
{
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

} // namespace

std::string render_comparison(const ComparisonResult& result, Format format)
{
    if (format == Format::json) return to_json(result).dump(2) + "\n";

    const auto& rq = result.reformulation;
    const auto base_total = static_cast<long long>(result.baseline.total_estimate);
    const auto ref_total = static_cast<long long>(result.reformulated.total_estimate);

    std::string out;
    out += fmt::format("Query without reformulation: {}\n", result.baseline.query);
    out += fmt::format("Query with reformulation:    {}\n", result.reformulated.query);
    out += fmt::format("Mode: {}    Added terms: {}\n", to_string(rq.mode),
                       rq.added_terms.empty() ? "(none)" : join(rq.added_terms, ", "));
    out += fmt::format("Total estimate: without {} | with {} ({:+d})\n\n", base_total, ref_total, ref_total - base_total);

    const std::string rule(kColumnWidth + 2, '-');
    out += fmt::format("Rank | {} | {}\n", fit("Without reformulation", kColumnWidth), fit("With reformulation", kColumnWidth));
    out += fmt::format("-----+{}+{}\n", rule, rule);

    const auto& a = result.baseline.results;
    const auto& b = result.reformulated.results;
    if (a.empty() && b.empty()) {
        out += fmt::format("     | {} | {}\n", fit("(no results)", kColumnWidth), fit("(no results)", kColumnWidth));
    }
    const std::size_t rows = std::max(a.size(), b.size());
    for (std::size_t i = 0; i < rows; ++i) {
        auto cell = [&](const std::vector<SearchResult>& list, bool url) -> std::string {
            if (i < list.size()) return url ? list[i].url : list[i].title;
            if (i == 0 && !url) return "(no results)";
            return {};
        };
        out += fmt::format("{:>4} | {} | {}\n", i + 1, fit(cell(a, false), kColumnWidth), fit(cell(b, false), kColumnWidth));
        out += fmt::format("     | {} | {}\n", fit(cell(a, true), kColumnWidth), fit(cell(b, true), kColumnWidth));
    }

    if (!result.proposals.empty()) out += fmt::format("\nProposed context terms: {}\n", join(result.proposals, ", "));
    return out;
}

// ---------------------------------------------------------------------------
// Configuration

std::vector<EngineDecl> parse_config(std::string_view json_text, const fs::path& base_dir)
{
    Json doc;
    try {
        doc = Json::parse(json_text);
    } catch (const Json::exception& e) {
        throw Error(Errc::corrupt_data, fmt::format("config is not valid JSON: {}", e.what()));
    }

    std::vector<EngineDecl> out;
    if (!doc.contains("engines")) return out;
    try {
        for (const auto& item : doc.at("engines")) {
            EngineDecl decl;
            decl.id = require(item, "id").get<std::string>();
            const auto kind = item.value("kind", "local");
            if (kind == "local") decl.config.kind = ProviderKind::local;
            else if (kind == "http") decl.config.kind = ProviderKind::http;
            else throw Error(Errc::invalid_field, fmt::format("engine '{}': unknown kind '{}'", decl.id, kind));
            if (item.contains("corpus")) {
                fs::path corpus = item.at("corpus").get<std::string>();
                decl.config.corpus = corpus.is_absolute() ? corpus : base_dir / corpus;
            }
            if (item.contains("endpoint")) decl.config.endpoint = item.at("endpoint").get<std::string>();
            if (item.contains("mapping")) {
                const Json& m = item.at("mapping");
                decl.config.mapping.results = m.value("results", decl.config.mapping.results);
                decl.config.mapping.title = m.value("title", decl.config.mapping.title);
                decl.config.mapping.url = m.value("url", decl.config.mapping.url);
                decl.config.mapping.snippet = m.value("snippet", decl.config.mapping.snippet);
                decl.config.mapping.total = m.value("total", decl.config.mapping.total);
            }
            if (item.contains("timeout_ms")) decl.config.timeout = std::chrono::milliseconds(item.at("timeout_ms").get<long>());
            decl.config.language = item.value("language", decl.config.language);
            out.push_back(std::move(decl));
        }
    } catch (const Json::exception& e) {
        throw Error(Errc::corrupt_data, fmt::format("config: {}", e.what()));
    }
    return out;
}

std::vector<EngineDecl> load_config(const fs::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(Errc::io_error, fmt::format("cannot read config {}", file.string()));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), file.parent_path());
}

// ---------------------------------------------------------------------------
// Dispatch

namespace {

struct Options {
    std::string data_dir;
    std::string config;
    std::string profile;

    // profile create
    ProfileDraft draft;
    std::string sex = "unspecified";
    std::string study_level = "unspecified";
    std::string idempotency_key;
    std::string show_id;

    std::string query;
    std::size_t limit = 10;
    std::string engine;
    std::string mode = "off";
    std::vector<std::string> added;
    std::string format = "json";

    std::vector<std::string> accept;
    std::vector<std::string> reject;

    std::string scenarios;
    std::string report_out;
    std::vector<std::string> eval_modes;

    std::string addr;
};

struct Runtime {
    std::unique_ptr<ContextStore> store;
    std::unique_ptr<ProviderRegistry> providers;
};

Runtime open_runtime(const Options& opt)
{
    Runtime rt;
    const fs::path data_dir = opt.data_dir.empty() ? ContextStore::default_data_dir() : fs::path(opt.data_dir);
    rt.store = std::make_unique<ContextStore>(data_dir);
    rt.providers = std::make_unique<ProviderRegistry>(rt.store->stopwords());

    fs::path config = opt.config;
    if (config.empty())
        if (const char* env = std::getenv("PRESY_CONFIG"); env && *env) config = env;
    if (config.empty() && fs::exists("presy.json")) config = "presy.json";
    if (!config.empty())
        for (const auto& decl : load_config(config)) rt.providers->register_provider(decl.id, decl.config);
    return rt;
}

Json profile_payload(const ContextStore& store, const UserProfile& p)
{
    Json j = to_json(p);
    Json entries = Json::array();
    for (const auto& e : store.entries(p.id)) entries.push_back(to_json(e));
    j["entries"] = std::move(entries);
    return j;
}

void write_text_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io_error, fmt::format("cannot write {}", path.string()));
    out << text;
    if (!out) throw Error(Errc::io_error, fmt::format("short write to {}", path.string()));
}

// y/n per pending proposal; s skips, q stops.
std::vector<ContextEntry> enrich_interactive(ContextStore& store, const std::string& profile_id, std::istream& in,
                                             std::ostream& err)
{
    std::vector<ContextEntry> updated;
    for (const auto& e : store.query_entries(profile_id, "", {EntryStatus::proposed})) {
        for (;;) {
            err << fmt::format("{} -> {} ? [y]es/[n]o/[s]kip/[q]uit: ", e.attribute, e.value) << std::flush;
            std::string answer;
            if (!std::getline(in, answer)) return updated;
            answer = normalize(answer);
            if (answer == "y" || answer == "yes") {
                updated.push_back(store.set_entry_status(e.id, EntryStatus::validated));
            } else if (answer == "n" || answer == "no") {
                updated.push_back(store.set_entry_status(e.id, EntryStatus::rejected));
            } else if (answer == "q" || answer == "quit") {
                return updated;
            } else if (answer != "s" && answer != "skip") {
                continue;
            }
            break;
        }
    }
    return updated;
}

std::vector<ContextEntry> enrich_batch(ContextStore& store, const std::string& profile_id,
                                       const std::vector<std::string>& accept, const std::vector<std::string>& reject)
{
    auto matches = [](const std::vector<std::string>& terms, const ContextEntry& e) {
        for (const auto& t : terms) {
            const std::string n = normalize(t);
            if (n == e.value || n == e.attribute + "=" + e.value) return true;
        }
        return false;
    };
    std::vector<ContextEntry> updated;
    for (const auto& e : store.query_entries(profile_id, "", {EntryStatus::proposed})) {
        if (matches(accept, e)) updated.push_back(store.set_entry_status(e.id, EntryStatus::validated));
        else if (matches(reject, e)) updated.push_back(store.set_entry_status(e.id, EntryStatus::rejected));
    }
    return updated;
}

} // namespace

int dispatch(std::span<const std::string> args, std::istream& in, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Contextual query reformulation from user profiles", "presy"};
    app.require_subcommand(1);
    Options opt;
    app.add_option("--data-dir", opt.data_dir, "Data directory (default: $PRESY_DATA_DIR or ./presy-data)");
    app.add_option("--config", opt.config, "Engine configuration (default: $PRESY_CONFIG or ./presy.json)");

    auto* profile = app.add_subcommand("profile", "Create or show a user profile");
    profile->require_subcommand(1);
    auto* create = profile->add_subcommand("create", "Create a profile and derive its static context");
    create->add_option("--id", opt.draft.id, "Profile id (generated when omitted)");
    create->add_option("--age", opt.draft.age)->check(CLI::NonNegativeNumber);
    create->add_option("--sex", opt.sex)->check(CLI::IsMember({"female", "male", "unspecified"}));
    create->add_option("--language", opt.draft.language, "Two-letter language code")->default_val("en");
    create->add_option("--domain", opt.draft.domains, "Domain of competence (repeatable)");
    create->add_option("--specialty", opt.draft.specialty);
    create->add_option("--profession", opt.draft.profession);
    create->add_option("--study-level", opt.study_level)
        ->check(CLI::IsMember({"primary", "secondary", "undergraduate", "graduate", "doctoral", "unspecified"}));
    create->add_option("--idempotency-key", opt.idempotency_key);
    auto* show = profile->add_subcommand("show", "Print a profile with its context entries");
    show->add_option("id", opt.show_id)->required();

    auto* suggest = app.add_subcommand("suggest", "List reformulation suggestions for a partial query");
    suggest->add_option("query", opt.query)->required();
    suggest->add_option("--profile", opt.profile)->required();
    suggest->add_option("--limit", opt.limit)->check(CLI::PositiveNumber);

    auto* search = app.add_subcommand("search", "Search with and without reformulation");
    search->add_option("query", opt.query)->required();
    search->add_option("--profile", opt.profile)->required();
    search->add_option("--engine", opt.engine)->required();
    search->add_option("--mode", opt.mode)->check(CLI::IsMember({"off", "auto", "manual"}));
    search->add_option("--add", opt.added, "Term to add in manual mode (repeatable)");
    search->add_option("--format", opt.format)->check(CLI::IsMember({"json", "table"}));

    auto* enrich = app.add_subcommand("enrich", "Accept or reject proposed context terms");
    enrich->add_option("--profile", opt.profile)->required();
    enrich->add_option("--accept", opt.accept, "Validate proposals with this value (or attr=value)");
    enrich->add_option("--reject", opt.reject, "Reject proposals with this value (or attr=value)");

    auto* history = app.add_subcommand("history", "Print the search history of a profile");
    history->add_option("--profile", opt.profile)->required();

    auto* engines = app.add_subcommand("engines", "List configured search engines");

    auto* eval = app.add_subcommand("eval", "Evaluation harness");
    eval->require_subcommand(1);
    auto* eval_run = eval->add_subcommand("run", "Score a 15-scenario suite with and without reformulation");
    eval_run->add_option("scenarios", opt.scenarios)->required();
    eval_run->add_option("--engine", opt.engine)->required();
    eval_run->add_option("--profile", opt.profile)->required();
    eval_run->add_option("--out", opt.report_out, "Report file (stdout when omitted)");
    eval_run->add_option("--mode", opt.eval_modes, "with and/or without (default: both)")
        ->check(CLI::IsMember({"with", "without"}));

    auto* serve = app.add_subcommand("serve", "Run the HTTP API");
    serve->add_option("--addr", opt.addr, "host:port (default: $PRESY_ADDR or 127.0.0.1:8750)");

    std::vector<const char*> argv{"presy"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "presy: " << e.what() << "\n\n" << app.help();
        return kUsageError;
    }

    try {
        Runtime rt = open_runtime(opt);
        ContextStore& store = *rt.store;

        if (create->parsed()) {
            opt.draft.sex = parse_sex(opt.sex);
            opt.draft.study_level = parse_study_level(opt.study_level);
            if (!opt.idempotency_key.empty()) opt.draft.idempotency_key = opt.idempotency_key;
            const auto p = store.create_profile(opt.draft);
            out << profile_payload(store, p).dump(2) << '\n';
        } else if (show->parsed()) {
            out << profile_payload(store, store.profile(opt.show_id)).dump(2) << '\n';
        } else if (suggest->parsed()) {
            ReformulationEngine engine(store);
            Json list = Json::array();
            for (const auto& s : engine.suggest(opt.profile, opt.query, opt.limit)) list.push_back(to_json(s));
            out << Json{{"query", opt.query}, {"suggestions", std::move(list)}}.dump(2) << '\n';
        } else if (search->parsed()) {
            ReformulationEngine engine(store);
            SearchMode mode;
            mode.mode = parse_reformulation_mode(opt.mode);
            if (!opt.added.empty() && mode.mode != ReformulationMode::manual) {
                err << "presy: --add requires --mode manual\n";
                return kUsageError;
            }
            mode.manual_terms = opt.added;
            const auto provider = rt.providers->get(opt.engine);
            const auto result = dual_search(engine, *provider, opt.profile, opt.query, mode);
            out << render_comparison(result, opt.format == "table" ? Format::table : Format::json);
        } else if (enrich->parsed()) {
            store.profile(opt.profile);
            const auto updated = (opt.accept.empty() && opt.reject.empty())
                                     ? enrich_interactive(store, opt.profile, in, err)
                                     : enrich_batch(store, opt.profile, opt.accept, opt.reject);
            Json list = Json::array();
            for (const auto& e : updated) list.push_back(to_json(e));
            out << Json{{"updated", std::move(list)}}.dump(2) << '\n';
        } else if (history->parsed()) {
            Json list = Json::array();
            for (const auto& r : store.history(opt.profile)) list.push_back(to_json(r));
            out << Json{{"history", std::move(list)}}.dump(2) << '\n';
        } else if (engines->parsed()) {
            Json list = Json::array();
            for (const auto& id : rt.providers->ids()) list.push_back({{"id", id}, {"kind", rt.providers->get(id)->kind()}});
            out << Json{{"engines", std::move(list)}}.dump(2) << '\n';
        } else if (eval_run->parsed()) {
            ReformulationEngine engine(store);
            const auto scenarios = load_scenarios(opt.scenarios);
            std::set<EvalMode> modes{EvalMode::without_reformulation, EvalMode::with_reformulation};
            if (!opt.eval_modes.empty()) {
                modes.clear();
                for (const auto& m : opt.eval_modes) modes.insert(parse_eval_mode(m));
            }
            const auto provider = rt.providers->get(opt.engine);
            const std::string report = report_to_json(run_suite(scenarios, *provider, engine, opt.profile, modes));
            if (opt.report_out.empty()) {
                out << report;
            } else {
                write_text_file(opt.report_out, report);
                err << "presy: report written to " << opt.report_out << '\n';
            }
        } else if (serve->parsed()) {
            const ListenAddress addr = opt.addr.empty() ? default_listen_address() : parse_listen_address(opt.addr);
            ServiceOptions service_options;
            if (const char* origin = std::getenv("PRESY_CORS_ORIGIN"); origin && *origin)
                service_options.cors_origin = origin;
            ApiServer server(store, *rt.providers, service_options);
            const int port = server.bind(addr.host, addr.port);
            err << fmt::format("presy: listening on {}:{}\n", addr.host, port) << std::flush;
            server.listen();
        }
    } catch (const Error& e) {
        err << "presy: " << e.what() << '\n';
        return kDomainError;
    }
    return kSuccess;
}

} // namespace presy::cli
