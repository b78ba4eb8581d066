// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "oracles.hpp"
#include "presy/evaluation.hpp"
#include "presy/reformulation.hpp"
#include "presy/service_api.hpp"
#include "test_support.hpp"

#include "httplib.h"

#include <fmt/core.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <thread>

using namespace presy;
using presy::testing::ManualClock;
using presy::testing::TempDir;
using Steady = std::chrono::steady_clock;

namespace {

// A failed expectation inside a criterion body.
struct Failure {
    std::string what;
};

void expect(bool ok, const std::string& what)
{
    if (!ok) throw Failure{what};
}

double seconds_since(Steady::time_point start)
{
    return std::chrono::duration<double>(Steady::now() - start).count();
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::shared_ptr<const AntiDictionary> english()
{
    static StopwordCatalog catalog;
    return catalog.get("en");
}

// ---------------------------------------------------------------------------

std::string published_means()
{
    struct Column {
        const char* engine;
        double without[3];
        double with[3];
    };
    const Column table[] = {
        {"google", {6.62, 5.60, 7.40}, {7.69, 6.77, 8.19}},
        {"yahoo", {5.78, 4.92, 7.56}, {6.11, 4.18, 8.55}},
        {"bing", {3.38, 3.94, 5.54}, {4.23, 4.87, 6.22}},
    };
    auto rows = [](const double (&c)[3]) {
        std::vector<ScoreRow> out;
        for (std::size_t i = 0; i < kSuiteSize; ++i)
            out.push_back({"s" + std::to_string(i + 1), c[0], c[1], c[2], c[0] + c[1] + c[2]});
        return out;
    };
    std::map<std::string, Deltas> deltas;
    for (const auto& col : table) {
        const auto wo = aggregate(rows(col.without), col.engine, EvalMode::without_reformulation);
        const auto w = aggregate(rows(col.with), col.engine, EvalMode::with_reformulation);
        deltas[col.engine] = *compare(wo, w).deltas;
    }
    const struct {
        const char* engine;
        double Deltas::*field;
        const char* name;
        double want;
    } checks[] = {
        {"google", &Deltas::c1, "c1", 1.07}, {"google", &Deltas::c2, "c2", 1.17}, {"google", &Deltas::c3, "c3", 0.79},
        {"yahoo", &Deltas::c3, "c3", 0.99},  {"bing", &Deltas::c3, "c3", 0.68},
    };
    std::string detail;
    for (const auto& c : checks) {
        const double got = deltas[c.engine].*c.field;
        expect(std::abs(got - c.want) <= 0.005, fmt::format("{} delta_{} = {:.4f}, want {:.2f}", c.engine, c.name, got, c.want));
        detail += fmt::format("{}{} {} {:+.2f}", detail.empty() ? "" : ", ", c.engine, c.name, got);
    }
    return detail;
}

std::string scoring_oracle()
{
    std::mt19937 rng(20101);
    for (int round = 0; round < 1000; ++round) {
        std::vector<SearchResult> rs;
        std::vector<std::string> urls;
        Judgments j;
        const int n = static_cast<int>(rng() % 11);
        for (int i = 0; i < n; ++i) {
            std::string u = std::string(rng() % 2 ? "https://" : "http://") + (rng() % 3 ? "" : "www.") +
                            (rng() % 4 ? "h" : "H") + std::to_string(rng() % 6) + ".org/" + std::to_string(rng() % 3);
            if (rng() % 5 == 0) u += "#frag";
            rs.push_back({i + 1, "title", u, "", "e"});
            urls.push_back(u);
            if (rng() % 2) j[u] = rng() % 3 != 0;
        }
        // Judgments on urls that never came back must not matter.
        if (rng() % 2) j["https://unseen.example/x"] = true;
        const auto got = score_query(rs, j);
        const auto want = oracle::score_query(urls, j);
        const double pairs[][2] = {{got.c1, want.c1}, {got.c2, want.c2}, {got.c3, want.c3}, {got.total, want.total}};
        for (const auto& p : pairs)
            expect(std::abs(p[0] - p[1]) <= 1e-9, fmt::format("fixture {}: {} vs oracle {}", round, p[0], p[1]));
    }
    return "1000 fixtures";
}

std::string suggest_oracle()
{
    std::mt19937 rng(777);
    const std::vector<std::string> attrs{"java", "jam", "jar", "javascript", "python", "py", "rust", "ru"};
    const std::vector<std::string> vals{"programming", "coffee", "island", "snake", "oxide", "jvm",
                                        "bread", "code", "databases", "web"};
    const std::vector<std::string> queries{"j", "ja", "jav", "java", "learn py", "code rust", "jam coffee",
                                           "x", "", "JAVA", "python snake", "r"};
    std::size_t compared = 0;
    for (int round = 0; round < 200; ++round) {
        TempDir dir;
        ManualClock clock;
        ContextStore store(dir.path(), clock.clock());
        ProfileDraft d;
        d.id = "p1";
        if (rng() % 2) d.domains = {vals[rng() % vals.size()]};
        if (rng() % 2) d.specialty = vals[rng() % vals.size()] + " systems";
        store.create_profile(d);
        ReformulationEngine engine(store);

        const std::size_t target = rng() % 51;
        for (int guard = 0; store.entries("p1").size() < target && guard < 500; ++guard) {
            clock.advance(std::chrono::minutes(rng() % 5000));
            const std::vector<std::string> c{vals[rng() % vals.size()]};
            const auto es = store.propose_dynamic_entries("p1", attrs[rng() % attrs.size()], c);
            if (!es.empty() && es[0].status == EntryStatus::proposed && rng() % 3 != 0)
                store.set_entry_status(es[0].id, rng() % 4 ? EntryStatus::validated : EntryStatus::rejected);
            if (!es.empty() && rng() % 7 == 0) {
                const std::vector<std::string> ids{es[0].id};
                store.record_usage("p1", ids);
            }
        }
        expect(store.entries("p1").size() <= 50 + 8, "store grew past its budget");
        clock.advance(std::chrono::minutes(rng() % 100000));

        for (const auto& q : queries) {
            const auto got = engine.suggest("p1", q, kUnlimited);
            const auto want = oracle::suggest(store.entries("p1"), store.profile("p1"), clock.now(), q);
            expect(got.size() == want.size(), fmt::format("store {} query '{}': {} suggestions, oracle {}", round, q,
                                                          got.size(), want.size()));
            for (std::size_t i = 0; i < got.size(); ++i) {
                expect(got[i].value == want[i].value && got[i].source_entry_ids == want[i].ids,
                       fmt::format("store {} query '{}': rank {} is '{}', oracle '{}'", round, q, i, got[i].value,
                                   want[i].value));
                expect(got[i].score == want[i].score,
                       fmt::format("store {} query '{}': score {} vs {}", round, q, got[i].score, want[i].score));
            }
            ++compared;
        }
    }
    return fmt::format("200 stores, {} queries", compared);
}

std::string local_provider_oracle()
{
    std::mt19937 rng(4242);
    const std::vector<std::string> vocab{"java", "coffee", "island", "rust", "the", "of", "code", "bean",
                                         "jvm", "a", "programming", "Java", "travel", "and"};
    std::set<std::string> stop;
    for (const auto& w : vocab)
        if (english()->contains(oracle::ascii_words(w).at(0))) stop.insert(oracle::ascii_words(w).at(0));

    auto run = [&](std::uint32_t seed, std::string& transcript) {
        std::mt19937 r(seed);
        for (int corpus = 0; corpus < 50; ++corpus) {
            std::vector<CorpusDocument> docs;
            const int n = static_cast<int>(r() % 101);
            for (int i = 0; i < n; ++i) {
                std::string title, body;
                for (int k = r() % 6; k > 0; --k) title += vocab[r() % vocab.size()] + " ";
                for (int k = r() % 15; k > 0; --k) body += vocab[r() % vocab.size()] + ". ";
                docs.push_back({"https://h" + std::to_string(r() % 7) + ".org/" + std::to_string(i), title, body});
            }
            LocalProvider p("local", index_corpus(docs), english());
            for (int q = 0; q < 10; ++q) {
                std::string query;
                for (int k = r() % 4; k > 0; --k) query += vocab[r() % vocab.size()] + " ";
                const auto resp = p.search(query, 1000);
                std::vector<std::string> urls;
                for (const auto& x : resp.results) {
                    urls.push_back(x.url);
                    transcript += fmt::format("{}\t{}\t{}\t{}\n", x.rank, x.url, x.title, x.snippet);
                }
                transcript += fmt::format("total {}\n", resp.total_estimate);
                expect(urls == oracle::tfidf_rank(docs, stop, query),
                       fmt::format("corpus {} query '{}': ranking differs from brute force", corpus, query));
            }
        }
    };
    const std::uint32_t seed = rng();
    std::string first, second;
    run(seed, first);
    run(seed, second);
    expect(first == second, "two runs over the same corpora differ");
    return fmt::format("50 corpora, runs byte-identical ({} bytes)", first.size());
}

std::string end_to_end()
{
    TempDir dir;
    ManualClock clock;
    ContextStore store(dir.path(), clock.clock());
    testing::seed_fixture_profile(store);
    ReformulationEngine engine(store);
    const auto provider = testing::fixture_provider(store.stopwords());
    const auto scenarios = load_scenarios(testing::fixture_dir / "scenarios.json");

    const auto java = std::find_if(scenarios.begin(), scenarios.end(), [](const auto& s) { return s.query == "java"; });
    expect(java != scenarios.end(), "no 'java' scenario in the fixture suite");
    // Relevant documents among the results the evaluation looks at.
    auto relevant_hits = [&](const std::string& q) {
        int hits = 0;
        for (const auto& r : provider->search(q, kScoredResults).results)
            if (auto it = java->judgments.find(r.url); it != java->judgments.end() && it->second) ++hits;
        return hits;
    };
    const int plain = relevant_hits("java");
    const int expanded = relevant_hits("java programming");
    expect(expanded > plain, fmt::format("'java programming' returns {} relevant docs in the top ten, 'java' {}", expanded, plain));

    const std::set<EvalMode> both{EvalMode::without_reformulation, EvalMode::with_reformulation};
    const auto report = run_suite(scenarios, *provider, engine, "p1", both);
    const auto text = report_to_json(report);
    expect(text == slurp(testing::fixture_dir / "golden_report.json"), "report differs from golden_report.json:\n" + text);
    const double note = report.engines.at(0).deltas->note;
    expect(note > 0.0, fmt::format("delta_note = {}", note));
    return fmt::format("golden byte-equal, delta_note {:+.2f}, relevant in top ten {} vs {}", note, expanded, plain);
}

std::string pipeline_invariants()
{
    std::mt19937 rng(99);
    const std::vector<std::string> pieces{"the", "Java", "java", "JAVA", "of", "a", "x", "42", "2010", "é",
                                          "Été", "programming", "rust", "r2d2", "and", "les", "coffee", "i",
                                          "  ", "-", "/", "...", "été", "Über", "über", "ab", "7b", "q"};
    const auto dict = english();
    for (int i = 0; i < 10000; ++i) {
        std::vector<std::string> titles(rng() % 6);
        for (auto& t : titles)
            for (int k = rng() % 12; k > 0; --k) t += pieces[rng() % pieces.size()] + (rng() % 3 ? " " : ",");
        const std::size_t cap = rng() % 4 == 0 ? 1 + rng() % 5 : kDefaultProposalCap;
        const auto out = extract_candidates(titles, *dict, cap);
        expect(out.size() <= cap, fmt::format("case {}: {} candidates over cap {}", i, out.size(), cap));
        std::set<std::string> seen;
        for (const auto& c : out) {
            expect(!dict->contains(c), fmt::format("case {}: stop-word '{}'", i, c));
            expect(seen.insert(c).second, fmt::format("case {}: duplicate '{}'", i, c));
            expect(char_length(c) >= kMinCandidateLength, fmt::format("case {}: short '{}'", i, c));
            expect(!std::all_of(c.begin(), c.end(), [](unsigned char ch) { return ch >= '0' && ch <= '9'; }),
                   fmt::format("case {}: all-digit '{}'", i, c));
            expect(normalize(c) == c, fmt::format("case {}: unfolded '{}'", i, c));
        }
    }
    return "10000 cases";
}

std::string lifecycle_invariants()
{
    std::mt19937 rng(5150);
    const std::vector<std::string> attrs{"java", "python", "rust", "jam"};
    const std::vector<std::string> vals{"programming", "coffee", "snake", "oxide", "island", "code", "java"};
    std::size_t transitions = 0, refused = 0;
    for (int round = 0; round < 30; ++round) {
        TempDir dir;
        ManualClock clock;
        {
            ContextStore store(dir.path(), clock.clock());
            ProfileDraft d;
            d.id = "p1";
            d.domains = {"computer science"};
            d.specialty = "databases";
            store.create_profile(d);

            std::map<std::string, EntryStatus> model;
            for (const auto& e : store.entries("p1")) model[e.id] = e.status;
            for (int step = 0; step < 80; ++step) {
                clock.advance(std::chrono::seconds(rng() % 10000));
                if (rng() % 2 || model.empty()) {
                    std::vector<std::string> cands;
                    for (int k = rng() % 4; k > 0; --k) cands.push_back(vals[rng() % vals.size()]);
                    for (const auto& e : store.propose_dynamic_entries("p1", attrs[rng() % attrs.size()], cands))
                        model.try_emplace(e.id, e.status);
                } else {
                    auto it = model.begin();
                    std::advance(it, rng() % model.size());
                    const auto decision = rng() % 2 ? EntryStatus::validated : EntryStatus::rejected;
                    const auto before = it->second;
                    const bool legal = before == EntryStatus::proposed || before == decision;
                    try {
                        it->second = store.set_entry_status(it->first, decision).status;
                        expect(legal, fmt::format("{} -> {} was accepted", to_string(before), to_string(decision)));
                        ++transitions;
                    } catch (const Error& e) {
                        expect(!legal && e.code() == Errc::illegal_transition,
                               fmt::format("unexpected refusal: {}", e.what()));
                        ++refused;
                    }
                    expect(store.entry(it->first).status == it->second, "stored status drifted from the model");
                }
                std::set<std::pair<std::string, std::string>> pairs;
                for (const auto& e : store.entries("p1")) {
                    expect(pairs.emplace(e.attribute, e.value).second,
                           fmt::format("duplicate pair ({}, {})", e.attribute, e.value));
                    expect(model.at(e.id) == e.status, "entry status differs from the model");
                }
                if (step % 10 == 0) {
                    HistoryRecord r;
                    r.profile_id = "p1";
                    r.timestamp = clock.now();
                    r.raw_query = "q" + std::to_string(step);
                    if (rng() % 2) r.reformulated_query = r.raw_query + " programming";
                    r.engine_id = "local";
                    r.result_titles = {"t"};
                    r.result_urls = {"https://a.org/"};
                    store.append_history(r);
                }
            }
        }
        // Round trip: two independent reopenings agree, and a reopened store
        // persists back to the same bytes.
        ContextStore a(dir.path(), clock.clock());
        ContextStore b(dir.path(), clock.clock());
        expect(a.profile_ids() == b.profile_ids(), "profile ids differ after reopen");
        expect(a.profile("p1") == b.profile("p1"), "profile differs after reopen");
        expect(a.entries("p1") == b.entries("p1"), "entries differ after reopen");
        expect(a.history("p1") == b.history("p1"), "history differs after reopen");
    }
    return fmt::format("{} transitions, {} refusals", transitions, refused);
}

std::string round_trip_identity()
{
    // In-memory state before close equals state after reopen.
    TempDir dir;
    ManualClock clock;
    UserProfile profile;
    std::vector<ContextEntry> entries;
    std::vector<HistoryRecord> history;
    {
        ContextStore store(dir.path(), clock.clock());
        testing::seed_fixture_profile(store);
        ReformulationEngine engine(store);
        const auto provider = testing::fixture_provider(store.stopwords());
        SearchMode mode;
        mode.mode = ReformulationMode::automatic;
        dual_search(engine, *provider, "p1", "java", mode);
        profile = store.profile("p1");
        entries = store.entries("p1");
        history = store.history("p1");
    }
    ContextStore reopened(dir.path(), clock.clock());
    expect(reopened.profile("p1") == profile, "profile changed across reopen");
    expect(reopened.entries("p1") == entries, "entries changed across reopen");
    expect(reopened.history("p1") == history, "history changed across reopen");
    return fmt::format("{} entries, {} history records", entries.size(), history.size());
}

std::string service_latency()
{
    TempDir dir;
    ContextStore store(dir.path());
    testing::seed_fixture_profile(store);
    ProviderRegistry providers(store.stopwords());
    providers.add(testing::fixture_provider(store.stopwords()));
    ApiServer server(store, providers);
    const int port = server.bind("127.0.0.1", 0);
    std::thread thread([&] { server.listen(); });
    struct Stop {
        ApiServer& s;
        std::thread& t;
        ~Stop()
        {
            s.stop();
            t.join();
        }
    } stop{server, thread};

    httplib::Client client("127.0.0.1", port);
    client.set_keep_alive(true);
    client.set_tcp_nodelay(true);
    for (int i = 0; i < 200 && !client.Get("/engines"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));

    const char* prefixes[] = {"j", "ja", "jav", "java"};
    std::vector<double> ms;
    for (int i = 0; i < 1000; ++i) {
        const auto start = Steady::now();
        const auto res = client.Get(std::string("/profiles/p1/suggest?q=") + prefixes[i % 4]);
        ms.push_back(seconds_since(start) * 1000.0);
        expect(res && res->status == 200, fmt::format("request {} failed", i));
        if (i % 4 == 3) expect(res->body.find("programming") != std::string::npos, "suggestion missing from payload");
    }
    std::sort(ms.begin(), ms.end());
    const double p50 = ms[499];
    const double p99 = ms[989];
    expect(p50 < 20.0 && p99 < 100.0, fmt::format("p50 {:.2f} ms, p99 {:.2f} ms", p50, p99));
    return fmt::format("p50 {:.2f} ms, p99 {:.2f} ms", p50, p99);
}

} // namespace

int main()
{
    struct Criterion {
        int number;
        const char* name;
        std::function<std::string()> body;
        double budget_s;  // 0 = no time limit
    };
    const Criterion criteria[] = {
        {1, "report arithmetic on published means", published_means, 1.0},
        {2, "scoring oracle", scoring_oracle, 5.0},
        {3, "suggestion oracle", suggest_oracle, 5.0},
        {4, "local-provider oracle and determinism", local_provider_oracle, 0.0},
        {5, "end-to-end fixture improvement", end_to_end, 0.0},
        {6, "pipeline invariants", pipeline_invariants, 10.0},
        {7, "lifecycle invariants and store round-trip",
         [] { return lifecycle_invariants() + "; " + round_trip_identity(); }, 0.0},
        {8, "service latency", service_latency, 0.0},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = Steady::now();
        std::string detail;
        bool ok = true;
        try {
            detail = c.body();
        } catch (const Failure& f) {
            ok = false;
            detail = f.what;
        } catch (const std::exception& e) {
            ok = false;
            detail = fmt::format("exception: {}", e.what());
        }
        const double elapsed = seconds_since(start);
        if (ok && c.budget_s > 0 && elapsed >= c.budget_s) {
            ok = false;
            detail += fmt::format("; over the {:.0f} s budget", c.budget_s);
        }
        failures += ok ? 0 : 1;
        fmt::print("[{}] criterion {}: {} ({:.3f} s) {}\n", ok ? "PASS" : "FAIL", c.number, c.name, elapsed, detail);
    }
    fmt::print("{} of {} criteria passed\n", std::size(criteria) - failures, std::size(criteria));
    return failures == 0 ? 0 : 1;
}
