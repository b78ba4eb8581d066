#include "doctest.h"

#include "oracles.hpp"
#include "presy/reformulation.hpp"
#include "test_support.hpp"

#include <cmath>
#include <random>

using namespace presy;
using presy::testing::ManualClock;
using presy::testing::TempDir;

namespace {

ContextEntry entry(EntryKind kind, std::string value, std::uint64_t uses, Timestamp last_used)
{
    ContextEntry e;
    e.kind = kind;
    e.attribute = "java";
    e.value = std::move(value);
    e.status = EntryStatus::validated;
    e.use_count = uses;
    e.created_at = last_used;
    e.last_used_at = last_used;
    return e;
}

std::vector<std::string> values(const std::vector<Suggestion>& s)
{
    std::vector<std::string> out;
    for (const auto& x : s) out.push_back(x.value);
    return out;
}

struct Fixture {
    TempDir dir;
    ManualClock clock;
    ContextStore store{dir.path(), clock.clock()};
    ReformulationEngine engine{store};

    Fixture()
    {
        ProfileDraft d;
        d.id = "p1";
        store.create_profile(d);
    }

    ContextEntry validate(const std::string& attribute, const std::string& value)
    {
        const std::vector<std::string> c{value};
        const auto e = store.propose_dynamic_entries("p1", attribute, c).at(0);
        return store.set_entry_status(e.id, EntryStatus::validated);
    }
};

} // namespace

TEST_CASE("score_suggestion formula")
{
    const Timestamp now{std::chrono::milliseconds{1'000'000'000'000}};
    UserProfile p;
    p.domains = {"programming"};

    const auto s = entry(EntryKind::static_context, "coffee", 0, now);
    CHECK(score_suggestion(std::vector{s}, p, now) == doctest::Approx(2.0).epsilon(1e-12));

    const auto d = entry(EntryKind::dynamic_context, "programming", 0, now);
    CHECK(score_suggestion(std::vector{d}, p, now) == doctest::Approx(2.5).epsilon(1e-12));

    CHECK(score_suggestion(std::vector{s, s}, p, now) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("score_suggestion usage and recency terms")
{
    const Timestamp now{std::chrono::milliseconds{1'000'000'000'000}};
    const UserProfile p;
    const auto one_day_ago = now - std::chrono::hours(24);
    const auto e = entry(EntryKind::dynamic_context, "x", 3, one_day_ago);
    CHECK(score_suggestion(std::vector{e}, p, now) == doctest::Approx(0.5 + std::log(4.0) + 0.5));

    // Clock skew never makes an entry look newer than brand new.
    const auto future = entry(EntryKind::static_context, "x", 0, now + std::chrono::hours(5));
    CHECK(score_suggestion(std::vector{future}, p, now) == doctest::Approx(2.0));
}

TEST_CASE("score_suggestion bonus also applies to specialty words, once")
{
    const Timestamp now{std::chrono::milliseconds{0}};
    UserProfile p;
    p.domains = {"retrieval"};
    p.specialty = "information retrieval";
    const auto e = entry(EntryKind::dynamic_context, "retrieval", 0, now);
    CHECK(score_suggestion(std::vector{e}, p, now) == doctest::Approx(2.5));
    const auto f = entry(EntryKind::dynamic_context, "information", 0, now);
    CHECK(score_suggestion(std::vector{f}, p, now) == doctest::Approx(2.5));
}

TEST_CASE("score_suggestion is monotone in use_count and recency")
{
    const Timestamp now{std::chrono::milliseconds{5'000'000'000'000}};
    const UserProfile p;
    std::mt19937 rng(11);
    for (int i = 0; i < 500; ++i) {
        const auto uses = std::uniform_int_distribution<std::uint64_t>(0, 1000)(rng);
        const auto age = std::chrono::milliseconds(std::uniform_int_distribution<std::int64_t>(0, 400'000'000'000)(rng));
        const auto base = entry(EntryKind::dynamic_context, "x", uses, now - age);
        const auto more_used = entry(EntryKind::dynamic_context, "x", uses + 1, now - age);
        const auto fresher = entry(EntryKind::dynamic_context, "x", uses, now - age / 2);
        CHECK(score_suggestion(std::vector{more_used}, p, now) > score_suggestion(std::vector{base}, p, now));
        CHECK(score_suggestion(std::vector{fresher}, p, now) >= score_suggestion(std::vector{base}, p, now));
    }
}

TEST_CASE("expand examples")
{
    const std::vector<std::string> a{"programming"};
    CHECK(expand("java", a).expanded == "java programming");

    const std::vector<std::string> b{"programming", "jvm"};
    const auto rb = expand("java programming", b);
    CHECK(rb.expanded == "java programming jvm");
    CHECK(rb.added_terms == std::vector<std::string>{"jvm"});

    const std::vector<std::string> c{"a", "b", "c", "d", "e"};
    const auto rc = expand("q", c);
    CHECK(rc.expanded == "q a b c d");
    CHECK(rc.added_terms == std::vector<std::string>{"a", "b", "c", "d"});
    CHECK(rc.original == "q");
    CHECK(rc.mode == ReformulationMode::manual);
}

TEST_CASE("expand edge cases")
{
    CHECK(expand("java", {}).expanded == "java");
    const std::vector<std::string> same{"Java"};
    CHECK(expand("java", same).expanded == "java");
    CHECK(expand("java", same).added_terms.empty());
    const std::vector<std::string> multi{"virtual machine", "machine"};
    CHECK(expand("java ", multi).expanded == "java virtual machine");
    const std::vector<std::string> one{"x1"};
    CHECK(expand("", one).expanded == "x1");
}

TEST_CASE("expand never exceeds the cap and preserves the original as a prefix")
{
    std::mt19937 rng(5);
    const std::vector<std::string> vocab{"java", "jvm", "coffee", "island", "code", "bean", "tea", "a1", "b2"};
    for (int i = 0; i < 1000; ++i) {
        std::string q;
        std::vector<std::string> terms;
        for (int k = rng() % 4; k > 0; --k) q += vocab[rng() % vocab.size()] + " ";
        for (int k = rng() % 7; k > 0; --k) terms.push_back(vocab[rng() % vocab.size()]);
        const auto r = expand(q, terms);
        CHECK(r.added_terms.size() <= kMaxAddedTerms);
        CHECK(r.expanded.rfind(r.added_terms.empty() ? q : q.substr(0, q.find_last_not_of(' ') + 1), 0) == 0);
        const auto qwords = segment_words(q);
        for (const auto& t : r.added_terms) CHECK(std::find(qwords.begin(), qwords.end(), t) == qwords.end());
    }
}

TEST_CASE("suggest examples")
{
    Fixture f;
    CHECK(f.engine.suggest("p1", "java", 5).empty());

    const std::vector<std::string> c{"coffee"};
    f.store.propose_dynamic_entries("p1", "java", c);
    CHECK(f.engine.suggest("p1", "java", 5).empty());

    const auto e = f.validate("java", "programming");
    const auto s = f.engine.suggest("p1", "java", 5);
    REQUIRE(s.size() == 1);
    CHECK(s[0].value == "programming");
    CHECK(s[0].source_entry_ids == std::vector<std::string>{e.id});
    CHECK(s[0].preview == "java programming");
    CHECK(s[0].score == doctest::Approx(1.5));

    CHECK(f.engine.suggest("p1", "", 5).empty());
    CHECK(f.engine.suggest("p1", "   ", 5).empty());
}

TEST_CASE("suggest matches attribute prefixes of the last word only")
{
    Fixture f;
    f.validate("java", "programming");
    f.validate("javascript", "browser");
    f.validate("python", "snake");
    CHECK(values(f.engine.suggest("p1", "learn ja", 10)) == std::vector<std::string>{"browser", "programming"});
    CHECK(values(f.engine.suggest("p1", "java", 10)) == std::vector<std::string>{"browser", "programming"});
    CHECK(values(f.engine.suggest("p1", "javas", 10)) == std::vector<std::string>{"browser"});
    CHECK(f.engine.suggest("p1", "python java tutorial", 10).empty());
    CHECK(values(f.engine.suggest("p1", "JAVA", 10)) == std::vector<std::string>{"browser", "programming"});
}

TEST_CASE("suggest excludes values already in the query and honours the limit")
{
    Fixture f;
    f.validate("java", "programming");
    f.validate("java", "jvm");
    f.validate("java", "island");
    CHECK(values(f.engine.suggest("p1", "programming java", 10)) == std::vector<std::string>{"island", "jvm"});
    CHECK(f.engine.suggest("p1", "java", 2).size() == 2);
    CHECK_ERRC(f.engine.suggest("p1", "java", 0), Errc::invalid_argument);
    CHECK_ERRC(f.engine.suggest("nobody", "java", 3), Errc::unknown_profile);
}

TEST_CASE("suggest groups one value reached through several attributes")
{
    Fixture f;
    const auto a = f.validate("java", "programming");
    const auto b = f.validate("javac", "programming");
    f.validate("java", "island");
    const auto s = f.engine.suggest("p1", "jav", 10);
    REQUIRE(s.size() == 2);
    CHECK(s[0].value == "programming");
    CHECK(s[0].source_entry_ids == std::vector<std::string>{a.id, b.id});
    CHECK(s[0].score == doctest::Approx(3.0));
}

TEST_CASE("static context takes part in suggestions with the domain bonus")
{
    TempDir dir;
    ManualClock clock;
    ContextStore store(dir.path(), clock.clock());
    ProfileDraft d;
    d.id = "p1";
    d.domains = {"computing"};
    d.specialty = "information retrieval";
    store.create_profile(d);
    ReformulationEngine engine(store);
    const auto s = engine.suggest("p1", "computing", 10);
    CHECK(values(s) == std::vector<std::string>{"information", "retrieval"});
    CHECK(s[0].score == doctest::Approx(3.0));
    const auto back = engine.suggest("p1", "retrieval", 10);
    REQUIRE(back.size() == 1);
    CHECK(back[0].value == "computing");
    CHECK(back[0].score == doctest::Approx(3.0));
}

TEST_CASE("auto_reformulate with an empty context is the identity")
{
    Fixture f;
    const auto r = f.engine.auto_reformulate("p1", "java");
    CHECK(r.expanded == "java");
    CHECK(r.original == "java");
    CHECK(r.mode == ReformulationMode::off);
    CHECK(r.added_terms.empty());
    CHECK_ERRC(f.engine.auto_reformulate("nobody", "java"), Errc::unknown_profile);
}

TEST_CASE("auto_reformulate expands with the best suggestions and records usage")
{
    Fixture f;
    const auto e = f.validate("java", "programming");
    f.clock.advance(std::chrono::hours(2));
    const auto r = f.engine.auto_reformulate("p1", "java");
    CHECK(r.expanded == "java programming");
    CHECK(r.mode == ReformulationMode::automatic);
    CHECK(r.added_terms == std::vector<std::string>{"programming"});
    const auto after = f.store.entry(e.id);
    CHECK(after.use_count == 1);
    CHECK(after.last_used_at == f.clock.now());
}

TEST_CASE("auto_reformulate takes at most two suggestions")
{
    Fixture f;
    f.validate("java", "programming");
    f.validate("java", "jvm");
    f.validate("java", "island");
    const auto r = f.engine.auto_reformulate("p1", "java");
    CHECK(r.added_terms == std::vector<std::string>{"island", "jvm"});
    CHECK(r.expanded == "java island jvm");
    // Used entries now outrank the unused one.
    CHECK(f.engine.suggest("p1", "java", 1).at(0).value == "island");
    CHECK(values(f.engine.suggest("p1", "java", 3)).back() == "programming");
}

TEST_CASE("suggest agrees with a brute-force scan over random stores")
{
    std::mt19937 rng(2024);
    const std::vector<std::string> attrs{"java", "jam", "jar", "python", "py", "rust", "ru"};
    const std::vector<std::string> vals{"programming", "coffee", "island", "snake", "oxide", "jvm", "bread", "code"};
    for (int round = 0; round < 40; ++round) {
        TempDir dir;
        ManualClock clock;
        ContextStore store(dir.path(), clock.clock());
        ProfileDraft d;
        d.id = "p1";
        d.domains = {vals[rng() % vals.size()]};
        store.create_profile(d);
        ReformulationEngine engine(store);
        for (int i = 0; i < 20; ++i) {
            clock.advance(std::chrono::minutes(rng() % 5000));
            const std::vector<std::string> c{vals[rng() % vals.size()]};
            const auto es = store.propose_dynamic_entries("p1", attrs[rng() % attrs.size()], c);
            if (!es.empty() && es[0].status == EntryStatus::proposed && rng() % 3 != 0)
                store.set_entry_status(es[0].id, rng() % 4 ? EntryStatus::validated : EntryStatus::rejected);
        }
        clock.advance(std::chrono::minutes(rng() % 100000));
        for (const auto& q : {"j", "ja", "java", "learn py", "code rust", "jam coffee", "x"}) {
            const auto got = engine.suggest("p1", q, kUnlimited);
            const auto want = oracle::suggest(store.entries("p1"), store.profile("p1"), clock.now(), q);
            REQUIRE(got.size() == want.size());
            for (std::size_t i = 0; i < got.size(); ++i) {
                CHECK(got[i].value == want[i].value);
                CHECK(got[i].score == want[i].score);
                CHECK(got[i].source_entry_ids == want[i].ids);
            }
        }
    }
}

TEST_CASE("mode names")
{
    CHECK(to_string(ReformulationMode::automatic) == "auto");
    CHECK(parse_reformulation_mode("manual") == ReformulationMode::manual);
    CHECK_ERRC(parse_reformulation_mode("automatic"), Errc::invalid_argument);
}
