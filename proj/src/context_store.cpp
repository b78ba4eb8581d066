#include "presy/context_store.hpp"

#include "presy/error.hpp"
#include "presy/json_io.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <unordered_set>

namespace presy {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Enum names

std::string_view to_string(Sex v) noexcept
{
    switch (v) {
    case Sex::female: return "female";
    case Sex::male: return "male";
    case Sex::unspecified: return "unspecified";
    }
    return "unspecified";
}

std::string_view to_string(StudyLevel v) noexcept
{
    switch (v) {
    case StudyLevel::primary: return "primary";
    case StudyLevel::secondary: return "secondary";
    case StudyLevel::undergraduate: return "undergraduate";
    case StudyLevel::graduate: return "graduate";
    case StudyLevel::doctoral: return "doctoral";
    case StudyLevel::unspecified: return "unspecified";
    }
    return "unspecified";
}

std::string_view to_string(EntryKind v) noexcept
{
    return v == EntryKind::static_context ? "static" : "dynamic";
}

std::string_view to_string(EntryStatus v) noexcept
{
    switch (v) {
    case EntryStatus::proposed: return "proposed";
    case EntryStatus::validated: return "validated";
    case EntryStatus::rejected: return "rejected";
    }
    return "proposed";
}

Sex parse_sex(std::string_view name)
{
    for (Sex v : {Sex::female, Sex::male, Sex::unspecified})
        if (to_string(v) == name) return v;
    throw Error(Errc::invalid_field, fmt::format("unknown sex '{}'", name));
}

StudyLevel parse_study_level(std::string_view name)
{
    for (StudyLevel v : {StudyLevel::primary, StudyLevel::secondary, StudyLevel::undergraduate,
                         StudyLevel::graduate, StudyLevel::doctoral, StudyLevel::unspecified})
        if (to_string(v) == name) return v;
    throw Error(Errc::invalid_field, fmt::format("unknown study level '{}'", name));
}

EntryKind parse_entry_kind(std::string_view name)
{
    if (name == "static") return EntryKind::static_context;
    if (name == "dynamic") return EntryKind::dynamic_context;
    throw Error(Errc::invalid_field, fmt::format("unknown entry kind '{}'", name));
}

EntryStatus parse_entry_status(std::string_view name)
{
    for (EntryStatus v : {EntryStatus::proposed, EntryStatus::validated, EntryStatus::rejected})
        if (to_string(v) == name) return v;
    throw Error(Errc::invalid_field, fmt::format("unknown entry status '{}'", name));
}

// ---------------------------------------------------------------------------
// Static context derivation

std::vector<ContextEntry> derive_static_entries(const UserProfile& profile, const AntiDictionary& dictionary)
{
    auto content_words = [&](std::string_view phrase) {
        std::vector<std::string> words;
        for (auto& w : segment_words(phrase))
            if (!dictionary.contains(w) && std::find(words.begin(), words.end(), w) == words.end())
                words.push_back(std::move(w));
        return words;
    };
    const auto specialty_words = content_words(profile.specialty);
    const auto profession_words = content_words(profile.profession);

    std::vector<ContextEntry> out;
    std::set<std::pair<std::string, std::string>> seen;
    auto add = [&](const std::string& attribute, const std::string& value) {
        if (attribute.empty() || value.empty() || attribute == value) return;
        if (dictionary.contains(value)) return;
        if (!seen.emplace(attribute, value).second) return;
        ContextEntry e;
        e.profile_id = profile.id;
        e.kind = EntryKind::static_context;
        e.attribute = attribute;
        e.value = value;
        e.status = EntryStatus::validated;
        e.created_at = profile.created_at;
        e.last_used_at = profile.created_at;
        out.push_back(std::move(e));
    };

    for (const auto& domain : profile.domains) {
        for (const auto& word : specialty_words) {
            add(domain, word);
            add(word, domain);
        }
    }
    for (const auto& word : profession_words)
        for (const auto& domain : profile.domains) add(word, domain);
    return out;
}

bool is_profile_id(std::string_view id) noexcept
{
    if (id.empty() || id.size() > 64) return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
    });
}

// ---------------------------------------------------------------------------
// Store

struct ContextStore::Slot {
    mutable std::shared_mutex mutex;
    UserProfile profile;
    std::vector<ContextEntry> entries;
    std::uint64_t next_entry_seq = 1;
    std::uint64_t history_count = 0;
    std::shared_ptr<const AntiDictionary> dictionary;
};

namespace {

std::string entry_id_for(std::string_view profile_id, std::uint64_t seq)
{
    return fmt::format("{}:{}", profile_id, seq);
}

std::string_view profile_of_entry(std::string_view entry_id)
{
    const auto colon = entry_id.rfind(':');
    if (colon == std::string_view::npos) return {};
    return entry_id.substr(0, colon);
}

std::string random_profile_id()
{
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    return fmt::format("p{:012x}", rng() & 0xFFFFFFFFFFFFull);
}

void write_file_atomically(const fs::path& path, const std::string& contents)
{
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(Errc::io_error, fmt::format("cannot write {}", tmp.string()));
        out << contents;
        out.flush();
        if (!out) throw Error(Errc::io_error, fmt::format("short write to {}", tmp.string()));
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw Error(Errc::io_error, fmt::format("cannot replace {}: {}", path.string(), ec.message()));
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_error, fmt::format("cannot read {}", path.string()));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

bool entry_order(const ContextEntry& a, const ContextEntry& b)
{
    if (a.use_count != b.use_count) return a.use_count > b.use_count;
    if (a.last_used_at != b.last_used_at) return a.last_used_at > b.last_used_at;
    if (a.value != b.value) return a.value < b.value;
    if (a.attribute != b.attribute) return a.attribute < b.attribute;
    return a.id < b.id;
}

} // namespace

ContextStore::ContextStore(fs::path data_dir, Clock clock)
    : data_dir_(std::move(data_dir)), clock_(std::move(clock)), stopwords_(data_dir_ / "stopwords")
{
    load_all();
}

ContextStore::~ContextStore() = default;

fs::path ContextStore::default_data_dir()
{
    if (const char* env = std::getenv("PRESY_DATA_DIR"); env && *env) return fs::path(env);
    return fs::path("presy-data");
}

fs::path ContextStore::profile_path(std::string_view id) const
{
    return data_dir_ / "profiles" / (std::string(id) + ".json");
}

fs::path ContextStore::history_path(std::string_view id) const
{
    return data_dir_ / "history" / (std::string(id) + ".jsonl");
}

void ContextStore::load_all()
{
    const fs::path dir = data_dir_ / "profiles";
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) return;

    std::vector<fs::path> files;
    for (const auto& item : fs::directory_iterator(dir))
        if (item.is_regular_file() && item.path().extension() == ".json") files.push_back(item.path());
    std::sort(files.begin(), files.end());

    for (const auto& file : files) {
        Json doc;
        try {
            doc = Json::parse(read_file(file));
        } catch (const Json::exception& e) {
            throw Error(Errc::corrupt_data, fmt::format("{}: {}", file.string(), e.what()));
        }
        auto s = std::make_unique<Slot>();
        s->profile = profile_from_json(doc);
        if (s->profile.id != file.stem().string())
            throw Error(Errc::corrupt_data, fmt::format("{}: id does not match file name", file.string()));
        for (const auto& item : require(doc, "entries")) s->entries.push_back(entry_from_json(item));
        s->next_entry_seq = require(doc, "next_entry_seq").get<std::uint64_t>();
        s->dictionary = stopwords_.get(s->profile.language);

        if (std::ifstream hist(history_path(s->profile.id)); hist) {
            std::string line;
            while (std::getline(hist, line))
                if (!line.empty()) ++s->history_count;
        }
        slots_.emplace(s->profile.id, std::move(s));
    }
}

void ContextStore::persist(const Slot& s) const
{
    Json doc = to_json(s.profile);
    Json entries = Json::array();
    for (const auto& e : s.entries) entries.push_back(to_json(e));
    doc["next_entry_seq"] = s.next_entry_seq;
    doc["entries"] = std::move(entries);

    fs::create_directories(data_dir_ / "profiles");
    write_file_atomically(profile_path(s.profile.id), doc.dump(2) + "\n");
}

ContextStore::Slot& ContextStore::slot(std::string_view profile_id) const
{
    std::shared_lock lock(slots_mutex_);
    auto it = slots_.find(profile_id);
    if (it == slots_.end()) throw Error(Errc::unknown_profile, fmt::format("unknown profile '{}'", profile_id));
    return *it->second;
}

UserProfile ContextStore::create_profile(const ProfileDraft& draft)
{
    UserProfile p;
    p.age = draft.age;
    p.sex = draft.sex;
    p.language = draft.language;
    p.specialty = normalize(draft.specialty);
    p.profession = normalize(draft.profession);
    p.study_level = draft.study_level;
    p.idempotency_key = draft.idempotency_key;

    if (p.age < 0) throw Error(Errc::invalid_field, "age must be non-negative");
    if (!is_language_code(p.language))
        throw Error(Errc::invalid_field, fmt::format("language '{}' is not a two-letter lowercase code", p.language));
    auto dictionary = stopwords_.get(p.language);
    if (!draft.id.empty() && !is_profile_id(draft.id))
        throw Error(Errc::invalid_field, fmt::format("profile id '{}' must match [A-Za-z0-9_-]{{1,64}}", draft.id));
    for (const auto& raw : draft.domains) {
        std::string d = normalize(raw);
        if (d.empty()) throw Error(Errc::invalid_field, "domains must not contain empty terms");
        if (std::find(p.domains.begin(), p.domains.end(), d) == p.domains.end()) p.domains.push_back(std::move(d));
    }

    std::unique_lock lock(slots_mutex_);
    if (p.idempotency_key) {
        for (const auto& [id, s] : slots_) {
            std::shared_lock slot_lock(s->mutex);
            if (s->profile.idempotency_key == p.idempotency_key) return s->profile;
        }
    }
    if (draft.id.empty()) {
        do {
            p.id = random_profile_id();
        } while (slots_.count(p.id) != 0);
    } else {
        if (slots_.count(draft.id) != 0) throw Error(Errc::duplicate_id, fmt::format("profile '{}' already exists", draft.id));
        p.id = draft.id;
    }
    p.created_at = clock_();

    auto s = std::make_unique<Slot>();
    s->profile = p;
    s->dictionary = dictionary;
    for (auto& e : derive_static_entries(p, *dictionary)) {
        e.id = entry_id_for(p.id, s->next_entry_seq++);
        s->entries.push_back(std::move(e));
    }
    persist(*s);
    slots_.emplace(p.id, std::move(s));
    return p;
}

UserProfile ContextStore::profile(std::string_view profile_id) const
{
    Slot& s = slot(profile_id);
    std::shared_lock lock(s.mutex);
    return s.profile;
}

std::vector<std::string> ContextStore::profile_ids() const
{
    std::shared_lock lock(slots_mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, s] : slots_) ids.push_back(id);
    return ids;
}

std::shared_ptr<const AntiDictionary> ContextStore::dictionary_for(std::string_view profile_id) const
{
    Slot& s = slot(profile_id);
    std::shared_lock lock(s.mutex);
    return s.dictionary;
}

std::vector<ContextEntry> ContextStore::entries(std::string_view profile_id) const
{
    Slot& s = slot(profile_id);
    std::shared_lock lock(s.mutex);
    return s.entries;
}

ContextEntry ContextStore::entry(std::string_view entry_id) const
{
    const auto pid = profile_of_entry(entry_id);
    std::shared_lock map_lock(slots_mutex_);
    auto it = slots_.find(pid);
    if (it == slots_.end()) throw Error(Errc::unknown_entry, fmt::format("unknown entry '{}'", entry_id));
    Slot& s = *it->second;
    map_lock.unlock();

    std::shared_lock lock(s.mutex);
    for (const auto& e : s.entries)
        if (e.id == entry_id) return e;
    throw Error(Errc::unknown_entry, fmt::format("unknown entry '{}'", entry_id));
}

std::vector<ContextEntry> ContextStore::propose_dynamic_entries(std::string_view profile_id,
                                                                std::string_view attribute,
                                                                std::span<const std::string> candidates)
{
    Slot& s = slot(profile_id);
    const std::string attr = normalize(attribute);
    if (attr.empty()) throw Error(Errc::invalid_field, "attribute must not be empty");

    std::unique_lock lock(s.mutex);
    const Timestamp now = clock_();
    std::vector<ContextEntry> out;
    std::unordered_set<std::string> handled;
    bool changed = false;
    for (const auto& raw : candidates) {
        std::string value = normalize(raw);
        if (value.empty() || value == attr || s.dictionary->contains(value)) continue;
        if (!handled.insert(value).second) continue;

        auto existing = std::find_if(s.entries.begin(), s.entries.end(), [&](const ContextEntry& e) {
            return e.attribute == attr && e.value == value;
        });
        if (existing != s.entries.end()) {
            out.push_back(*existing);
            continue;
        }
        ContextEntry e;
        e.id = entry_id_for(s.profile.id, s.next_entry_seq++);
        e.profile_id = s.profile.id;
        e.kind = EntryKind::dynamic_context;
        e.attribute = attr;
        e.value = std::move(value);
        e.status = EntryStatus::proposed;
        e.created_at = now;
        e.last_used_at = now;
        s.entries.push_back(e);
        out.push_back(std::move(e));
        changed = true;
    }
    if (changed) persist(s);
    return out;
}

ContextEntry ContextStore::set_entry_status(std::string_view entry_id, EntryStatus decision)
{
    if (decision == EntryStatus::proposed)
        throw Error(Errc::invalid_argument, "decision must be validated or rejected");

    const auto pid = profile_of_entry(entry_id);
    std::shared_lock map_lock(slots_mutex_);
    auto it = slots_.find(pid);
    if (it == slots_.end()) throw Error(Errc::unknown_entry, fmt::format("unknown entry '{}'", entry_id));
    Slot& s = *it->second;
    map_lock.unlock();

    std::unique_lock lock(s.mutex);
    auto e = std::find_if(s.entries.begin(), s.entries.end(), [&](const ContextEntry& x) { return x.id == entry_id; });
    if (e == s.entries.end()) throw Error(Errc::unknown_entry, fmt::format("unknown entry '{}'", entry_id));
    if (e->status == decision) return *e;
    if (e->status != EntryStatus::proposed)
        throw Error(Errc::illegal_transition,
                    fmt::format("entry '{}' is {}; cannot become {}", entry_id, to_string(e->status), to_string(decision)));
    e->status = decision;
    persist(s);
    return *e;
}

std::vector<ContextEntry> ContextStore::query_entries(std::string_view profile_id,
                                                      std::string_view attribute_prefix,
                                                      const StatusSet& statuses) const
{
    Slot& s = slot(profile_id);
    const std::string prefix = normalize(attribute_prefix);

    std::vector<ContextEntry> out;
    {
        std::shared_lock lock(s.mutex);
        for (const auto& e : s.entries)
            if (statuses.count(e.status) != 0 && e.attribute.compare(0, prefix.size(), prefix) == 0) out.push_back(e);
    }
    std::sort(out.begin(), out.end(), entry_order);
    return out;
}

void ContextStore::record_usage(std::string_view profile_id, std::span<const std::string> entry_ids)
{
    if (entry_ids.empty()) return;
    Slot& s = slot(profile_id);
    std::unique_lock lock(s.mutex);
    const Timestamp now = clock_();
    bool changed = false;
    for (const auto& id : entry_ids) {
        auto e = std::find_if(s.entries.begin(), s.entries.end(), [&](const ContextEntry& x) { return x.id == id; });
        if (e == s.entries.end()) throw Error(Errc::unknown_entry, fmt::format("unknown entry '{}'", id));
        ++e->use_count;
        e->last_used_at = now;
        changed = true;
    }
    if (changed) persist(s);
}

std::uint64_t ContextStore::append_history(const HistoryRecord& record)
{
    Slot& s = slot(record.profile_id);
    if (record.result_titles.size() != record.result_urls.size())
        throw Error(Errc::malformed_record,
                    fmt::format("{} titles but {} urls", record.result_titles.size(), record.result_urls.size()));
    if (record.result_titles.size() > kMaxHistoryResults)
        throw Error(Errc::malformed_record, fmt::format("at most {} results per record", kMaxHistoryResults));

    std::unique_lock lock(s.mutex);
    fs::create_directories(data_dir_ / "history");
    std::ofstream out(history_path(record.profile_id), std::ios::binary | std::ios::app);
    if (!out) throw Error(Errc::io_error, "cannot open history log");
    out << to_json(record).dump() << '\n';
    out.flush();
    if (!out) throw Error(Errc::io_error, "short write to history log");
    return ++s.history_count;
}

std::vector<HistoryRecord> ContextStore::history(std::string_view profile_id) const
{
    Slot& s = slot(profile_id);
    std::shared_lock lock(s.mutex);
    std::vector<HistoryRecord> out;
    std::ifstream in(history_path(profile_id), std::ios::binary);
    if (!in) return out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(history_from_json(Json::parse(line)));
        } catch (const Json::exception& e) {
            throw Error(Errc::corrupt_data, fmt::format("history of '{}': {}", profile_id, e.what()));
        }
    }
    return out;
}

} // namespace presy
