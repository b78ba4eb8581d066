#pragma once

#include "presy/text_pipeline.hpp"
#include "presy/timestamp.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace presy {

enum class Sex { female, male, unspecified };
enum class StudyLevel { primary, secondary, undergraduate, graduate, doctoral, unspecified };
enum class EntryKind { static_context, dynamic_context };
enum class EntryStatus { proposed, validated, rejected };

std::string_view to_string(Sex v) noexcept;
std::string_view to_string(StudyLevel v) noexcept;
std::string_view to_string(EntryKind v) noexcept;
std::string_view to_string(EntryStatus v) noexcept;
// Throw Error(invalid_field) on unknown names.
Sex parse_sex(std::string_view name);
StudyLevel parse_study_level(std::string_view name);
EntryKind parse_entry_kind(std::string_view name);
EntryStatus parse_entry_status(std::string_view name);

using StatusSet = std::set<EntryStatus>;

// Identification profile: the user's static context.
struct UserProfile {
    std::string id;
    int age = 0;
    Sex sex = Sex::unspecified;
    std::string language = "en";
    std::vector<std::string> domains;
    std::string specialty;
    std::string profession;
    StudyLevel study_level = StudyLevel::unspecified;
    Timestamp created_at{};
    // Set when the profile was created through the API; repeats with the same
    // key return the stored profile instead of creating another.
    std::optional<std::string> idempotency_key;

    friend bool operator==(const UserProfile&, const UserProfile&) = default;
};

// Fields accepted at creation. An empty id lets the store pick one.
struct ProfileDraft {
    std::string id;
    int age = 0;
    Sex sex = Sex::unspecified;
    std::string language = "en";
    std::vector<std::string> domains;
    std::string specialty;
    std::string profession;
    StudyLevel study_level = StudyLevel::unspecified;
    std::optional<std::string> idempotency_key;
};

// One attribute -> value pair of the context base.
struct ContextEntry {
    std::string id;
    std::string profile_id;
    EntryKind kind = EntryKind::dynamic_context;
    std::string attribute;
    std::string value;
    EntryStatus status = EntryStatus::proposed;
    std::uint64_t use_count = 0;
    Timestamp created_at{};
    Timestamp last_used_at{};

    friend bool operator==(const ContextEntry&, const ContextEntry&) = default;
};

inline constexpr std::size_t kMaxHistoryResults = 10;

struct HistoryRecord {
    std::string profile_id;
    Timestamp timestamp{};
    std::string raw_query;
    std::optional<std::string> reformulated_query;
    std::string engine_id;
    std::vector<std::string> result_titles;
    std::vector<std::string> result_urls;
    std::uint64_t total_estimate_baseline = 0;
    std::uint64_t total_estimate_reformulated = 0;

    friend bool operator==(const HistoryRecord&, const HistoryRecord&) = default;
};

// Static-context pairs: domain <-> specialty word in both directions and
// profession word -> domain. Stop-words never appear as values. Ids are
// left empty for the store to assign.
std::vector<ContextEntry> derive_static_entries(const UserProfile& profile, const AntiDictionary& dictionary);

bool is_profile_id(std::string_view id) noexcept;

// Plain-file persistence for profiles, their context entries and search
// history:
//
//   <data_dir>/profiles/<id>.json    profile document with its entries
//   <data_dir>/history/<id>.jsonl    one HistoryRecord per line
//   <data_dir>/stopwords/<lang>.txt  optional anti-dictionary overrides
//
// All mutations of one profile are serialized; readers take a shared lock
// and copy out, so they never observe a half-applied change. The store
// assumes it is the only process touching data_dir.
class ContextStore {
public:
    explicit ContextStore(std::filesystem::path data_dir, Clock clock = system_now);
    ~ContextStore();

    ContextStore(const ContextStore&) = delete;
    ContextStore& operator=(const ContextStore&) = delete;

    // PRESY_DATA_DIR, else ./presy-data
    static std::filesystem::path default_data_dir();

    const std::filesystem::path& data_dir() const noexcept { return data_dir_; }
    const StopwordCatalog& stopwords() const noexcept { return stopwords_; }
    Timestamp now() const { return clock_(); }

    UserProfile create_profile(const ProfileDraft& draft);
    UserProfile profile(std::string_view profile_id) const;
    std::vector<std::string> profile_ids() const;
    std::shared_ptr<const AntiDictionary> dictionary_for(std::string_view profile_id) const;

    std::vector<ContextEntry> entries(std::string_view profile_id) const;
    ContextEntry entry(std::string_view entry_id) const;

    // New pairs start as proposed dynamic entries; existing pairs (in any
    // state, including rejected) are returned unchanged. Candidates that are
    // empty, stop-words or equal to the attribute are skipped.
    std::vector<ContextEntry> propose_dynamic_entries(std::string_view profile_id,
                                                      std::string_view attribute,
                                                      std::span<const std::string> candidates);

    // proposed -> validated | rejected. Re-applying the current status is a no-op.
    ContextEntry set_entry_status(std::string_view entry_id, EntryStatus decision);

    // Attribute starts with prefix (case-folded), status in statuses. Sorted by
    // use_count desc, last_used_at desc, value asc.
    std::vector<ContextEntry> query_entries(std::string_view profile_id,
                                            std::string_view attribute_prefix,
                                            const StatusSet& statuses) const;

    // Bumps use_count and last_used_at for entries consumed by a reformulation.
    void record_usage(std::string_view profile_id, std::span<const std::string> entry_ids);

    // Returns the 1-based position of the record in the profile's log.
    std::uint64_t append_history(const HistoryRecord& record);
    std::vector<HistoryRecord> history(std::string_view profile_id) const;

private:
    struct Slot;

    Slot& slot(std::string_view profile_id) const;
    void load_all();
    void persist(const Slot& s) const;
    std::filesystem::path profile_path(std::string_view id) const;
    std::filesystem::path history_path(std::string_view id) const;

    std::filesystem::path data_dir_;
    Clock clock_;
    StopwordCatalog stopwords_;

    mutable std::shared_mutex slots_mutex_;
    std::map<std::string, std::unique_ptr<Slot>, std::less<>> slots_;
};

} // namespace presy
