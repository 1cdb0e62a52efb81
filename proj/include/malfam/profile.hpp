#pragma once

/**
 * @file profile.hpp
 * @brief Behavior-profile data model, XML I/O and feature canonicalization.
 *
 * A profile is the recorded execution of a single process: a small metadata
 * block followed by the ordered API calls it made, each with its parameters,
 * return value and a timestamp in 100-ns ticks. On disk a profile looks like
 *
 *     <Profile>
 *       <Meta><Hash>..</Hash><Process_id>..</Process_id><Duration>..</Duration></Meta>
 *       <Execution>
 *         <CreateFile hName="C:\..." desiredAccess="GENERIC_WRITE" Return="SUCCESS" Time="317560000" />
 *       </Execution>
 *     </Profile>
 *
 * Processes spawned by a profiled process get their own profile; the optional
 * <Parent_hash> meta field links them back.
 */

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace malfam {

struct ApiEvent {
    std::string api_name;
    /// Parameters in document order; never contains the reserved Return/Time keys.
    std::vector<std::pair<std::string, std::string>> attributes;
    std::optional<std::string> return_value;
    std::uint64_t timestamp = 0;

    bool operator==(const ApiEvent&) const = default;
};

struct Profile {
    std::string hash;
    std::uint64_t process_id = 0;
    std::uint64_t duration_seconds = 0;
    std::vector<ApiEvent> events;
    std::optional<std::string> parent_hash;

    bool operator==(const Profile&) const = default;
};

/// Controls how events turn into behavior elements.
struct FeatureConfig {
    bool with_params = true;      ///< false: API name only
    unsigned ngram_n = 1;         ///< elements are windows of this many consecutive events
    bool normalize_paths = true;  ///< lowercase path-like parameter values
    bool include_return = true;   ///< fold the return value in (only with params)

    void validate() const;
    bool operator==(const FeatureConfig&) const = default;
};

/// Canonical token for one event or one window of events.
using BehaviorElement = std::string;

/// Sorted, duplicate-free collection of behavior elements.
using ElementSet = std::vector<BehaviorElement>;

/// Parameter keys whose values name a file, registry key or command line.
bool is_path_like_key(std::string_view key);

/// Throws ParseError on malformed XML, SchemaError on layout violations.
Profile parse_profile(std::string_view xml_text);

std::string serialize_profile(const Profile& p);

/// Token layout: `Api|k1=v1|k2=v2|Return=r` with keys sorted; `%`, `|`, `=`
/// and `;` inside names or values are percent-encoded. N-gram tokens join the
/// per-event encodings with `;`.
BehaviorElement canonicalize_event(const ApiEvent& e, const FeatureConfig& cfg);

ElementSet extract_elements(const Profile& p, const FeatureConfig& cfg);

/// Sorts and deduplicates in place.
void normalize_set(ElementSet& s);

}  // namespace malfam
