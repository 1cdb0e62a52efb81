#pragma once

/**
 * @file synth.hpp
 * @brief Seeded generator of family-structured behavior-profile corpora.
 *
 * A family template is an ordered list of API events plus per-parameter value
 * pools. Variant 0 of a family is the template itself; later variants walk
 * the template and, per event, independently roll each allowed mutation with
 * probability `rate`:
 *
 *  - drop_event:         the event is omitted
 *  - perturb_param:      one pooled parameter takes another value from its pool
 *  - duplicate_event:    the event is emitted twice
 *  - insert_noise_event: a background event follows the event
 *  - spawn_child:        on process-creating calls, the created process gets
 *                        its own profile (parent_hash set) replaying the
 *                        template with the same mutation rate
 *
 * All randomness comes from Xorshift64Star, so a spec and seed always give
 * byte-identical output.
 */

#include "malfam/phylo.hpp"
#include "malfam/profile.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace malfam {

enum class Mutation { DropEvent, DuplicateEvent, PerturbParam, InsertNoiseEvent, SpawnChild };

std::string_view to_string(Mutation m);
Mutation mutation_from_string(std::string_view name);

/// The hooked API vocabulary, grouped as File, Registry, Process, Library.
std::span<const std::string_view> hooked_apis();
bool is_hooked_api(std::string_view name);
/// CreateProcess, CreateProcessInternal and WinExec.
bool is_process_creating_api(std::string_view name);

struct EventPattern {
    std::string api_name;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::optional<std::string> return_value;

    bool operator==(const EventPattern&) const = default;
};

struct FamilyTemplate {
    std::string name;
    std::vector<EventPattern> base_events;
    std::set<Mutation> mutation_ops{Mutation::DropEvent, Mutation::DuplicateEvent, Mutation::PerturbParam,
                                    Mutation::InsertNoiseEvent, Mutation::SpawnChild};
    /// Alternative values per parameter key, used by perturb_param.
    std::map<std::string, std::vector<std::string>> param_pools;

    /// Non-empty events drawn from the hooked vocabulary.
    void validate() const;
    bool operator==(const FamilyTemplate&) const = default;
};

/// A profile together with its corpus label `<hash>-<ordinal>`; ordinal 0
/// is the sample's main process, children count up from 1.
struct GeneratedProfile {
    std::string label;
    Profile profile;
};

std::vector<GeneratedProfile> generate_family(const FamilyTemplate& tpl, std::size_t count, double rate,
                                              std::uint64_t seed);

struct CorpusFamily {
    FamilyTemplate tpl;
    std::size_t variants = 1;
};

struct CorpusSpec {
    std::vector<CorpusFamily> families;
    double mutation_rate = 0.1;
    std::uint64_t seed = 1;

    void validate() const;
};

struct Corpus {
    std::vector<GeneratedProfile> profiles;
    Grouping truth;                     ///< one group per family, in spec order
    std::vector<std::string> family_names;
};

Corpus generate_corpus(const CorpusSpec& spec);

/// Builds a dropper-style template: drop a file, persist it in the registry,
/// load helper libraries, launch the dropped copy, then a seeded mix of
/// file/registry/process activity over a small set of family resources.
/// Resource names derive from `name` and `salt`, so different names give
/// disjoint parameter values.
FamilyTemplate make_template(std::string name, std::size_t event_count, std::uint64_t salt);

/// Same API sequence and parameter keys as `tpl`, but every parameter value
/// (and pool entry) is replaced by one from a separate benign namespace.
FamilyTemplate rebind_parameters(const FamilyTemplate& tpl, std::string name, std::uint64_t salt);

}  // namespace malfam
