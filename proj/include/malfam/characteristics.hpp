#pragma once

#include "malfam/phylo.hpp"
#include "malfam/profile.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace malfam {

/// Tolerance settings for characteristic extraction and classification.
struct EnduranceConfig {
    /// An element is common to a group when more than (1 - alpha) of the
    /// members exhibit it. alpha = 0 is a strict intersection.
    double alpha = 0.1;
    /// Smallest containment score that still assigns a sample to a group.
    double min_score = 0.5;

    void validate() const;
};

struct GroupCharacteristics {
    std::size_t group_id = 0;
    std::vector<std::string> members;
    ElementSet common;    ///< C(G)
    ElementSet distinct;  ///< D(G) = C(G) \ C(parent)

    std::size_t size() const noexcept { return members.size(); }
};

using LabelledSets = std::map<std::string, ElementSet>;

/// Elements carried by more than (1 - alpha) of the member sets.
/// Member sets must be sorted and duplicate-free.
ElementSet common_set(std::span<const ElementSet> member_sets, double alpha);

/// Per-group common and distinct characteristics. The parent of a group is
/// the tree node directly above the group's subtree root; a group that spans
/// the whole tree keeps D(G) = C(G). Group ids are positions in `g.groups`.
std::vector<GroupCharacteristics> distinct_characteristics(const PhyloTree& t, const Grouping& g,
                                                           const LabelledSets& members,
                                                           const EnduranceConfig& cfg);

/// |x ∩ D(G)| / |D(G)|, or 0 when D(G) is empty.
double containment_score(const ElementSet& x, const GroupCharacteristics& group);

/// Best-scoring group id, or nullopt when the best score is below
/// cfg.min_score. Ties go to the smallest id.
std::optional<std::size_t> classify(const ElementSet& x, std::span<const GroupCharacteristics> chars,
                                    const EnduranceConfig& cfg);

/// Held-out classification protocol: the corpus is cut at `threshold` to get
/// reference groups, then split into folds; each fold is classified against
/// characteristics learned from the remaining profiles.
struct FoldTestOptions {
    double threshold = 0.5;
    std::size_t folds = 10;
    std::uint64_t seed = 1;
    EnduranceConfig endurance;
    UpgmaOptions upgma;
};

struct FoldTestResult {
    double threshold = 0.0;
    std::size_t reference_groups = 0;  ///< groups in the full-corpus tree
    std::size_t tests = 0;
    std::size_t correct = 0;         ///< assigned to a group dominated by its reference group
    std::size_t wrong_group = 0;     ///< assigned to a group dominated by another reference group
    std::size_t single_member = 0;   ///< reference group is a singleton and the sample stayed unassigned
    std::size_t unassigned = 0;      ///< non-singleton reference group but no group scored high enough

    double wrong_group_rate() const { return tests ? static_cast<double>(wrong_group) / tests : 0.0; }
    double single_member_rate() const { return tests ? static_cast<double>(single_member) / tests : 0.0; }
};

FoldTestResult fold_test(std::span<const std::string> labels, std::span<const ElementSet> sets,
                         const FoldTestOptions& opts);

}  // namespace malfam
