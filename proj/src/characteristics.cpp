#include "malfam/characteristics.hpp"

#include "malfam/error.hpp"
#include "malfam/rng.hpp"

#include <algorithm>
#include <iterator>
#include <numeric>
#include <unordered_map>

namespace malfam {

void EnduranceConfig::validate() const {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw InputError("alpha must lie in [0, 1)");
    if (!(min_score >= 0.0 && min_score <= 1.0)) throw InputError("min-score must lie in [0, 1]");
}

ElementSet common_set(std::span<const ElementSet> member_sets, double alpha) {
    if (member_sets.empty()) throw InputError("common set of an empty group");
    if (!(alpha >= 0.0 && alpha < 1.0)) throw InputError("alpha must lie in [0, 1)");

    std::vector<const BehaviorElement*> all;
    for (const auto& s : member_sets) {
        for (const auto& e : s) all.push_back(&e);
    }
    std::sort(all.begin(), all.end(), [](auto* a, auto* b) { return *a < *b; });

    const std::size_t n = member_sets.size();
    const double needed = 1.0 - alpha;
    ElementSet out;
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        while (j < all.size() && *all[j] == *all[i]) ++j;
        const std::size_t count = j - i;
        // an element held by every member always qualifies, including at alpha = 0
        if (count == n || static_cast<double>(count) / static_cast<double>(n) > needed) out.push_back(*all[i]);
        i = j;
    }
    return out;
}

std::vector<GroupCharacteristics> distinct_characteristics(const PhyloTree& t, const Grouping& g,
                                                           const LabelledSets& members,
                                                           const EnduranceConfig& cfg) {
    cfg.validate();
    std::unordered_map<std::string, std::size_t> leaf_of;
    for (std::size_t i = 0; i < t.labels.size(); ++i) leaf_of.emplace(t.labels[i], i);

    auto set_of = [&](const std::string& label) -> const ElementSet& {
        auto it = members.find(label);
        if (it == members.end()) throw InputError("no element set for '" + label + "'");
        return it->second;
    };
    auto common_over = [&](const std::vector<std::string>& labels) {
        std::vector<ElementSet> sets;
        sets.reserve(labels.size());
        for (const auto& l : labels) sets.push_back(set_of(l));
        return common_set(sets, cfg.alpha);
    };

    std::unordered_map<NodeId, ElementSet> parent_common;
    std::vector<GroupCharacteristics> out;
    out.reserve(g.groups.size());
    for (std::size_t gid = 0; gid < g.groups.size(); ++gid) {
        const auto& labels = g.groups[gid];
        if (labels.empty()) throw InputError("group " + std::to_string(gid) + " is empty");
        std::vector<std::size_t> leaves;
        for (const auto& l : labels) {
            auto it = leaf_of.find(l);
            if (it == leaf_of.end()) throw InputError("label '" + l + "' is not a leaf of the tree");
            leaves.push_back(it->second);
        }
        NodeId node = t.lowest_common_ancestor(leaves);
        if (t.nodes[node].members.size() != labels.size()) {
            throw InputError("group " + std::to_string(gid) + " is not a subtree of the tree");
        }

        GroupCharacteristics gc;
        gc.group_id = gid;
        gc.members = labels;
        gc.common = common_over(labels);
        if (auto parent = t.nodes[node].parent) {
            auto it = parent_common.find(*parent);
            if (it == parent_common.end()) it = parent_common.emplace(*parent, common_over(t.member_labels(*parent))).first;
            std::set_difference(gc.common.begin(), gc.common.end(), it->second.begin(), it->second.end(),
                                std::back_inserter(gc.distinct));
        } else {
            gc.distinct = gc.common;
        }
        out.push_back(std::move(gc));
    }
    return out;
}

double containment_score(const ElementSet& x, const GroupCharacteristics& group) {
    if (group.distinct.empty()) return 0.0;
    std::size_t hit = 0;
    auto a = x.begin();
    for (const auto& d : group.distinct) {
        a = std::lower_bound(a, x.end(), d);
        if (a == x.end()) break;
        if (*a == d) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(group.distinct.size());
}

std::optional<std::size_t> classify(const ElementSet& x, std::span<const GroupCharacteristics> chars,
                                    const EnduranceConfig& cfg) {
    if (chars.empty()) throw InputError("classification needs at least one group");
    const GroupCharacteristics* best = nullptr;
    double best_score = -1.0;
    for (const auto& g : chars) {
        double s = containment_score(x, g);
        if (s > best_score || (s == best_score && g.group_id < best->group_id)) {
            best = &g;
            best_score = s;
        }
    }
    if (best_score < cfg.min_score) return std::nullopt;
    return best->group_id;
}

FoldTestResult fold_test(std::span<const std::string> labels, std::span<const ElementSet> sets,
                         const FoldTestOptions& opts) {
    opts.endurance.validate();
    const std::size_t n = labels.size();
    if (n != sets.size()) throw InputError("label count does not match set count");
    if (opts.folds < 2 || opts.folds > n) throw InputError("fold count must lie in [2, number of profiles]");

    const DistanceMatrix full = distance_matrix(labels, sets);
    const PhyloTree full_tree = upgma(full, opts.upgma);
    std::vector<std::size_t> reference(n);
    std::vector<std::size_t> reference_size;
    for (NodeId node : cut_tree_nodes(full_tree, opts.threshold)) {
        for (auto leaf : full_tree.nodes[node].members) reference[leaf] = reference_size.size();
        reference_size.push_back(full_tree.nodes[node].members.size());
    }

    FoldTestResult result;
    result.threshold = opts.threshold;
    result.reference_groups = reference_size.size();

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Xorshift64Star rng(opts.seed);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);

    for (std::size_t f = 0; f < opts.folds; ++f) {
        const std::size_t lo = f * n / opts.folds, hi = (f + 1) * n / opts.folds;
        std::vector<bool> held_out(n, false);
        for (std::size_t k = lo; k < hi; ++k) held_out[perm[k]] = true;

        std::vector<std::size_t> train;
        for (std::size_t i = 0; i < n; ++i) {
            if (!held_out[i]) train.push_back(i);
        }
        std::vector<std::string> train_labels;
        for (auto i : train) train_labels.push_back(labels[i]);
        DistanceMatrix sub(train_labels);
        for (std::size_t a = 0; a < train.size(); ++a) {
            for (std::size_t b = a + 1; b < train.size(); ++b) sub.set(a, b, full.at(train[a], train[b]));
        }
        const PhyloTree tree = upgma(sub, opts.upgma);
        const Grouping grouping = cut_tree(tree, opts.threshold);
        LabelledSets member_sets;
        for (auto i : train) member_sets.emplace(labels[i], sets[i]);
        const auto chars = distinct_characteristics(tree, grouping, member_sets, opts.endurance);

        std::unordered_map<std::string, std::size_t> index_of;
        for (auto i : train) index_of.emplace(labels[i], i);

        for (std::size_t k = lo; k < hi; ++k) {
            const std::size_t t = perm[k];
            ++result.tests;
            const bool singleton = reference_size[reference[t]] == 1;
            auto predicted = classify(sets[t], chars, opts.endurance);
            if (!predicted) {
                ++(singleton ? result.single_member : result.unassigned);
                continue;
            }
            std::unordered_map<std::size_t, std::size_t> votes;
            for (const auto& m : grouping.groups[*predicted]) ++votes[reference[index_of.at(m)]];
            std::size_t top = 0;
            for (const auto& [ref, c] : votes) top = std::max(top, c);
            auto own = votes.find(reference[t]);
            if (!singleton && own != votes.end() && own->second == top) {
                ++result.correct;
            } else {
                ++result.wrong_group;
            }
        }
    }
    return result;
}

}  // namespace malfam
