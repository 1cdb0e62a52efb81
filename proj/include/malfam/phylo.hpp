#pragma once

#include "malfam/similarity.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace malfam {

using NodeId = std::size_t;

struct PhyloNode {
    NodeId id = 0;
    double height = 0.0;
    /// Both present for internal nodes, neither for leaves. The first child
    /// holds the lexicographically smallest leaf label of the two.
    std::optional<std::pair<NodeId, NodeId>> children;
    std::optional<NodeId> parent;
    /// Leaf indices (into PhyloTree::labels) in left-to-right order.
    std::vector<std::size_t> members;

    bool is_leaf() const noexcept { return !children.has_value(); }
};

/// Leaves are nodes 0..n-1 (in matrix order), internal nodes n..2n-2 in
/// merge order; the last node is the root.
struct PhyloTree {
    std::vector<std::string> labels;
    std::vector<PhyloNode> nodes;
    NodeId root = 0;

    std::size_t leaf_count() const noexcept { return labels.size(); }
    std::vector<std::string> member_labels(NodeId id) const;
    /// Lowest node whose subtree contains every given leaf.
    NodeId lowest_common_ancestor(const std::vector<std::size_t>& leaves) const;
    std::optional<std::size_t> leaf_index(const std::string& label) const;
};

enum class LinkageUpdate {
    /// d(x, i∪j) = (d(x,i) + d(x,j)) / 2 regardless of cluster sizes.
    Unweighted,
    /// d(x, i∪j) = (|i|·d(x,i) + |j|·d(x,j)) / (|i| + |j|), i.e. textbook UPGMA.
    SizeWeighted,
};

struct UpgmaOptions {
    LinkageUpdate update = LinkageUpdate::Unweighted;
};

/// Agglomerative average-linkage tree. Repeatedly merges the closest pair of
/// clusters and places the new node at exactly their distance. Ties go to the
/// pair whose (smaller, larger) leading labels are lexicographically smallest,
/// a cluster's leading label being the smallest label it contains.
PhyloTree upgma(const DistanceMatrix& d, const UpgmaOptions& opts = {});

/// Partition of leaf labels into groups.
struct Grouping {
    std::optional<double> threshold;
    std::vector<std::vector<std::string>> groups;

    bool operator==(const Grouping&) const = default;
};

/// Two leaves share a group iff their lowest common ancestor sits strictly
/// below `threshold`. Groups come out ordered by their leftmost leaf.
Grouping cut_tree(const PhyloTree& t, double threshold);

/// Subtree roots of the groups produced by cut_tree, in the same order.
std::vector<NodeId> cut_tree_nodes(const PhyloTree& t, double threshold);

/// Newick text with branch lengths parent.height - child.height.
std::string to_newick(const PhyloTree& t);

/// Fraction of label pairs on which two partitions of the same label set agree.
double rand_index(const Grouping& a, const Grouping& b);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace malfam
