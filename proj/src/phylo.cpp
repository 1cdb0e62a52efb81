#include "malfam/phylo.hpp"

#include "malfam/error.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace malfam {

std::vector<std::string> PhyloTree::member_labels(NodeId id) const {
    std::vector<std::string> out;
    out.reserve(nodes.at(id).members.size());
    for (auto leaf : nodes.at(id).members) out.push_back(labels[leaf]);
    return out;
}

NodeId PhyloTree::lowest_common_ancestor(const std::vector<std::size_t>& leaves) const {
    if (leaves.empty()) throw InputError("lowest common ancestor of an empty leaf set");
    NodeId node = leaves.front();
    for (auto leaf : leaves) {
        if (leaf >= leaf_count()) throw InputError("leaf index out of range");
    }
    // Climb from the first leaf until the subtree covers all requested leaves.
    for (;;) {
        const auto& m = nodes[node].members;
        bool covers = std::all_of(leaves.begin(), leaves.end(),
                                  [&](std::size_t l) { return std::find(m.begin(), m.end(), l) != m.end(); });
        if (covers) return node;
        node = *nodes[node].parent;
    }
}

std::optional<std::size_t> PhyloTree::leaf_index(const std::string& label) const {
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) return std::nullopt;
    return static_cast<std::size_t>(it - labels.begin());
}

PhyloTree upgma(const DistanceMatrix& d, const UpgmaOptions& opts) {
    d.validate();
    const std::size_t n = d.size();
    if (n == 0) throw InputError("upgma needs at least one label");

    PhyloTree tree;
    tree.labels = d.labels();
    tree.nodes.reserve(2 * n - 1);

    // rank[i] = position of label i in lexicographic order; used for ties.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return tree.labels[a] < tree.labels[b]; });
    std::vector<std::size_t> rank(n);
    for (std::size_t r = 0; r < n; ++r) rank[order[r]] = r;

    for (std::size_t i = 0; i < n; ++i) {
        PhyloNode leaf;
        leaf.id = i;
        leaf.members = {i};
        tree.nodes.push_back(std::move(leaf));
    }

    // Working state per slot: slot i starts as leaf i; a merge reuses the
    // slot of one partner and retires the other.
    std::vector<double> dist(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) dist[i * n + j] = d.at(i, j);
    }
    std::vector<std::size_t> active(n);
    std::iota(active.begin(), active.end(), 0);
    std::vector<NodeId> node_of(n);
    std::iota(node_of.begin(), node_of.end(), 0);
    std::vector<std::size_t> lead(rank);  // smallest label rank in the slot's cluster
    std::vector<std::size_t> count(n, 1);

    double last_height = 0.0;
    while (active.size() > 1) {
        std::size_t best_a = 0, best_b = 1;
        double best = dist[active[0] * n + active[1]];
        auto key = [&](std::size_t a, std::size_t b) {
            auto la = lead[active[a]], lb = lead[active[b]];
            return la < lb ? std::pair{la, lb} : std::pair{lb, la};
        };
        auto best_key = key(0, 1);
        for (std::size_t a = 0; a < active.size(); ++a) {
            const double* row = &dist[active[a] * n];
            for (std::size_t b = a + 1; b < active.size(); ++b) {
                double v = row[active[b]];
                if (v < best || (v == best && key(a, b) < best_key)) {
                    best = v;
                    best_a = a;
                    best_b = b;
                    best_key = key(a, b);
                }
            }
        }

        const std::size_t si = active[best_a];
        const std::size_t sj = active[best_b];
        if (best < last_height) throw std::logic_error("upgma: merge height decreased");
        last_height = best;

        PhyloNode node;
        node.id = tree.nodes.size();
        node.height = best;
        NodeId left = node_of[si], right = node_of[sj];
        if (lead[sj] < lead[si]) std::swap(left, right);
        node.children = std::pair{left, right};
        node.members = tree.nodes[left].members;
        const auto& rm = tree.nodes[right].members;
        node.members.insert(node.members.end(), rm.begin(), rm.end());
        tree.nodes[left].parent = node.id;
        tree.nodes[right].parent = node.id;

        for (std::size_t x : active) {
            if (x == si || x == sj) continue;
            double di = dist[x * n + si], dj = dist[x * n + sj];
            double merged;
            if (opts.update == LinkageUpdate::Unweighted) {
                merged = (di + dj) / 2.0;
            } else {
                double ni = static_cast<double>(count[si]), nj = static_cast<double>(count[sj]);
                merged = (ni * di + nj * dj) / (ni + nj);
                // keep rounding from escaping the exact convex-combination bounds
                merged = std::clamp(merged, std::min(di, dj), std::max(di, dj));
            }
            dist[x * n + si] = merged;
            dist[si * n + x] = merged;
        }
        node_of[si] = node.id;
        lead[si] = std::min(lead[si], lead[sj]);
        count[si] += count[sj];
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_b));
        tree.nodes.push_back(std::move(node));
    }
    tree.root = tree.nodes.size() - 1;
    return tree;
}

std::vector<NodeId> cut_tree_nodes(const PhyloTree& t, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw InputError("threshold must lie in [0, 1]");
    std::vector<NodeId> out;
    std::vector<NodeId> stack{t.root};
    while (!stack.empty()) {
        NodeId id = stack.back();
        stack.pop_back();
        const auto& node = t.nodes[id];
        if (node.is_leaf() || node.height < threshold) {
            out.push_back(id);
        } else {
            stack.push_back(node.children->second);
            stack.push_back(node.children->first);
        }
    }
    return out;
}

Grouping cut_tree(const PhyloTree& t, double threshold) {
    Grouping g;
    g.threshold = threshold;
    for (NodeId id : cut_tree_nodes(t, threshold)) g.groups.push_back(t.member_labels(id));
    return g;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

namespace {

std::string newick_label(const std::string& label) {
    if (!label.empty() && label.find_first_of(" \t\n()[]':;,") == std::string::npos) return label;
    std::string out = "'";
    for (char c : label) {
        if (c == '\'') out.push_back('\'');
        out.push_back(c);
    }
    out.push_back('\'');
    return out;
}

void write_newick(const PhyloTree& t, NodeId id, double parent_height, std::string& out) {
    const auto& node = t.nodes[id];
    if (node.is_leaf()) {
        out += newick_label(t.labels[node.members.front()]);
    } else {
        out.push_back('(');
        write_newick(t, node.children->first, node.height, out);
        out.push_back(',');
        write_newick(t, node.children->second, node.height, out);
        out.push_back(')');
    }
    out.push_back(':');
    out += format_double(parent_height - node.height);
}

}  // namespace

std::string to_newick(const PhyloTree& t) {
    std::string out;
    if (t.nodes.empty()) return ";";
    // The root carries a zero-length branch only when it is a lone leaf.
    const auto& root = t.nodes[t.root];
    if (root.is_leaf()) {
        write_newick(t, t.root, 0.0, out);
    } else {
        out.push_back('(');
        write_newick(t, root.children->first, root.height, out);
        out.push_back(',');
        write_newick(t, root.children->second, root.height, out);
        out.push_back(')');
    }
    out.push_back(';');
    return out;
}

double rand_index(const Grouping& a, const Grouping& b) {
    std::unordered_map<std::string, std::size_t> ga, gb;
    for (std::size_t g = 0; g < a.groups.size(); ++g) {
        for (const auto& l : a.groups[g]) {
            if (!ga.emplace(l, g).second) throw InputError("label '" + l + "' appears twice in a grouping");
        }
    }
    for (std::size_t g = 0; g < b.groups.size(); ++g) {
        for (const auto& l : b.groups[g]) {
            if (!gb.emplace(l, g).second) throw InputError("label '" + l + "' appears twice in a grouping");
        }
    }
    if (ga.size() != gb.size()) throw InputError("groupings cover different label sets");
    std::vector<std::pair<std::size_t, std::size_t>> assign;
    assign.reserve(ga.size());
    for (const auto& [label, g] : ga) {
        auto it = gb.find(label);
        if (it == gb.end()) throw InputError("label '" + label + "' missing from second grouping");
        assign.emplace_back(g, it->second);
    }
    const std::size_t n = assign.size();
    if (n < 2) return 1.0;
    std::size_t agree = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            bool same_a = assign[i].first == assign[j].first;
            bool same_b = assign[i].second == assign[j].second;
            agree += same_a == same_b;
        }
    }
    return static_cast<double>(agree) / static_cast<double>(n * (n - 1) / 2);
}

}  // namespace malfam
