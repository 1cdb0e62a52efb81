#pragma once

// Random generators and brute-force reference implementations shared by the
// unit tests and the acceptance runner. The reference code deliberately
// avoids the library's data structures.

#include "malfam/pcs.hpp"
#include "malfam/phylo.hpp"
#include "malfam/profile.hpp"
#include "malfam/rng.hpp"
#include "malfam/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace testsupport {

using malfam::Xorshift64Star;

inline malfam::ElementSet random_set(Xorshift64Star& rng, std::size_t universe, std::size_t max_size) {
    std::set<std::string> s;
    const auto size = rng.below(max_size + 1);
    for (std::size_t i = 0; i < size; ++i) s.insert("e" + std::to_string(rng.below(universe)));
    return {s.begin(), s.end()};
}

inline std::vector<std::string> letter_labels(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(std::string(1, static_cast<char>('A' + i)));
    return out;
}

/// Random symmetric matrix; with `ties` the values come from a tiny grid so
/// equal minima are common.
inline malfam::DistanceMatrix random_matrix(Xorshift64Star& rng, std::size_t n, bool ties) {
    auto labels = letter_labels(n);
    // Shuffle so label order differs from index order.
    for (std::size_t i = n; i > 1; --i) std::swap(labels[i - 1], labels[rng.below(i)]);
    malfam::DistanceMatrix d(labels);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            d.set(i, j, ties ? static_cast<double>(rng.below(5)) / 4.0 : rng.unit());
        }
    }
    return d;
}

inline std::string random_text(Xorshift64Star& rng, std::size_t max_len) {
    static const std::string alphabet = "abcXYZ019 _-.\\/:&<>\"'%|=;~";
    std::string s;
    const auto len = rng.below(max_len + 1);
    for (std::size_t i = 0; i < len; ++i) s.push_back(alphabet[rng.below(alphabet.size())]);
    return s;
}

inline malfam::Profile random_profile(Xorshift64Star& rng, std::size_t max_events) {
    static const std::vector<std::string> apis{"CreateFile", "WriteFile", "RegSetValue", "LoadLibrary", "WinExec"};
    static const std::vector<std::string> keys{"hName", "lpFileName", "hKey", "desiredAccess", "data", "type"};
    malfam::Profile p;
    p.hash = "h" + std::to_string(rng.next());
    p.process_id = 1 + rng.below(100000);
    p.duration_seconds = 1 + rng.below(1000);
    if (rng.chance(0.3)) p.parent_hash = "p" + std::to_string(rng.next());
    std::uint64_t clock = rng.below(1000);
    const auto count = rng.below(max_events + 1);
    for (std::size_t i = 0; i < count; ++i) {
        malfam::ApiEvent e;
        e.api_name = apis[rng.below(apis.size())];
        std::set<std::string> used;
        const auto attrs = rng.below(4);
        for (std::size_t k = 0; k < attrs; ++k) {
            const auto& key = keys[rng.below(keys.size())];
            if (!used.insert(key).second) continue;
            e.attributes.emplace_back(key, random_text(rng, 12));
        }
        if (rng.chance(0.8)) e.return_value = rng.chance(0.5) ? "SUCCESS" : random_text(rng, 6);
        clock += rng.below(3);
        e.timestamp = clock;
        p.events.push_back(std::move(e));
    }
    return p;
}

inline malfam::EngineLabelTable random_table(Xorshift64Star& rng, std::size_t n, std::size_t m, double null_rate) {
    malfam::EngineLabelTable t;
    for (std::size_t i = 0; i < n; ++i) t.malware_ids.push_back("m" + std::to_string(i));
    for (std::size_t e = 0; e < m; ++e) t.engines.push_back("E" + std::to_string(e));
    t.labels.assign(n, std::vector<malfam::FamilyLabel>(m));
    for (std::size_t e = 0; e < m; ++e) {
        const auto alphabet = 1 + rng.below(4);
        for (std::size_t i = 0; i < n; ++i) {
            if (!rng.chance(null_rate)) t.labels[i][e] = "fam" + std::to_string(rng.below(alphabet));
        }
    }
    return t;
}

// ---- UPGMA oracle -----------------------------------------------------------

/// Canonical tree description: nested "(left,right)" with children ordered by
/// smallest member label, plus heights in the same pre-order.
struct TreeShape {
    std::string topology;
    std::vector<double> heights;
};

/// Re-scans every pair of current clusters from scratch at each merge.
/// Clusters are identified by their sorted member label sets.
inline TreeShape naive_upgma(const malfam::DistanceMatrix& d, bool weighted = false) {
    struct Cluster {
        std::set<std::string> members;
        std::string shape;
        double height = 0.0;
        std::vector<double> heights;  // pre-order of internal nodes
    };
    std::vector<Cluster> clusters;
    std::map<std::pair<std::string, std::string>, double> dist;  // keyed by leads
    const auto& labels = d.labels();
    for (std::size_t i = 0; i < labels.size(); ++i) clusters.push_back({{labels[i]}, labels[i], 0.0, {}});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t j = 0; j < labels.size(); ++j) dist[{labels[i], labels[j]}] = d.at(i, j);
    }
    auto lead = [](const Cluster& c) { return *c.members.begin(); };

    while (clusters.size() > 1) {
        double best = 2.0;
        std::pair<std::string, std::string> best_key;
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < clusters.size(); ++i) {
            for (std::size_t j = 0; j < clusters.size(); ++j) {
                if (i == j) continue;
                auto li = lead(clusters[i]), lj = lead(clusters[j]);
                if (li > lj) continue;
                double v = dist.at({li, lj});
                if (v < best || (v == best && std::pair{li, lj} < best_key)) {
                    best = v;
                    best_key = {li, lj};
                    bi = i;
                    bj = j;
                }
            }
        }
        Cluster& a = clusters[bi];  // smaller lead
        Cluster& b = clusters[bj];
        Cluster merged;
        merged.members = a.members;
        merged.members.insert(b.members.begin(), b.members.end());
        merged.shape = "(" + a.shape + "," + b.shape + ")";
        merged.height = best;
        merged.heights.push_back(best);
        merged.heights.insert(merged.heights.end(), a.heights.begin(), a.heights.end());
        merged.heights.insert(merged.heights.end(), b.heights.begin(), b.heights.end());
        const std::string la = lead(a), lb = lead(b), lm = lead(merged);
        const double na = static_cast<double>(a.members.size()), nb = static_cast<double>(b.members.size());
        std::map<std::string, double> row;
        for (const auto& c : clusters) {
            const std::string lc = lead(c);
            if (lc == la || lc == lb) continue;
            const double da = dist.at({la, lc}), db = dist.at({lb, lc});
            double v = weighted ? (na * da + nb * db) / (na + nb) : (da + db) / 2.0;
            if (weighted) v = std::clamp(v, std::min(da, db), std::max(da, db));
            row[lc] = v;
        }
        for (const auto& [lc, v] : row) {
            dist[{lm, lc}] = v;
            dist[{lc, lm}] = v;
        }
        const std::size_t hi = std::max(bi, bj), lo = std::min(bi, bj);
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(hi));
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(lo));
        clusters.push_back(std::move(merged));
    }
    return {clusters[0].shape, clusters[0].heights};
}

inline std::string smallest_label(const malfam::PhyloTree& t, malfam::NodeId id) {
    std::string best;
    for (auto leaf : t.nodes[id].members) {
        if (best.empty() || t.labels[leaf] < best) best = t.labels[leaf];
    }
    return best;
}

inline void describe(const malfam::PhyloTree& t, malfam::NodeId id, TreeShape& out) {
    const auto& node = t.nodes[id];
    if (node.is_leaf()) {
        out.topology += t.labels[node.members[0]];
        return;
    }
    auto [l, r] = *node.children;
    if (smallest_label(t, r) < smallest_label(t, l)) std::swap(l, r);
    out.heights.push_back(node.height);
    out.topology += "(";
    describe(t, l, out);
    out.topology += ",";
    describe(t, r, out);
    out.topology += ")";
}

inline TreeShape shape_of(const malfam::PhyloTree& t) {
    TreeShape s;
    describe(t, t.root, s);
    return s;
}

// ---- PCS oracle -------------------------------------------------------------

/// Direct enumeration over all unordered pairs with explicit conditional
/// counts, straight from the label strings.
inline double naive_pcs(const malfam::EngineLabelTable& t, std::size_t x) {
    const std::size_t n = t.malware_ids.size(), m = t.engines.size();
    auto call = [&](std::size_t e, std::size_t i, std::size_t j) {
        const auto& a = t.labels[i][e];
        const auto& b = t.labels[j][e];
        if (!a || !b) return 0;
        return *a == *b ? 1 : -1;
    };
    double detected = 0;
    for (std::size_t i = 0; i < n; ++i) detected += t.labels[i][x] ? 1 : 0;
    double sum = 0.0;
    for (std::size_t y = 0; y < m; ++y) {
        double pos = 0, pos_agree = 0, neg = 0, neg_agree = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const int cx = call(x, i, j), cy = call(y, i, j);
                if (cx == 1) {
                    ++pos;
                    if (cy == 1) ++pos_agree;
                } else if (cx == -1) {
                    ++neg;
                    if (cy == -1) ++neg_agree;
                }
            }
        }
        sum += (pos > 0 ? pos_agree / pos : 0.0) + (neg > 0 ? neg_agree / neg : 0.0);
    }
    return (detected / static_cast<double>(n)) * sum / static_cast<double>(m);
}

/// Applies a random bijection to one engine's label alphabet.
inline void rename_labels(malfam::EngineLabelTable& t, std::size_t engine, Xorshift64Star& rng) {
    std::vector<std::string> alphabet;
    for (const auto& row : t.labels) {
        if (row[engine] && std::find(alphabet.begin(), alphabet.end(), *row[engine]) == alphabet.end()) {
            alphabet.push_back(*row[engine]);
        }
    }
    std::vector<std::string> image;
    for (std::size_t i = 0; i < alphabet.size(); ++i) image.push_back("r" + std::to_string(rng.next() % 1000) + "_" + std::to_string(i));
    for (std::size_t i = image.size(); i > 1; --i) std::swap(image[i - 1], image[rng.below(i)]);
    for (auto& row : t.labels) {
        if (!row[engine]) continue;
        auto k = static_cast<std::size_t>(std::find(alphabet.begin(), alphabet.end(), *row[engine]) - alphabet.begin());
        row[engine] = image[k];
    }
}

}  // namespace testsupport
