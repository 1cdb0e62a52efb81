#pragma once

/**
 * @file pcs.hpp
 * @brief Pairwise Classification Score: peer-voting evaluation of family labelings.
 *
 * Each engine labels n malwares with a family name or NULL (not detected).
 * For a pair (i, j) engine x says "same family" (+1), "different" (-1) or
 * abstains (0, when either label is NULL). Engine y approves x on a pair when
 * it makes the same non-zero call. The approval rate
 *
 *     P_x(y) = P(I_y = +1 | I_x = +1) + P(I_y = -1 | I_x = -1)
 *
 * lies in [0, 2], and
 *
 *     PCS_x = (1/m) · W_x · Σ_y P_x(y)
 *
 * where W_x is the fraction of malwares x detected and the sum runs over all
 * m engines including x itself. Only the partition each engine induces
 * matters, so engines with unrelated naming schemes can vote on each other.
 */

#include "malfam/phylo.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace malfam {

using FamilyLabel = std::optional<std::string>;

/// n malwares × m engines; labels[i][x] is engine x's family for malware i.
struct EngineLabelTable {
    std::vector<std::string> malware_ids;
    std::vector<std::string> engines;
    std::vector<std::vector<FamilyLabel>> labels;

    /// Unique ids and names, rectangular labels.
    void validate() const;
    std::size_t engine_index(std::string_view name) const;
    std::size_t malware_index(std::string_view id) const;
    std::vector<FamilyLabel> column(std::size_t engine) const;
    void add_engine(std::string name, std::vector<FamilyLabel> column);
};

/// Same/different/abstain calls of one engine over every unordered pair.
class PairIndicator {
public:
    PairIndicator() = default;
    explicit PairIndicator(std::size_t n) : n_(n), calls_(n < 2 ? 0 : n * (n - 1) / 2, 0) {}

    std::size_t size() const noexcept { return n_; }
    int at(std::size_t i, std::size_t j) const { return calls_[slot(i, j)]; }
    void set(std::size_t i, std::size_t j, int v) { calls_[slot(i, j)] = static_cast<std::int8_t>(v); }
    const std::vector<std::int8_t>& calls() const noexcept { return calls_; }

private:
    std::size_t slot(std::size_t i, std::size_t j) const {
        if (i > j) std::swap(i, j);
        // row-major upper triangle without the diagonal
        return i * (2 * n_ - i - 1) / 2 + (j - i - 1);
    }

    std::size_t n_ = 0;
    std::vector<std::int8_t> calls_;
};

/// One voting engine: its pairwise calls plus detection coverage.
struct Engine {
    std::string name;
    PairIndicator pairs;
    std::size_t detected = 0;

    double weight() const {
        return pairs.size() ? static_cast<double>(detected) / static_cast<double>(pairs.size()) : 0.0;
    }
};

Engine engine_from_labels(std::string name, std::span<const FamilyLabel> labels);
std::vector<Engine> engines_from_table(const EngineLabelTable& t);

/// +1 same family, 0 either undetected, -1 different families.
int indicator(const EngineLabelTable& t, std::string_view engine, std::string_view id_i, std::string_view id_j);

/// Fraction of malwares the engine detected.
double engine_weight(const EngineLabelTable& t, std::string_view engine);

/// P_x(y) in [0, 2]. A conditional whose condition never occurs contributes
/// 0; pairs where y abstains stay in the denominator.
double approval(const Engine& x, const Engine& y);
double approval(const EngineLabelTable& t, std::string_view x, std::string_view y);

double pcs_score(std::span<const Engine> engines, std::size_t x);
double pcs_score(const EngineLabelTable& t, std::string_view x);

struct PcsEntry {
    std::string engine;
    std::size_t detected = 0;
    double weight = 0.0;
    double pcs = 0.0;
};

/// Every engine's score, sorted by descending PCS then ascending name.
std::vector<PcsEntry> pcs_report(std::span<const Engine> engines);

/// Rules that reduce a detection string such as "Win32.Morstar.ba" to a family name.
struct FamilyNormalizer {
    std::set<std::string> stop_words{"win32", "win64", "w32", "variant", "troj_gen", "trojan", "generic", "heur"};

    /// Lowercased alphanumeric tokens with stop words removed. Stop words
    /// that contain separators (e.g. "troj_gen") are matched before splitting.
    std::vector<std::string> tokens(std::string_view text) const;
};

/// Longest remaining token (first on ties) after dropping stop words and
/// pure hex or numeric tokens; nullopt when nothing is left.
FamilyLabel normalize_family(std::string_view detection_string, const FamilyNormalizer& nz = {});

/// One family per group, named "g0", "g1", ... in group order.
std::map<std::string, std::string> grouping_to_labels(const Grouping& g);

/// Family column aligned to `malware_ids`; ids outside the grouping are NULL.
std::vector<FamilyLabel> grouping_to_labels(const Grouping& g, std::span<const std::string> malware_ids);

double cosine_similarity(const std::map<std::string, double>& a, const std::map<std::string, double>& b);

/// Bag-of-words engine over free-text descriptions: a pair is +1 when the
/// term-frequency cosine reaches `threshold`, -1 otherwise, and 0 when either
/// description has no tokens left after stop-word removal.
Engine text_mining_engine(std::span<const std::string> malware_ids,
                          const std::map<std::string, std::string>& descriptions, const FamilyNormalizer& nz,
                          double threshold = 0.7, std::string name = "Text_Mining");

}  // namespace malfam
