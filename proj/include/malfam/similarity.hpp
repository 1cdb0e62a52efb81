#pragma once

#include "malfam/profile.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace malfam {

/// Jaccard distance 1 - |x ∩ y| / |x ∪ y| over sorted, duplicate-free sets.
/// Two empty sets are treated as identical (distance 0).
double jaccard_distance(const ElementSet& x, const ElementSet& y);

/// Same, over interned token ids (sorted ascending, no duplicates).
double jaccard_distance(std::span<const std::uint32_t> x, std::span<const std::uint32_t> y);

/// Symmetric n×n matrix of distances in [0, 1] with a zero diagonal.
class DistanceMatrix {
public:
    DistanceMatrix() = default;
    explicit DistanceMatrix(std::vector<std::string> labels);

    std::size_t size() const noexcept { return labels_.size(); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    double at(std::size_t i, std::size_t j) const { return cells_[i * size() + j]; }
    /// Writes both (i, j) and (j, i).
    void set(std::size_t i, std::size_t j, double d);

    /// Throws InputError unless the matrix is square, symmetric, has a zero
    /// diagonal, finite entries in [0, 1] and unique labels.
    void validate() const;

    bool operator==(const DistanceMatrix&) const = default;

private:
    std::vector<std::string> labels_;
    std::vector<double> cells_;
};

/// Pairwise distances between labelled element sets. Labels must be unique.
/// `threads` = 0 uses the hardware concurrency; results never depend on it.
DistanceMatrix distance_matrix(std::span<const std::string> labels, std::span<const ElementSet> sets,
                               unsigned threads = 0);

/// Profiles are identified by their hash.
DistanceMatrix distance_matrix(std::span<const Profile> profiles, const FeatureConfig& cfg, unsigned threads = 0);

/// CSV with a header row (empty corner cell, then labels) and one row per
/// profile: label followed by distances printed with 9 decimal digits.
void write_matrix_csv(std::ostream& os, const DistanceMatrix& d);
DistanceMatrix read_matrix_csv(std::string_view text);

/// Minimal RFC 4180 reader shared by the CSV formats of this library.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string csv_field(std::string_view raw);

}  // namespace malfam
