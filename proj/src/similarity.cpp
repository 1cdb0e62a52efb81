#include "malfam/similarity.hpp"

#include "malfam/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace malfam {

namespace {

template <typename T>
double sorted_jaccard(std::span<const T> x, std::span<const T> y) {
    std::size_t common = 0;
    auto a = x.begin();
    auto b = y.begin();
    while (a != x.end() && b != y.end()) {
        if (*a < *b) {
            ++a;
        } else if (*b < *a) {
            ++b;
        } else {
            ++common;
            ++a;
            ++b;
        }
    }
    std::size_t united = x.size() + y.size() - common;
    if (united == 0) return 0.0;
    return 1.0 - static_cast<double>(common) / static_cast<double>(united);
}

}  // namespace

double jaccard_distance(const ElementSet& x, const ElementSet& y) {
    return sorted_jaccard<BehaviorElement>(x, y);
}

double jaccard_distance(std::span<const std::uint32_t> x, std::span<const std::uint32_t> y) {
    return sorted_jaccard<std::uint32_t>(x, y);
}

DistanceMatrix::DistanceMatrix(std::vector<std::string> labels)
    : labels_(std::move(labels)), cells_(labels_.size() * labels_.size(), 0.0) {}

void DistanceMatrix::set(std::size_t i, std::size_t j, double d) {
    cells_[i * size() + j] = d;
    cells_[j * size() + i] = d;
}

void DistanceMatrix::validate() const {
    const std::size_t n = size();
    if (cells_.size() != n * n) throw InputError("distance matrix is not square");
    std::unordered_set<std::string_view> seen;
    for (const auto& l : labels_) {
        if (!seen.insert(l).second) throw InputError("duplicate label '" + l + "' in distance matrix");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (at(i, i) != 0.0) throw InputError("non-zero diagonal at '" + labels_[i] + "'");
        for (std::size_t j = i + 1; j < n; ++j) {
            double d = at(i, j);
            if (!std::isfinite(d) || d < 0.0 || d > 1.0) {
                throw InputError("distance out of [0,1] between '" + labels_[i] + "' and '" + labels_[j] + "'");
            }
            if (d != at(j, i)) {
                throw InputError("asymmetric distance between '" + labels_[i] + "' and '" + labels_[j] + "'");
            }
        }
    }
}

DistanceMatrix distance_matrix(std::span<const std::string> labels, std::span<const ElementSet> sets,
                               unsigned threads) {
    if (labels.size() != sets.size()) throw InputError("label count does not match set count");
    if (labels.empty()) throw InputError("distance matrix needs at least one profile");
    {
        std::unordered_set<std::string_view> seen;
        for (const auto& l : labels) {
            if (!seen.insert(l).second) throw InputError("duplicate profile identifier '" + l + "'");
        }
    }

    // Intern tokens so the pair loop compares integers instead of strings.
    // Ids are assigned in lexicographic token order, which keeps each
    // interned set sorted when the source set is sorted.
    std::vector<std::string_view> vocab;
    for (const auto& s : sets) vocab.insert(vocab.end(), s.begin(), s.end());
    std::sort(vocab.begin(), vocab.end());
    vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
    std::unordered_map<std::string_view, std::uint32_t> ids;
    ids.reserve(vocab.size());
    for (std::size_t i = 0; i < vocab.size(); ++i) ids.emplace(vocab[i], static_cast<std::uint32_t>(i));

    std::vector<std::vector<std::uint32_t>> interned(sets.size());
    for (std::size_t i = 0; i < sets.size(); ++i) {
        auto& out = interned[i];
        out.reserve(sets[i].size());
        for (const auto& tok : sets[i]) out.push_back(ids.at(tok));
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
    }

    DistanceMatrix d(std::vector<std::string>(labels.begin(), labels.end()));
    const std::size_t n = labels.size();
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));

    // Each worker owns the rows i ≡ w (mod threads); every cell is written once.
    auto work = [&](unsigned w) {
        for (std::size_t i = w; i < n; i += threads) {
            for (std::size_t j = i + 1; j < n; ++j) d.set(i, j, jaccard_distance(interned[i], interned[j]));
        }
    };
    if (threads <= 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    }
    return d;
}

DistanceMatrix distance_matrix(std::span<const Profile> profiles, const FeatureConfig& cfg, unsigned threads) {
    std::vector<std::string> labels;
    std::vector<ElementSet> sets;
    labels.reserve(profiles.size());
    sets.reserve(profiles.size());
    for (const auto& p : profiles) {
        labels.push_back(p.hash);
        sets.push_back(extract_elements(p, cfg));
    }
    return distance_matrix(labels, sets, threads);
}

std::string csv_field(std::string_view raw) {
    if (raw.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(raw);
    std::string out = "\"";
    for (char c : raw) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    std::size_t line = 1, col = 1;
    std::size_t i = 0;
    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
        row.clear();
    };
    while (i < text.size()) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                    ++col;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
                if (c == '\n') {
                    ++line;
                    col = 0;
                }
            }
        } else if (c == '"') {
            if (field_started) throw ParseError("stray quote in CSV field", line, col);
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_row();
            ++line;
            col = 0;
        } else {
            field.push_back(c);
            field_started = true;
        }
        ++i;
        ++col;
    }
    if (quoted) throw ParseError("unterminated quoted CSV field", line, col);
    if (field_started || !row.empty()) end_row();
    return rows;
}

void write_matrix_csv(std::ostream& os, const DistanceMatrix& d) {
    for (const auto& l : d.labels()) os << ',' << csv_field(l);
    os << '\n';
    char buf[32];
    for (std::size_t i = 0; i < d.size(); ++i) {
        os << csv_field(d.labels()[i]);
        for (std::size_t j = 0; j < d.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%.9f", d.at(i, j));
            os << ',' << buf;
        }
        os << '\n';
    }
}

DistanceMatrix read_matrix_csv(std::string_view text) {
    auto rows = parse_csv(text);
    if (rows.empty()) throw InputError("empty matrix CSV");
    const auto& header = rows[0];
    if (header.size() < 2) throw InputError("matrix CSV header has no labels");
    std::vector<std::string> labels(header.begin() + 1, header.end());
    const std::size_t n = labels.size();
    if (rows.size() != n + 1) throw InputError("matrix CSV has " + std::to_string(rows.size() - 1) + " rows for " +
                                               std::to_string(n) + " labels");
    DistanceMatrix d(labels);
    std::vector<double> cells(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = rows[i + 1];
        if (row.size() != n + 1) throw InputError("matrix CSV row " + std::to_string(i + 2) + " has wrong width");
        if (row[0] != labels[i]) throw InputError("matrix CSV row label '" + row[0] + "' does not match header");
        for (std::size_t j = 0; j < n; ++j) {
            const auto& cell = row[j + 1];
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
                throw InputError("matrix CSV cell '" + cell + "' is not a number (row " + std::to_string(i + 2) + ")");
            }
            cells[i * n + j] = v;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) {
                if (cells[i * n + j] != 0.0) throw InputError("non-zero diagonal at '" + labels[i] + "'");
            } else if (cells[i * n + j] != cells[j * n + i]) {
                throw InputError("asymmetric distance between '" + labels[i] + "' and '" + labels[j] + "'");
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) d.set(i, j, cells[i * n + j]);
    }
    d.validate();
    return d;
}

}  // namespace malfam
