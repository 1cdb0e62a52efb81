#include "malfam/pcs.hpp"

#include "malfam/error.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace malfam {

void EngineLabelTable::validate() const {
    std::unordered_set<std::string_view> seen;
    for (const auto& id : malware_ids) {
        if (!seen.insert(id).second) throw InputError("duplicate malware id '" + id + "'");
    }
    seen.clear();
    for (const auto& e : engines) {
        if (!seen.insert(e).second) throw InputError("duplicate engine '" + e + "'");
    }
    if (labels.size() != malware_ids.size()) throw InputError("label rows do not match malware count");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i].size() != engines.size()) {
            throw InputError("label row for '" + malware_ids[i] + "' has " + std::to_string(labels[i].size()) +
                             " cells, expected " + std::to_string(engines.size()));
        }
    }
}

std::size_t EngineLabelTable::engine_index(std::string_view name) const {
    auto it = std::find(engines.begin(), engines.end(), name);
    if (it == engines.end()) throw InputError("unknown engine '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - engines.begin());
}

std::size_t EngineLabelTable::malware_index(std::string_view id) const {
    auto it = std::find(malware_ids.begin(), malware_ids.end(), id);
    if (it == malware_ids.end()) throw InputError("unknown malware id '" + std::string(id) + "'");
    return static_cast<std::size_t>(it - malware_ids.begin());
}

std::vector<FamilyLabel> EngineLabelTable::column(std::size_t engine) const {
    std::vector<FamilyLabel> out;
    out.reserve(labels.size());
    for (const auto& row : labels) out.push_back(row.at(engine));
    return out;
}

void EngineLabelTable::add_engine(std::string name, std::vector<FamilyLabel> column) {
    if (column.size() != malware_ids.size()) throw InputError("engine column length does not match malware count");
    if (std::find(engines.begin(), engines.end(), name) != engines.end()) {
        throw InputError("engine '" + name + "' already present");
    }
    engines.push_back(std::move(name));
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i].push_back(std::move(column[i]));
}

Engine engine_from_labels(std::string name, std::span<const FamilyLabel> labels) {
    Engine e;
    e.name = std::move(name);
    e.pairs = PairIndicator(labels.size());
    e.detected = static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](auto& l) { return l.has_value(); }));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t j = i + 1; j < labels.size(); ++j) {
            if (!labels[i] || !labels[j]) continue;
            e.pairs.set(i, j, *labels[i] == *labels[j] ? 1 : -1);
        }
    }
    return e;
}

std::vector<Engine> engines_from_table(const EngineLabelTable& t) {
    t.validate();
    std::vector<Engine> out;
    out.reserve(t.engines.size());
    for (std::size_t x = 0; x < t.engines.size(); ++x) out.push_back(engine_from_labels(t.engines[x], t.column(x)));
    return out;
}

int indicator(const EngineLabelTable& t, std::string_view engine, std::string_view id_i, std::string_view id_j) {
    const auto x = t.engine_index(engine);
    const auto i = t.malware_index(id_i);
    const auto j = t.malware_index(id_j);
    if (i == j) throw InputError("indicator needs two distinct malwares");
    const auto& a = t.labels.at(i).at(x);
    const auto& b = t.labels.at(j).at(x);
    if (!a || !b) return 0;
    return *a == *b ? 1 : -1;
}

double engine_weight(const EngineLabelTable& t, std::string_view engine) {
    const auto x = t.engine_index(engine);
    if (t.malware_ids.empty()) throw InputError("engine weight needs at least one malware");
    std::size_t detected = 0;
    for (const auto& row : t.labels) detected += row.at(x).has_value();
    return static_cast<double>(detected) / static_cast<double>(t.malware_ids.size());
}

double approval(const Engine& x, const Engine& y) {
    if (x.pairs.size() != y.pairs.size()) throw InputError("engines '" + x.name + "' and '" + y.name +
                                                           "' label different malware sets");
    if (x.pairs.size() < 2) throw InputError("approval needs at least two malwares");
    std::size_t same = 0, same_agree = 0, diff = 0, diff_agree = 0;
    const auto& cx = x.pairs.calls();
    const auto& cy = y.pairs.calls();
    for (std::size_t k = 0; k < cx.size(); ++k) {
        if (cx[k] == 1) {
            ++same;
            same_agree += cy[k] == 1;
        } else if (cx[k] == -1) {
            ++diff;
            diff_agree += cy[k] == -1;
        }
    }
    double p = 0.0;
    if (same) p += static_cast<double>(same_agree) / static_cast<double>(same);
    if (diff) p += static_cast<double>(diff_agree) / static_cast<double>(diff);
    return p;
}

double approval(const EngineLabelTable& t, std::string_view x, std::string_view y) {
    const auto xi = t.engine_index(x);
    const auto yi = t.engine_index(y);
    return approval(engine_from_labels(t.engines[xi], t.column(xi)), engine_from_labels(t.engines[yi], t.column(yi)));
}

double pcs_score(std::span<const Engine> engines, std::size_t x) {
    if (engines.empty()) throw InputError("PCS needs at least one engine");
    if (x >= engines.size()) throw InputError("engine index out of range");
    double sum = 0.0;
    for (const auto& y : engines) sum += approval(engines[x], y);
    return engines[x].weight() * sum / static_cast<double>(engines.size());
}

double pcs_score(const EngineLabelTable& t, std::string_view x) {
    const auto engines = engines_from_table(t);
    return pcs_score(engines, t.engine_index(x));
}

std::vector<PcsEntry> pcs_report(std::span<const Engine> engines) {
    std::vector<PcsEntry> out;
    out.reserve(engines.size());
    for (std::size_t x = 0; x < engines.size(); ++x) {
        out.push_back({engines[x].name, engines[x].detected, engines[x].weight(), pcs_score(engines, x)});
    }
    std::stable_sort(out.begin(), out.end(), [](const PcsEntry& a, const PcsEntry& b) {
        if (a.pcs != b.pcs) return a.pcs > b.pcs;
        return a.engine < b.engine;
    });
    return out;
}

namespace {

bool is_alnum(char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

bool all_of_class(const std::string& s, bool hex) {
    return std::all_of(s.begin(), s.end(), [&](char c) {
        return (c >= '0' && c <= '9') || (hex && c >= 'a' && c <= 'f');
    });
}

}  // namespace

std::vector<std::string> FamilyNormalizer::tokens(std::string_view text) const {
    std::string lowered(text);
    for (char& c : lowered) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    // Blank out separator-containing stop phrases where they stand as whole words.
    for (const auto& stop : stop_words) {
        if (std::all_of(stop.begin(), stop.end(), is_alnum)) continue;
        for (auto pos = lowered.find(stop); pos != std::string::npos; pos = lowered.find(stop, pos + 1)) {
            bool left_ok = pos == 0 || !is_alnum(lowered[pos - 1]);
            bool right_ok = pos + stop.size() == lowered.size() || !is_alnum(lowered[pos + stop.size()]);
            if (left_ok && right_ok) std::fill_n(lowered.begin() + static_cast<std::ptrdiff_t>(pos), stop.size(), ' ');
        }
    }
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty() && !stop_words.contains(cur)) out.push_back(cur);
        cur.clear();
    };
    for (char c : lowered) {
        if (is_alnum(c)) {
            cur.push_back(c);
        } else {
            flush();
        }
    }
    flush();
    return out;
}

FamilyLabel normalize_family(std::string_view detection_string, const FamilyNormalizer& nz) {
    std::optional<std::string> best;
    for (auto& tok : nz.tokens(detection_string)) {
        if (all_of_class(tok, true)) continue;  // pure hex, which includes pure numeric
        if (!best || tok.size() > best->size()) best = std::move(tok);
    }
    return best;
}

std::map<std::string, std::string> grouping_to_labels(const Grouping& g) {
    std::map<std::string, std::string> out;
    for (std::size_t k = 0; k < g.groups.size(); ++k) {
        for (const auto& label : g.groups[k]) {
            if (!out.emplace(label, "g" + std::to_string(k)).second) {
                throw InputError("label '" + label + "' appears in more than one group");
            }
        }
    }
    return out;
}

std::vector<FamilyLabel> grouping_to_labels(const Grouping& g, std::span<const std::string> malware_ids) {
    const auto families = grouping_to_labels(g);
    std::vector<FamilyLabel> out;
    out.reserve(malware_ids.size());
    for (const auto& id : malware_ids) {
        auto it = families.find(id);
        out.push_back(it == families.end() ? FamilyLabel{} : FamilyLabel{it->second});
    }
    return out;
}

double cosine_similarity(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [k, v] : a) {
        na += v * v;
        if (auto it = b.find(k); it != b.end()) dot += v * it->second;
    }
    for (const auto& [k, v] : b) nb += v * v;
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

Engine text_mining_engine(std::span<const std::string> malware_ids,
                          const std::map<std::string, std::string>& descriptions, const FamilyNormalizer& nz,
                          double threshold, std::string name) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw InputError("text-mining threshold must lie in [0, 1]");
    const std::size_t n = malware_ids.size();
    std::vector<std::map<std::string, double>> vectors(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto it = descriptions.find(malware_ids[i]);
        if (it == descriptions.end()) continue;
        for (const auto& tok : nz.tokens(it->second)) {
            if (all_of_class(tok, false)) continue;  // bare numbers carry no family signal
            vectors[i][tok] += 1.0;
        }
    }
    Engine e;
    e.name = std::move(name);
    e.pairs = PairIndicator(n);
    for (const auto& v : vectors) e.detected += !v.empty();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (vectors[i].empty() || vectors[j].empty()) continue;
            e.pairs.set(i, j, cosine_similarity(vectors[i], vectors[j]) >= threshold ? 1 : -1);
        }
    }
    return e;
}

}  // namespace malfam
