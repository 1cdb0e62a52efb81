#include "malfam/io.hpp"

#include "malfam/error.hpp"
#include "malfam/similarity.hpp"
#include "malfam/xml.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace malfam {

namespace fs = std::filesystem;

namespace {

const json& require(const json& j, const char* key) {
    if (!j.is_object()) throw SchemaError(key, "expected a JSON object around it");
    auto it = j.find(key);
    if (it == j.end()) throw SchemaError(key, "missing");
    return *it;
}

template <typename T>
T get_as(const json& j, const char* key) {
    try {
        return require(j, key).get<T>();
    } catch (const json::exception& e) {
        throw SchemaError(key, std::string("wrong type: ") + e.what());
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return get_as<T>(j, key);
}

ElementSet string_list(const json& j, const char* key) {
    auto v = get_as<std::vector<std::string>>(j, key);
    normalize_set(v);
    return v;
}

}  // namespace

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw InputError("failed writing '" + path.string() + "'");
}

std::vector<LabelledProfile> load_corpus(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw InputError("'" + dir.string() + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".xml") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw InputError("no *.xml profiles in '" + dir.string() + "'");
    std::vector<LabelledProfile> out;
    out.reserve(files.size());
    for (const auto& f : files) {
        try {
            out.push_back({f.stem().string(), parse_profile(read_file(f))});
        } catch (const Error& e) {
            throw InputError(f.string() + ": " + e.what());
        }
    }
    return out;
}

void write_corpus(const fs::path& dir, const Corpus& corpus) {
    fs::create_directories(dir);
    for (const auto& gp : corpus.profiles) write_file(dir / (gp.label + ".xml"), serialize_profile(gp.profile));
    json truth = to_json(corpus.truth);
    truth["families"] = corpus.family_names;
    write_file(dir / "truth.json", truth.dump(2) + "\n");
}

json to_json(const FeatureConfig& cfg) {
    return {{"with_params", cfg.with_params},
            {"ngram", cfg.ngram_n},
            {"normalize_paths", cfg.normalize_paths},
            {"include_return", cfg.include_return}};
}

FeatureConfig feature_config_from_json(const json& j, FeatureConfig base) {
    base.with_params = get_or(j, "with_params", base.with_params);
    base.ngram_n = get_or(j, "ngram", base.ngram_n);
    base.normalize_paths = get_or(j, "normalize_paths", base.normalize_paths);
    base.include_return = get_or(j, "include_return", base.include_return);
    base.validate();
    return base;
}

json to_json(const Grouping& g) {
    json j;
    j["threshold"] = g.threshold ? json(*g.threshold) : json(nullptr);
    j["groups"] = g.groups;
    return j;
}

Grouping grouping_from_json(const json& j) {
    Grouping g;
    const auto& t = require(j, "threshold");
    if (!t.is_null()) {
        if (!t.is_number()) throw SchemaError("threshold", "expected a number or null");
        g.threshold = t.get<double>();
    }
    g.groups = get_as<std::vector<std::vector<std::string>>>(j, "groups");
    return g;
}

json characteristics_report(const std::vector<GroupCharacteristics>& chars, const FeatureConfig& features,
                            const EnduranceConfig& endurance, double threshold) {
    json groups = json::array();
    for (const auto& g : chars) {
        std::vector<std::string> sample(g.distinct.begin(),
                                        g.distinct.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(5, g.distinct.size())));
        groups.push_back({{"id", g.group_id},
                          {"size", g.size()},
                          {"members", g.members},
                          {"common_count", g.common.size()},
                          {"distinct_count", g.distinct.size()},
                          {"sample", sample},
                          {"distinct", g.distinct}});
    }
    return {{"threshold", threshold},
            {"alpha", endurance.alpha},
            {"features", to_json(features)},
            {"groups", groups}};
}

CharacteristicsFile characteristics_from_json(const json& j) {
    CharacteristicsFile out;
    out.features = feature_config_from_json(require(j, "features"));
    const auto& groups = require(j, "groups");
    if (!groups.is_array()) throw SchemaError("groups", "expected an array");
    for (const auto& g : groups) {
        GroupCharacteristics gc;
        gc.group_id = get_as<std::size_t>(g, "id");
        gc.members = get_or<std::vector<std::string>>(g, "members", {});
        gc.distinct = string_list(g, "distinct");
        out.groups.push_back(std::move(gc));
    }
    std::sort(out.groups.begin(), out.groups.end(),
              [](const auto& a, const auto& b) { return a.group_id < b.group_id; });
    return out;
}

EngineLabelTable label_table_from_json(const json& j) {
    EngineLabelTable t;
    t.malware_ids = get_as<std::vector<std::string>>(j, "malwares");
    t.engines = get_as<std::vector<std::string>>(j, "engines");
    const auto& rows = require(j, "labels");
    if (!rows.is_array()) throw SchemaError("labels", "expected an array of rows");
    for (const auto& row : rows) {
        if (!row.is_array()) throw SchemaError("labels", "expected each row to be an array");
        std::vector<FamilyLabel> cells;
        for (const auto& cell : row) {
            if (cell.is_null()) {
                cells.emplace_back();
            } else if (cell.is_string()) {
                cells.emplace_back(cell.get<std::string>());
            } else {
                throw SchemaError("labels", "cells must be strings or null");
            }
        }
        t.labels.push_back(std::move(cells));
    }
    t.validate();
    return t;
}

EngineLabelTable label_table_from_csv(std::string_view text) {
    auto rows = parse_csv(text);
    if (rows.empty() || rows[0].size() < 2) throw InputError("label CSV needs a header with at least one engine");
    EngineLabelTable t;
    t.engines.assign(rows[0].begin() + 1, rows[0].end());
    for (std::size_t r = 1; r < rows.size(); ++r) {
        auto& row = rows[r];
        if (row.size() != t.engines.size() + 1) {
            throw InputError("label CSV row " + std::to_string(r + 1) + " has " + std::to_string(row.size()) +
                             " fields, expected " + std::to_string(t.engines.size() + 1));
        }
        t.malware_ids.push_back(row[0]);
        std::vector<FamilyLabel> cells;
        for (std::size_t c = 1; c < row.size(); ++c) {
            cells.push_back(row[c].empty() ? FamilyLabel{} : FamilyLabel{row[c]});
        }
        t.labels.push_back(std::move(cells));
    }
    t.validate();
    return t;
}

EngineLabelTable load_label_table(const fs::path& path) {
    const std::string text = read_file(path);
    if (path.extension() == ".csv") return label_table_from_csv(text);
    try {
        return label_table_from_json(json::parse(text));
    } catch (const json::parse_error& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

json to_json(const EngineLabelTable& t) {
    json rows = json::array();
    for (const auto& row : t.labels) {
        json r = json::array();
        for (const auto& cell : row) r.push_back(cell ? json(*cell) : json(nullptr));
        rows.push_back(std::move(r));
    }
    return {{"malwares", t.malware_ids}, {"engines", t.engines}, {"labels", rows}};
}

json to_json(const std::vector<PcsEntry>& report) {
    json out = json::array();
    for (const auto& e : report) {
        out.push_back({{"engine", e.engine}, {"detected", e.detected}, {"weight", e.weight}, {"pcs", e.pcs}});
    }
    return out;
}

json to_json(const FamilyTemplate& tpl) {
    json events = json::array();
    for (const auto& e : tpl.base_events) {
        json attrs = json::array();
        for (const auto& [k, v] : e.attributes) attrs.push_back({k, v});
        json ev = {{"api", e.api_name}, {"attributes", attrs}};
        if (e.return_value) ev["return"] = *e.return_value;
        events.push_back(std::move(ev));
    }
    std::vector<std::string> ops;
    for (auto m : tpl.mutation_ops) ops.emplace_back(to_string(m));
    return {{"name", tpl.name}, {"base_events", events}, {"mutations", ops}, {"param_pools", tpl.param_pools}};
}

FamilyTemplate family_template_from_json(const json& j) {
    FamilyTemplate tpl;
    tpl.name = get_as<std::string>(j, "name");
    const auto& events = require(j, "base_events");
    if (!events.is_array()) throw SchemaError("base_events", "expected an array");
    for (const auto& e : events) {
        EventPattern p;
        p.api_name = get_as<std::string>(e, "api");
        if (!xml::is_name(p.api_name)) throw SchemaError("api", "'" + p.api_name + "' is not a valid element name");
        for (const auto& kv : get_or<std::vector<std::vector<std::string>>>(e, "attributes", {})) {
            if (kv.size() != 2) throw SchemaError("attributes", "expected [key, value] pairs");
            if (!xml::is_name(kv[0]) || kv[0] == "Return" || kv[0] == "Time") {
                throw SchemaError("attributes", "'" + kv[0] + "' is not a usable attribute name");
            }
            p.attributes.emplace_back(kv[0], kv[1]);
        }
        if (e.contains("return")) p.return_value = get_as<std::string>(e, "return");
        tpl.base_events.push_back(std::move(p));
    }
    if (j.contains("mutations")) {
        tpl.mutation_ops.clear();
        for (const auto& m : get_as<std::vector<std::string>>(j, "mutations")) tpl.mutation_ops.insert(mutation_from_string(m));
    }
    tpl.param_pools = get_or<std::map<std::string, std::vector<std::string>>>(j, "param_pools", {});
    tpl.validate();
    return tpl;
}

CorpusSpec corpus_spec_from_json(const json& j) {
    CorpusSpec spec;
    spec.seed = get_or<std::uint64_t>(j, "seed", spec.seed);
    spec.mutation_rate = get_or(j, "mutation_rate", spec.mutation_rate);
    const auto& families = require(j, "families");
    if (!families.is_array()) throw SchemaError("families", "expected an array");
    for (const auto& f : families) {
        CorpusFamily fam;
        fam.variants = get_or<std::size_t>(f, "variants", 1);
        const auto name = get_as<std::string>(f, "name");
        const auto salt = get_or<std::uint64_t>(f, "salt", spec.seed);
        if (f.contains("template")) {
            fam.tpl = family_template_from_json(f["template"]);
            fam.tpl.name = name;
        } else if (f.contains("rebind")) {
            const auto source = get_as<std::string>(f, "rebind");
            auto it = std::find_if(spec.families.begin(), spec.families.end(),
                                   [&](const CorpusFamily& c) { return c.tpl.name == source; });
            if (it == spec.families.end()) throw SchemaError("rebind", "no earlier family named '" + source + "'");
            fam.tpl = rebind_parameters(it->tpl, name, salt);
        } else {
            fam.tpl = make_template(name, get_as<std::size_t>(f, "events"), salt);
        }
        spec.families.push_back(std::move(fam));
    }
    spec.validate();
    return spec;
}

json to_json(const FoldTestResult& r) {
    return {{"threshold", r.threshold},
            {"groups", r.reference_groups},
            {"tests", r.tests},
            {"correct", r.correct},
            {"wrong_group", r.wrong_group},
            {"single_member", r.single_member},
            {"unassigned", r.unassigned},
            {"wrong_group_rate", r.wrong_group_rate()},
            {"single_member_rate", r.single_member_rate()}};
}

}  // namespace malfam
