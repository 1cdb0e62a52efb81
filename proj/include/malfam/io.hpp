#pragma once

// File formats: corpus directories, JSON reports and spec files.

#include "malfam/characteristics.hpp"
#include "malfam/pcs.hpp"
#include "malfam/phylo.hpp"
#include "malfam/profile.hpp"
#include "malfam/synth.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace malfam {

using json = nlohmann::json;

std::string read_file(const std::filesystem::path& path);
/// Writes atomically enough for our purposes: truncate, write, check.
void write_file(const std::filesystem::path& path, std::string_view contents);

struct LabelledProfile {
    std::string label;  ///< file stem, `<hash>-<ordinal>`
    Profile profile;
};

/// Every `*.xml` file in `dir`, sorted by file name. Parse failures are
/// rethrown with the offending file name prefixed.
std::vector<LabelledProfile> load_corpus(const std::filesystem::path& dir);

/// Writes `<label>.xml` per profile plus `truth.json` with the ground truth.
void write_corpus(const std::filesystem::path& dir, const Corpus& corpus);

json to_json(const FeatureConfig& cfg);
FeatureConfig feature_config_from_json(const json& j, FeatureConfig base = {});

/// {"threshold": t | null, "groups": [["label", ...], ...]}
json to_json(const Grouping& g);
Grouping grouping_from_json(const json& j);

/// Characteristics report: features and endurance used, then one entry per
/// group with id, size, common/distinct counts, a sample of distinct tokens
/// and the full distinct set (needed to classify later).
json characteristics_report(const std::vector<GroupCharacteristics>& chars, const FeatureConfig& features,
                            const EnduranceConfig& endurance, double threshold);
struct CharacteristicsFile {
    FeatureConfig features;
    std::vector<GroupCharacteristics> groups;
};
CharacteristicsFile characteristics_from_json(const json& j);

/// {"malwares": [...], "engines": [...], "labels": [[cell|null, ...], ...]}
EngineLabelTable label_table_from_json(const json& j);
/// Header `id,engine1,engine2,...`; an empty cell is NULL.
EngineLabelTable label_table_from_csv(std::string_view text);
/// Chooses the format by extension (.csv, otherwise JSON).
EngineLabelTable load_label_table(const std::filesystem::path& path);
json to_json(const EngineLabelTable& t);

json to_json(const std::vector<PcsEntry>& report);

json to_json(const FamilyTemplate& tpl);
FamilyTemplate family_template_from_json(const json& j);

/// {"seed": s, "mutation_rate": r, "families": [...]} where each family is
/// {"name", "variants", and either "template": {...} or "events": k
/// (generated with make_template, optional "salt") or "rebind": "<family>"
/// (benign counterpart of an earlier family, optional "salt")}.
CorpusSpec corpus_spec_from_json(const json& j);

json to_json(const FoldTestResult& r);

}  // namespace malfam
