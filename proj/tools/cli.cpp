#include "cli.hpp"

#include "malfam/error.hpp"
#include "malfam/io.hpp"
#include "malfam/pcs.hpp"
#include "malfam/phylo.hpp"
#include "malfam/similarity.hpp"
#include "malfam/synth.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

namespace malfam::cli {

namespace fs = std::filesystem;

void RunConfig::validate() const {
    features.validate();
    endurance.validate();
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw InputError("--threshold must lie in [0, 1]");
    if (!(text_threshold >= 0.0 && text_threshold <= 1.0)) throw InputError("--text-threshold must lie in [0, 1]");
    if (folds < 2) throw InputError("--folds must be at least 2");
}

namespace {

void apply_config_file(RunConfig& cfg, const fs::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw InputError(path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw InputError(path.string() + ": config must be a JSON object");
    static const std::set<std::string> known{"with_params", "ngram",          "normalize_paths", "include_return",
                                             "threshold",   "alpha",          "min_score",       "text_threshold",
                                             "seed",        "weighted_update", "threads",        "folds"};
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) throw SchemaError(key, path.string() + ": unknown config key");
    }
    try {
        cfg.features = feature_config_from_json(j, cfg.features);
        cfg.threshold = j.value("threshold", cfg.threshold);
        cfg.endurance.alpha = j.value("alpha", cfg.endurance.alpha);
        cfg.endurance.min_score = j.value("min_score", cfg.endurance.min_score);
        cfg.text_threshold = j.value("text_threshold", cfg.text_threshold);
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        cfg.weighted_update = j.value("weighted_update", cfg.weighted_update);
        cfg.threads = j.value("threads", cfg.threads);
        cfg.folds = j.value("folds", cfg.folds);
    } catch (const json::exception& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

/// Flags as parsed; unset optionals leave the config-file/default value alone.
struct Flags {
    std::string config;
    std::string out;
    std::optional<double> threshold, alpha, min_score, text_threshold;
    std::optional<unsigned> ngram, threads;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> folds;
    bool no_params = false, no_return = false, no_path_normalize = false, weighted = false;
};

RunConfig resolve(const Flags& f) {
    RunConfig cfg;
    if (!f.config.empty()) apply_config_file(cfg, f.config);
    if (f.threshold) cfg.threshold = *f.threshold;
    if (f.alpha) cfg.endurance.alpha = *f.alpha;
    if (f.min_score) cfg.endurance.min_score = *f.min_score;
    if (f.text_threshold) cfg.text_threshold = *f.text_threshold;
    if (f.ngram) cfg.features.ngram_n = *f.ngram;
    if (f.threads) cfg.threads = *f.threads;
    if (f.seed) cfg.seed = *f.seed;
    if (f.folds) cfg.folds = *f.folds;
    if (f.no_params) cfg.features.with_params = false;
    if (f.no_return) cfg.features.include_return = false;
    if (f.no_path_normalize) cfg.features.normalize_paths = false;
    if (f.weighted) cfg.weighted_update = true;
    cfg.validate();
    return cfg;
}

class Output {
public:
    Output(const std::string& path, std::ostream& fallback) : path_(path), fallback_(fallback) {}

    void write(const std::string& text) {
        if (path_.empty()) {
            fallback_ << text;
        } else {
            write_file(path_, text);
        }
    }

private:
    std::string path_;
    std::ostream& fallback_;
};

struct Sets {
    std::vector<std::string> labels;
    std::vector<ElementSet> sets;
};

Sets corpus_sets(const fs::path& dir, const FeatureConfig& features) {
    Sets s;
    for (auto& lp : load_corpus(dir)) {
        s.sets.push_back(extract_elements(lp.profile, features));
        s.labels.push_back(std::move(lp.label));
    }
    return s;
}

DistanceMatrix matrix_from(const fs::path& input, const RunConfig& cfg) {
    if (fs::is_directory(input)) {
        auto s = corpus_sets(input, cfg.features);
        return distance_matrix(s.labels, s.sets, cfg.threads);
    }
    return read_matrix_csv(read_file(input));
}

UpgmaOptions upgma_options(const RunConfig& cfg) {
    return {cfg.weighted_update ? LinkageUpdate::SizeWeighted : LinkageUpdate::Unweighted};
}

std::string cmd_parse(const std::vector<std::string>& inputs) {
    json out = json::array();
    auto summarize = [&](const std::string& label, const Profile& p) {
        json s = {{"label", label},
                  {"hash", p.hash},
                  {"process_id", p.process_id},
                  {"duration", p.duration_seconds},
                  {"events", p.events.size()}};
        if (p.parent_hash) s["parent_hash"] = *p.parent_hash;
        out.push_back(std::move(s));
    };
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            for (const auto& lp : load_corpus(in)) summarize(lp.label, lp.profile);
        } else {
            try {
                summarize(fs::path(in).stem().string(), parse_profile(read_file(in)));
            } catch (const Error& e) {
                throw InputError(in + ": " + e.what());
            }
        }
    }
    return out.dump(2) + "\n";
}

std::string cmd_characterize(const fs::path& corpus, const RunConfig& cfg) {
    auto s = corpus_sets(corpus, cfg.features);
    auto tree = upgma(distance_matrix(s.labels, s.sets, cfg.threads), upgma_options(cfg));
    auto grouping = cut_tree(tree, cfg.threshold);
    LabelledSets members;
    for (std::size_t i = 0; i < s.labels.size(); ++i) members.emplace(s.labels[i], s.sets[i]);
    auto chars = distinct_characteristics(tree, grouping, members, cfg.endurance);
    return characteristics_report(chars, cfg.features, cfg.endurance, cfg.threshold).dump(2) + "\n";
}

std::string cmd_classify(const fs::path& chars_path, const fs::path& profile_path, const RunConfig& cfg) {
    CharacteristicsFile chars;
    try {
        chars = characteristics_from_json(json::parse(read_file(chars_path)));
    } catch (const json::parse_error& e) {
        throw InputError(chars_path.string() + ": " + e.what());
    }
    Profile p;
    try {
        p = parse_profile(read_file(profile_path));
    } catch (const Error& e) {
        throw InputError(profile_path.string() + ": " + e.what());
    }
    auto id = classify(extract_elements(p, chars.features), chars.groups, cfg.endurance);
    return (id ? std::to_string(*id) : std::string("none")) + "\n";
}

std::string cmd_pcs(const fs::path& table_path, const std::vector<std::string>& injected,
                    const std::string& descriptions, bool normalize, const RunConfig& cfg) {
    EngineLabelTable table = load_label_table(table_path);
    FamilyNormalizer nz;
    if (normalize) {
        for (auto& row : table.labels) {
            for (auto& cell : row) {
                if (cell) cell = normalize_family(*cell, nz);
            }
        }
    }
    for (const auto& path : injected) {
        Grouping g;
        try {
            g = grouping_from_json(json::parse(read_file(path)));
        } catch (const json::parse_error& e) {
            throw InputError(path + ": " + e.what());
        }
        table.add_engine(fs::path(path).stem().string(), grouping_to_labels(g, table.malware_ids));
    }
    auto engines = engines_from_table(table);
    if (!descriptions.empty()) {
        std::map<std::string, std::string> desc;
        try {
            desc = json::parse(read_file(descriptions)).get<std::map<std::string, std::string>>();
        } catch (const json::exception& e) {
            throw InputError(descriptions + ": " + e.what());
        }
        engines.push_back(text_mining_engine(table.malware_ids, desc, nz, cfg.text_threshold));
    }
    return to_json(pcs_report(engines)).dump(2) + "\n";
}

std::string cmd_synth(const fs::path& spec_path, const std::string& out_dir, const RunConfig& cfg) {
    if (out_dir.empty()) throw InputError("synth needs --out <directory>");
    CorpusSpec spec;
    try {
        spec = corpus_spec_from_json(json::parse(read_file(spec_path)));
    } catch (const json::parse_error& e) {
        throw InputError(spec_path.string() + ": " + e.what());
    }
    if (cfg.seed) spec.seed = *cfg.seed;
    const auto corpus = generate_corpus(spec);
    write_corpus(out_dir, corpus);
    return std::to_string(corpus.profiles.size()) + " profiles in " + std::to_string(corpus.truth.groups.size()) +
           " families written to " + out_dir + "\n";
}

std::string cmd_crossval(const fs::path& corpus, const std::vector<double>& thresholds, const RunConfig& cfg) {
    auto s = corpus_sets(corpus, cfg.features);
    json out = json::array();
    for (double t : thresholds) {
        FoldTestOptions opts;
        opts.threshold = t;
        opts.folds = cfg.folds;
        opts.seed = cfg.seed.value_or(1);
        opts.endurance = cfg.endurance;
        opts.upgma = upgma_options(cfg);
        out.push_back(to_json(fold_test(s.labels, s.sets, opts)));
    }
    return out.dump(2) + "\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Behavior-profile family analysis: similarity, phylogenetic grouping, characteristics and PCS"};
    app.require_subcommand(1);
    app.fallthrough();

    Flags f;
    app.add_option("--config", f.config, "JSON config file (overridden by flags)");
    app.add_option("--out", f.out, "Output file (directory for synth); stdout when omitted");
    app.add_option("--threshold", f.threshold, "Tree cut threshold in [0,1] (default 0.5)");
    app.add_option("--alpha", f.alpha, "Endurance for common characteristics in [0,1) (default 0.1)");
    app.add_option("--min-score", f.min_score, "Minimum containment score to assign a group (default 0.5)");
    app.add_option("--text-threshold", f.text_threshold, "Cosine threshold of the text-mining engine (default 0.7)");
    app.add_option("--ngram", f.ngram, "Consecutive events per behavior element (default 1)");
    app.add_option("--threads", f.threads, "Worker threads for the distance matrix (0 = all cores)");
    app.add_option("--seed", f.seed, "Seed for synth and crossval");
    app.add_option("--folds", f.folds, "Folds for crossval (default 10)");
    app.add_flag("--no-params", f.no_params, "Use API names only");
    app.add_flag("--no-return", f.no_return, "Leave return values out of behavior elements");
    app.add_flag("--no-path-normalize", f.no_path_normalize, "Keep the case of path-like parameters");
    app.add_flag("--weighted-update", f.weighted, "Size-weighted average linkage instead of the plain average");

    std::vector<std::string> parse_inputs;
    auto* parse = app.add_subcommand("parse", "Validate profiles and print summaries");
    parse->add_option("inputs", parse_inputs, "Profile files or corpus directories")->required();

    std::string input;
    auto* distmat = app.add_subcommand("distmat", "Corpus directory -> Jaccard distance matrix CSV");
    distmat->add_option("corpus", input)->required();
    auto* tree = app.add_subcommand("tree", "Corpus directory or matrix CSV -> Newick tree");
    tree->add_option("input", input)->required();
    auto* groups = app.add_subcommand("groups", "Corpus directory or matrix CSV -> grouping JSON");
    groups->add_option("input", input)->required();
    auto* characterize = app.add_subcommand("characterize", "Corpus directory -> group characteristics JSON");
    characterize->add_option("corpus", input)->required();

    std::string profile;
    auto* classify_cmd = app.add_subcommand("classify", "Assign a profile to a characterized group");
    classify_cmd->add_option("characteristics", input)->required();
    classify_cmd->add_option("profile", profile)->required();

    std::vector<std::string> injected;
    std::string descriptions;
    bool normalize = false;
    auto* pcs = app.add_subcommand("pcs", "Label table -> Pairwise Classification Score report JSON");
    pcs->add_option("table", input)->required();
    pcs->add_option("--inject-grouping", injected, "Grouping JSON to score as an extra engine (repeatable)");
    pcs->add_option("--descriptions", descriptions, "JSON map id -> description for the text-mining engine");
    pcs->add_flag("--normalize", normalize, "Reduce detection strings to family names first");

    auto* synth = app.add_subcommand("synth", "Corpus spec JSON -> directory of synthetic profiles");
    synth->add_option("spec", input)->required();

    std::vector<double> thresholds{0.2, 0.3, 0.4, 0.5};
    auto* crossval = app.add_subcommand("crossval", "Held-out classification over several thresholds");
    crossval->add_option("corpus", input)->required();
    crossval->add_option("--thresholds", thresholds, "Thresholds to evaluate")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "malfam: error: " << e.what() << "\n";
        return 2;
    }

    try {
        const RunConfig cfg = resolve(f);
        Output o(f.out, out);
        if (*parse) {
            o.write(cmd_parse(parse_inputs));
        } else if (*distmat) {
            auto s = corpus_sets(input, cfg.features);
            std::ostringstream ss;
            write_matrix_csv(ss, distance_matrix(s.labels, s.sets, cfg.threads));
            o.write(ss.str());
        } else if (*tree) {
            o.write(to_newick(upgma(matrix_from(input, cfg), upgma_options(cfg))) + "\n");
        } else if (*groups) {
            auto t = upgma(matrix_from(input, cfg), upgma_options(cfg));
            o.write(to_json(cut_tree(t, cfg.threshold)).dump(2) + "\n");
        } else if (*characterize) {
            o.write(cmd_characterize(input, cfg));
        } else if (*classify_cmd) {
            o.write(cmd_classify(input, profile, cfg));
        } else if (*pcs) {
            o.write(cmd_pcs(input, injected, descriptions, normalize, cfg));
        } else if (*synth) {
            out << cmd_synth(input, f.out, cfg);
        } else if (*crossval) {
            for (double t : thresholds) {
                if (!(t >= 0.0 && t <= 1.0)) throw InputError("--thresholds values must lie in [0, 1]");
            }
            o.write(cmd_crossval(input, thresholds, cfg));
        }
    } catch (const std::exception& e) {
        err << "malfam: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace malfam::cli
