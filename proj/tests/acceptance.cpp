// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include "malfam/characteristics.hpp"
#include "malfam/io.hpp"
#include "malfam/pcs.hpp"
#include "malfam/phylo.hpp"
#include "malfam/similarity.hpp"
#include "malfam/synth.hpp"

#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace malfam;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

// ---- 1 ---------------------------------------------------------------------

Outcome jaccard_suite() {
    Outcome o;
    const auto t0 = Clock::now();
    Xorshift64Star rng(1);
    for (int i = 0; i < 1000; ++i) {
        auto x = testsupport::random_set(rng, 16, 10);
        auto y = testsupport::random_set(rng, 16, 10);
        auto z = testsupport::random_set(rng, 16, 10);
        const double xy = jaccard_distance(x, y);
        o.require(xy == jaccard_distance(y, x), "asymmetric pair " + std::to_string(i));
        o.require(xy >= 0.0 && xy <= 1.0, "out of range at pair " + std::to_string(i));
        o.require(jaccard_distance(x, x) == 0.0, "d(x,x) != 0 at pair " + std::to_string(i));
        o.require((xy == 0.0) == (x == y), "identity of indiscernibles at pair " + std::to_string(i));
        o.require(jaccard_distance(x, z) <= xy + jaccard_distance(y, z) + 1e-12,
                  "triangle inequality at pair " + std::to_string(i));
    }
    const double v = jaccard_distance(ElementSet{"a", "b", "c"}, ElementSet{"b", "c", "d"});
    o.require(v == 0.5, "worked example gave " + fmt(v));
    const double secs = seconds_since(t0);
    o.require(secs < 1.0, "took " + fmt(secs) + " s");
    if (o.pass) o.detail = "1000 pairs, exact 0.5, " + fmt(secs) + " s";
    return o;
}

// ---- 2 ---------------------------------------------------------------------

Outcome upgma_oracle() {
    Outcome o;
    const auto t0 = Clock::now();
    Xorshift64Star rng(2);
    int ties = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.below(7);
        const bool forced_ties = trial % 2 == 0;
        ties += forced_ties;
        auto d = testsupport::random_matrix(rng, n, forced_ties);
        const auto tree = upgma(d);
        const auto got = testsupport::shape_of(tree);
        const auto want = testsupport::naive_upgma(d);
        const std::string where = "trial " + std::to_string(trial);
        o.require(got.topology == want.topology, where + ": topology " + got.topology + " vs " + want.topology);
        o.require(got.heights.size() == want.heights.size(), where + ": node count");
        for (std::size_t k = 0; k < std::min(got.heights.size(), want.heights.size()); ++k) {
            o.require(std::abs(got.heights[k] - want.heights[k]) <= 1e-12, where + ": height mismatch");
        }
        for (std::size_t id = n + 1; id < tree.nodes.size(); ++id) {
            o.require(tree.nodes[id].height >= tree.nodes[id - 1].height, where + ": merge height decreased");
        }
    }
    const double secs = seconds_since(t0);
    o.require(secs < 5.0, "took " + fmt(secs) + " s");
    if (o.pass) o.detail = "200 trials (" + std::to_string(ties) + " with forced ties), " + fmt(secs) + " s";
    return o;
}

// ---- 3 ---------------------------------------------------------------------

ElementSet common_of(const PhyloTree& t, NodeId node, const LabelledSets& sets) {
    std::vector<ElementSet> member_sets;
    for (const auto& l : t.member_labels(node)) member_sets.push_back(sets.at(l));
    return common_set(member_sets, 0.0);
}

Outcome distinct_suite() {
    Outcome o;
    Xorshift64Star rng(3);
    std::size_t groups_checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.below(11);
        std::vector<std::string> labels;
        std::vector<ElementSet> sets;
        LabelledSets by_label;
        // Shared core plus noise so parents have non-trivial common sets.
        for (std::size_t i = 0; i < n; ++i) {
            auto s = testsupport::random_set(rng, 10, 7);
            s.push_back("core");
            if (i % 2) s.push_back("odd");
            normalize_set(s);
            labels.push_back("p" + std::to_string(i));
            sets.push_back(s);
            by_label.emplace(labels.back(), s);
        }
        const auto tree = upgma(distance_matrix(labels, sets));
        for (double th : {0.2, 0.4, 0.6, 0.8}) {
            const auto grouping = cut_tree(tree, th);
            const auto chars = distinct_characteristics(tree, grouping, by_label, {0.0, 0.5});
            const auto nodes = cut_tree_nodes(tree, th);
            for (std::size_t g = 0; g < chars.size(); ++g) {
                ++groups_checked;
                const auto& c = chars[g];
                o.require(std::includes(c.common.begin(), c.common.end(), c.distinct.begin(), c.distinct.end()),
                          "D(G) not a subset of C(G)");
                if (auto parent = tree.nodes[nodes[g]].parent) {
                    const auto cp = common_of(tree, *parent, by_label);
                    ElementSet overlap;
                    std::set_intersection(c.distinct.begin(), c.distinct.end(), cp.begin(), cp.end(),
                                          std::back_inserter(overlap));
                    o.require(overlap.empty(), "D(G) intersects C(P)");
                }
            }
        }
    }

    // Constructed case: the pair {s0,s1} shares exactly what its parent shares.
    std::vector<std::string> labels{"s0", "s1", "s2"};
    std::vector<ElementSet> sets{{"a", "b", "x"}, {"a", "b", "y"}, {"a", "b"}};
    LabelledSets by_label;
    for (std::size_t i = 0; i < 3; ++i) by_label.emplace(labels[i], sets[i]);
    const auto tree = upgma(distance_matrix(labels, sets));
    const auto chars = distinct_characteristics(tree, cut_tree(tree, 0.4), by_label, {0.0, 0.5});
    bool empty_found = false;
    for (const auto& c : chars) {
        if (c.size() == 2 && c.common == ElementSet{"a", "b"} && c.distinct.empty()) empty_found = true;
    }
    o.require(empty_found, "constructed C(G) = C(P) case did not give an empty D(G)");
    if (o.pass) o.detail = std::to_string(groups_checked) + " groups checked, |D(G)| = 0 case reproduced";
    return o;
}

// ---- 4 ---------------------------------------------------------------------

EngineLabelTable pair_table(std::vector<FamilyLabel> x, std::vector<FamilyLabel> y) {
    EngineLabelTable t;
    t.malware_ids = {"m1", "m2", "m3"};
    t.engines = {"x", "y"};
    for (std::size_t i = 0; i < 3; ++i) t.labels.push_back({x[i], y[i]});
    return t;
}

Outcome pcs_oracle() {
    Outcome o;
    Xorshift64Star rng(4);
    double worst = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 2 + rng.below(7), m = 1 + rng.below(5);
        auto t = testsupport::random_table(rng, n, m, 0.2);
        const auto engines = engines_from_table(t);
        auto renamed = t;
        testsupport::rename_labels(renamed, rng.below(m), rng);
        const auto renamed_engines = engines_from_table(renamed);
        for (std::size_t x = 0; x < m; ++x) {
            const double got = pcs_score(engines, x);
            worst = std::max(worst, std::abs(got - testsupport::naive_pcs(t, x)));
            o.require(std::abs(got - testsupport::naive_pcs(t, x)) <= 1e-12,
                      "oracle mismatch in table " + std::to_string(trial));
            o.require(std::abs(pcs_score(renamed_engines, x) - got) <= 1e-12,
                      "bijection changed PCS in table " + std::to_string(trial));
        }
    }
    const double agree = pcs_score(pair_table({"f", "f", "g"}, {"f", "f", "g"}), "x");
    const double partial = pcs_score(pair_table({"f", "f", "g"}, {"f", "g", "g"}), "x");
    o.require(agree == 2.0, "agreeing 3x2 table gave " + fmt(agree));
    o.require(partial == 1.25, "partial 3x2 table gave " + fmt(partial));
    if (o.pass) o.detail = "500 tables, max oracle gap " + fmt(worst) + ", worked values 2 and 1.25";
    return o;
}

// ---- 5, 6, 7 ---------------------------------------------------------------

struct DeskCorpus {
    Corpus malware;
    std::vector<GeneratedProfile> benign;
};

DeskCorpus desk_corpus() {
    CorpusSpec spec;
    spec.seed = 2014;
    spec.mutation_rate = 0.15;
    for (const char* name : {"ircbot", "sdbot", "agobot", "spybot"}) {
        spec.families.push_back({make_template(name, 160, 7), 10});
    }
    DeskCorpus d;
    d.malware = generate_corpus(spec);
    d.benign = generate_family(rebind_parameters(spec.families[0].tpl, "benign", 11), 10, spec.mutation_rate, spec.seed);
    return d;
}

struct Sets {
    std::vector<std::string> labels;
    std::vector<ElementSet> sets;
};

Sets sets_of(const std::vector<GeneratedProfile>& profiles, const FeatureConfig& cfg) {
    Sets s;
    for (const auto& gp : profiles) {
        s.labels.push_back(gp.label);
        s.sets.push_back(extract_elements(gp.profile, cfg));
    }
    return s;
}

double mean_cross(const Sets& a, const Sets& b) {
    double sum = 0.0;
    for (const auto& x : a.sets) {
        for (const auto& y : b.sets) sum += jaccard_distance(x, y);
    }
    return sum / static_cast<double>(a.sets.size() * b.sets.size());
}

Outcome family_recovery(const DeskCorpus& corpus) {
    Outcome o;
    const auto t0 = Clock::now();
    const auto all = sets_of(corpus.malware.profiles, {});
    const auto tree = upgma(distance_matrix(all.labels, all.sets));
    const auto grouping = cut_tree(tree, 0.5);
    const double ri = rand_index(grouping, corpus.malware.truth);
    o.require(ri >= 0.9, "Rand index " + fmt(ri));

    std::map<std::string, std::size_t> family_of;
    for (std::size_t f = 0; f < corpus.malware.truth.groups.size(); ++f) {
        for (const auto& l : corpus.malware.truth.groups[f]) family_of[l] = f;
    }
    double intra = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < all.labels.size(); ++i) {
        for (std::size_t j = i + 1; j < all.labels.size(); ++j) {
            if (family_of[all.labels[i]] != family_of[all.labels[j]]) continue;
            intra += jaccard_distance(all.sets[i], all.sets[j]);
            ++pairs;
        }
    }
    intra /= static_cast<double>(pairs);
    const double to_benign = mean_cross(all, sets_of(corpus.benign, {}));
    o.require(intra < to_benign, "intra " + fmt(intra) + " not below benign " + fmt(to_benign));
    const double secs = seconds_since(t0);
    o.require(secs < 10.0, "took " + fmt(secs) + " s");
    if (o.pass) {
        o.detail = std::to_string(all.labels.size()) + " profiles, " + std::to_string(grouping.groups.size()) +
                   " groups, Rand " + fmt(ri) + ", intra " + fmt(intra) + " < benign " + fmt(to_benign) + ", " +
                   fmt(secs) + " s";
    }
    return o;
}

Outcome parameter_benefit(const DeskCorpus& corpus) {
    Outcome o;
    FeatureConfig with;
    FeatureConfig without;
    without.with_params = false;
    const double d_with = mean_cross(sets_of(corpus.malware.profiles, with), sets_of(corpus.benign, with));
    const double d_without = mean_cross(sets_of(corpus.malware.profiles, without), sets_of(corpus.benign, without));
    o.require(d_with > d_without, "with params " + fmt(d_with) + " not above without " + fmt(d_without));
    if (o.pass) o.detail = "malware-benign distance " + fmt(d_with) + " with params vs " + fmt(d_without) + " without";
    return o;
}

Outcome threshold_monotonicity(const DeskCorpus& corpus) {
    Outcome o;
    const auto all = sets_of(corpus.malware.profiles, {});
    const auto tree = upgma(distance_matrix(all.labels, all.sets));
    std::string counts, rates;
    std::size_t last_groups = SIZE_MAX;
    double last_rate = -1.0;
    for (double th : {0.2, 0.3, 0.4, 0.5}) {
        const auto groups = cut_tree(tree, th).groups.size();
        FoldTestOptions opts;
        opts.threshold = th;
        opts.folds = 10;
        opts.seed = 5;
        const auto r = fold_test(all.labels, all.sets, opts);
        o.require(groups <= last_groups, "group count rose at threshold " + fmt(th));
        o.require(r.wrong_group_rate() >= last_rate, "wrong-group rate fell at threshold " + fmt(th));
        last_groups = groups;
        last_rate = r.wrong_group_rate();
        counts += (counts.empty() ? "" : "/") + std::to_string(groups);
        rates += (rates.empty() ? "" : "/") + fmt(r.wrong_group_rate());
    }
    if (o.pass) o.detail = "groups " + counts + ", wrong-group rate " + rates + " over 0.2..0.5";
    return o;
}

// ---- 8 ---------------------------------------------------------------------

int shell(const std::string& cmd) { return std::system((cmd + " >/dev/null 2>&1").c_str()); }

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

std::string directory_digest(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::string all;
    for (const auto& f : files) all += f.filename().string() + "\n" + read_file(f);
    return all;
}

Outcome roundtrip_and_determinism() {
    Outcome o;
    Xorshift64Star rng(8);
    for (int i = 0; i < 100; ++i) {
        const auto p = testsupport::random_profile(rng, 12);
        o.require(parse_profile(serialize_profile(p)) == p, "round trip failed for profile " + std::to_string(i));
    }

    const fs::path work = fs::temp_directory_path() / "malfam_acceptance_cli";
    fs::remove_all(work);
    fs::create_directories(work);
    const std::string cli = quoted(MALFAM_CLI_PATH);
    write_file(work / "spec.json", R"({"seed": 9, "mutation_rate": 0.15, "families": [
        {"name": "alpha", "variants": 4, "events": 40},
        {"name": "beta", "variants": 4, "events": 40},
        {"name": "benign", "variants": 2, "rebind": "alpha"}]})");
    write_file(work / "table.csv", "id,K,A\nm1,Win32.Morstar.ba,APPL/Firseria.A.15\nm2,Win32.Morstar.bb,\n"
                                   "m3,Trojan.Agent,APPL/Firseria.B.2\n");
    write_file(work / "desc.json", R"({"m1": "adware installer", "m2": "adware installer bundle"})");

    const fs::path corpus = work / "corpus";
    if (shell(cli + " synth --out " + quoted(corpus) + " " + quoted(work / "spec.json")) != 0) {
        o.require(false, "synth failed");
        return o;
    }
    fs::path any_profile;
    for (const auto& e : fs::directory_iterator(corpus)) {
        if (e.path().extension() == ".xml" && (any_profile.empty() || e.path() < any_profile)) any_profile = e.path();
    }
    write_file(work / "grouping.json", R"({"threshold": 0.5, "groups": [["m1", "m2"], ["m3"]]})");

    // {name, argument tail}; output goes to --out.
    const std::vector<std::pair<std::string, std::string>> commands{
        {"parse", "parse " + quoted(corpus)},
        {"distmat", "distmat " + quoted(corpus)},
        {"tree", "tree " + quoted(corpus)},
        {"groups", "groups --threshold 0.5 " + quoted(corpus)},
        {"characterize", "characterize " + quoted(corpus)},
        {"classify", "classify " + quoted(work / "chars.json") + " " + quoted(any_profile)},
        {"pcs", "pcs --normalize --inject-grouping " + quoted(work / "grouping.json") + " --descriptions " +
                    quoted(work / "desc.json") + " " + quoted(work / "table.csv")},
        {"crossval", "crossval --folds 5 --seed 3 " + quoted(corpus)},
    };
    // classify reads the characterize output.
    shell(cli + " characterize --out " + quoted(work / "chars.json") + " " + quoted(corpus));
    for (const auto& [name, tail] : commands) {
        std::string outputs[2];
        for (int run = 0; run < 2; ++run) {
            const fs::path out = work / (name + std::to_string(run) + ".out");
            if (shell(cli + " --out " + quoted(out) + " " + tail) != 0) {
                o.require(false, name + " exited with an error");
                break;
            }
            outputs[run] = read_file(out);
        }
        o.require(!outputs[0].empty() && outputs[0] == outputs[1], name + " output differs between runs");
    }
    std::string synth_runs[2];
    for (int run = 0; run < 2; ++run) {
        const fs::path out = work / ("synth" + std::to_string(run));
        shell(cli + " synth --seed 77 --out " + quoted(out) + " " + quoted(work / "spec.json"));
        synth_runs[run] = directory_digest(out);
    }
    o.require(!synth_runs[0].empty() && synth_runs[0] == synth_runs[1], "synth output differs between runs");
    if (o.pass) o.detail = "100 random profiles round-trip, 9 subcommands byte-identical across runs";
    return o;
}

// ---- 9 ---------------------------------------------------------------------

Outcome performance() {
    Outcome o;
    CorpusSpec spec;
    spec.seed = 419;
    spec.mutation_rate = 0.1;
    // 38 families of 10 variants plus their spawned children, trimmed to 419.
    for (int f = 0; f < 38; ++f) spec.families.push_back({make_template("fam" + std::to_string(f), 430, 3), 10});
    auto corpus = generate_corpus(spec);
    if (corpus.profiles.size() > 419) corpus.profiles.resize(419);
    std::vector<std::string> documents;
    std::size_t bytes = 0;
    for (const auto& gp : corpus.profiles) {
        documents.push_back(serialize_profile(gp.profile));
        bytes += documents.back().size();
    }
    const double avg_kb = static_cast<double>(bytes) / static_cast<double>(documents.size()) / 1024.0;

    const auto t0 = Clock::now();
    std::vector<std::string> labels;
    std::vector<ElementSet> sets;
    for (std::size_t i = 0; i < documents.size(); ++i) {
        labels.push_back(corpus.profiles[i].label);
        sets.push_back(extract_elements(parse_profile(documents[i]), {}));
    }
    const auto tree = upgma(distance_matrix(labels, sets));
    const double secs = seconds_since(t0);
    o.require(documents.size() == 419, "generated only " + std::to_string(documents.size()) + " profiles");
    o.require(avg_kb > 45.0 && avg_kb < 70.0, "average profile size " + fmt(avg_kb) + " KB");
    o.require(tree.nodes.size() == 2 * 419 - 1, "tree has wrong size");
    o.require(secs < 60.0, "took " + fmt(secs) + " s");
    if (o.pass) {
        o.detail = "419 profiles, " + fmt(avg_kb) + " KB average, parse + matrix + tree " + fmt(secs) + " s";
    }
    return o;
}

}  // namespace

int main() {
    const auto desk = desk_corpus();
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"1 jaccard metric", jaccard_suite},
        {"2 upgma oracle", upgma_oracle},
        {"3 distinct characteristics", distinct_suite},
        {"4 pcs oracle", pcs_oracle},
        {"5 family recovery", [&] { return family_recovery(desk); }},
        {"6 parameter benefit", [&] { return parameter_benefit(desk); }},
        {"7 threshold monotonicity", [&] { return threshold_monotonicity(desk); }},
        {"8 round trip and determinism", roundtrip_and_determinism},
        {"9 performance", performance},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << name << ": " << o.detail << std::endl;
    }
    std::cout << (9 - failed) << "/9 criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
