#include "malfam/synth.hpp"

#include "malfam/error.hpp"
#include "malfam/rng.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <unordered_set>

namespace malfam {

namespace {

constexpr std::array<std::string_view, 20> kHookedApis{
    // File
    "CreateFile", "ReadFile", "WriteFile", "DeleteFile", "CopyFile", "CloseHandle",
    // Registry
    "RegCloseKey", "RegQueryValue", "RegOpenKey", "RegCreateKey", "RegDeleteKey", "RegSetValue", "RegEnumValue",
    // Process
    "CreateProcess", "CreateProcessInternal", "OpenProcess", "ExitProcess", "WinExec", "CreateRemoteThread",
    // Library
    "LoadLibrary",
};

constexpr std::array<std::string_view, 5> kMutationNames{"drop_event", "duplicate_event", "perturb_param",
                                                         "insert_noise_event", "spawn_child"};

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex(std::uint64_t v, int digits) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf + 16 - digits);
}

std::string derive_hash(std::uint64_t seed, std::string_view family, std::size_t variant, std::size_t ordinal) {
    std::uint64_t s = seed ^ fnv1a(family);
    s = splitmix64(s) ^ (static_cast<std::uint64_t>(variant) << 20) ^ static_cast<std::uint64_t>(ordinal);
    std::uint64_t hi = splitmix64(s);
    std::uint64_t lo = splitmix64(s);
    return hex(hi, 16) + hex(lo, 16);
}

// Background activity every Windows process shows; shared by all families.
const std::vector<EventPattern>& noise_events() {
    static const std::vector<EventPattern> events{
        {"LoadLibrary", {{"lpFileName", "kernel32.dll"}}, "SUCCESS"},
        {"LoadLibrary", {{"lpFileName", "ntdll.dll"}}, "SUCCESS"},
        {"LoadLibrary", {{"lpFileName", "USER32.dll"}}, "SUCCESS"},
        {"LoadLibrary", {{"lpFileName", "ADVAPI32.dll"}}, "SUCCESS"},
        {"RegOpenKey", {{"hKey", "HKLM\\Software\\Microsoft\\Windows NT\\CurrentVersion\\Image File Execution Options"}}, "FAILURE"},
        {"RegQueryValue", {{"hKey", "HKLM\\System\\CurrentControlSet\\Control\\Session Manager\\SafeDllSearchMode"}}, "FAILURE"},
        {"RegOpenKey", {{"hKey", "HKCU\\Software\\Microsoft\\Windows\\CurrentVersion\\Explorer\\Shell Folders"}}, "SUCCESS"},
        {"RegCloseKey", {{"hKey", "HKCU\\Software\\Microsoft\\Windows\\CurrentVersion\\Explorer\\Shell Folders"}}, "SUCCESS"},
        {"CreateFile", {{"hName", "C:\\WINDOWS\\system32\\MSCTF.dll"}, {"desiredAccess", "GENERIC_READ"}, {"creationDisposition", "OPEN_EXISTING"}}, "SUCCESS"},
        {"CloseHandle", {{"hName", "C:\\WINDOWS\\system32\\MSCTF.dll"}}, "SUCCESS"},
    };
    return events;
}

struct Emitter {
    Profile profile;
    std::uint64_t clock;

    void emit(const EventPattern& p, Xorshift64Star& rng) {
        clock += 1 + rng.below(2'000'000);
        ApiEvent e;
        e.api_name = p.api_name;
        e.attributes = p.attributes;
        e.return_value = p.return_value;
        e.timestamp = clock;
        profile.events.push_back(std::move(e));
    }
};

EventPattern perturb(const FamilyTemplate& tpl, EventPattern ev, Xorshift64Star& rng) {
    std::vector<std::size_t> pooled;
    for (std::size_t k = 0; k < ev.attributes.size(); ++k) {
        // Only the family's own resources get renamed; system paths stay put.
        auto it = tpl.param_pools.find(ev.attributes[k].first);
        if (it == tpl.param_pools.end()) continue;
        if (std::find(it->second.begin(), it->second.end(), ev.attributes[k].second) != it->second.end()) {
            pooled.push_back(k);
        }
    }
    if (pooled.empty()) return ev;
    auto& [key, value] = ev.attributes[pooled[rng.below(pooled.size())]];
    std::vector<std::string> choices;
    for (const auto& v : tpl.param_pools.at(key)) {
        if (v != value) choices.push_back(v);
    }
    if (!choices.empty()) value = choices[rng.below(choices.size())];
    return ev;
}

class FamilyWriter {
public:
    FamilyWriter(const FamilyTemplate& tpl, double rate, std::uint64_t seed)
        : tpl_(tpl), rate_(rate), seed_(seed), rng_(seed ^ fnv1a(tpl.name)) {}

    void variant(std::size_t v, std::vector<GeneratedProfile>& out) {
        Emitter main = start(derive_hash(seed_, tpl_.name, v, 0), std::nullopt);
        const std::size_t slot = out.size();
        out.push_back({});
        std::size_t ordinal = 0;
        std::vector<GeneratedProfile> children;
        if (v == 0) {
            for (const auto& ev : tpl_.base_events) main.emit(ev, rng_);
        } else {
            walk(main, true, v, ordinal, children);
        }
        out[slot] = {main.profile.hash + "-0", std::move(main.profile)};
        for (auto& c : children) out.push_back(std::move(c));
    }

private:
    const FamilyTemplate& tpl_;
    double rate_;
    std::uint64_t seed_;
    Xorshift64Star rng_;

    bool roll(Mutation m) { return tpl_.mutation_ops.contains(m) && rng_.chance(rate_); }

    Emitter start(std::string hash, std::optional<std::string> parent) {
        Emitter e;
        e.profile.hash = std::move(hash);
        e.profile.parent_hash = std::move(parent);
        e.profile.process_id = 1000 + 4 * rng_.below(2000);
        e.profile.duration_seconds = 300;
        e.clock = 300'000'000 + rng_.below(50'000'000);
        return e;
    }

    void walk(Emitter& target, bool may_spawn, std::size_t v, std::size_t& ordinal,
              std::vector<GeneratedProfile>& children) {
        for (const auto& base : tpl_.base_events) {
            // Every roll is drawn even when an earlier one already decided the
            // outcome, so the stream position never depends on the outcome.
            const bool drop = roll(Mutation::DropEvent);
            const bool change = roll(Mutation::PerturbParam);
            const bool dup = roll(Mutation::DuplicateEvent);
            const bool noise = roll(Mutation::InsertNoiseEvent);
            const bool spawn = may_spawn && is_process_creating_api(base.api_name) && roll(Mutation::SpawnChild);
            if (drop) continue;
            EventPattern ev = change ? perturb(tpl_, base, rng_) : base;
            target.emit(ev, rng_);
            if (dup) target.emit(ev, rng_);
            if (spawn) {
                ++ordinal;
                Emitter child = start(derive_hash(seed_, tpl_.name, v, ordinal), target.profile.hash);
                child.clock = target.clock + 1;
                std::size_t unused = ordinal;
                walk(child, false, v, unused, children);
                children.push_back({child.profile.hash + "-" + std::to_string(ordinal), std::move(child.profile)});
            }
            if (noise) {
                const auto& pool = noise_events();
                target.emit(pool[rng_.below(pool.size())], rng_);
            }
        }
    }
};

std::string lower(std::string s) {
    for (char& c : s) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return s;
}

}  // namespace

std::string_view to_string(Mutation m) { return kMutationNames[static_cast<std::size_t>(m)]; }

Mutation mutation_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kMutationNames.size(); ++i) {
        if (kMutationNames[i] == name) return static_cast<Mutation>(i);
    }
    throw InputError("unknown mutation '" + std::string(name) + "'");
}

std::span<const std::string_view> hooked_apis() { return kHookedApis; }

bool is_hooked_api(std::string_view name) {
    auto listed = [](std::string_view n) { return std::find(kHookedApis.begin(), kHookedApis.end(), n) != kHookedApis.end(); };
    if (listed(name)) return true;
    // ANSI/wide spellings (CreateFileA, CreateFileW) count as their base API
    return (name.ends_with('A') || name.ends_with('W')) && listed(name.substr(0, name.size() - 1));
}

bool is_process_creating_api(std::string_view name) {
    return name.starts_with("CreateProcess") || name == "WinExec";
}

void FamilyTemplate::validate() const {
    if (name.empty()) throw InputError("family template needs a name");
    if (base_events.empty()) throw InputError("family template '" + name + "' has no events");
    for (const auto& e : base_events) {
        if (!is_hooked_api(e.api_name)) {
            throw InputError("family template '" + name + "' uses unhooked API '" + e.api_name + "'");
        }
    }
}

void CorpusSpec::validate() const {
    if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) throw InputError("mutation rate must lie in [0, 1]");
    if (families.empty()) throw InputError("corpus spec has no families");
    std::unordered_set<std::string_view> names;
    for (const auto& f : families) {
        f.tpl.validate();
        if (f.variants < 1) throw InputError("family '" + f.tpl.name + "' needs at least one variant");
        if (!names.insert(f.tpl.name).second) throw InputError("duplicate family name '" + f.tpl.name + "'");
    }
}

std::vector<GeneratedProfile> generate_family(const FamilyTemplate& tpl, std::size_t count, double rate,
                                              std::uint64_t seed) {
    tpl.validate();
    if (count < 1) throw InputError("family '" + tpl.name + "' needs at least one variant");
    if (!(rate >= 0.0 && rate <= 1.0)) throw InputError("mutation rate must lie in [0, 1]");
    FamilyWriter writer(tpl, rate, seed);
    std::vector<GeneratedProfile> out;
    for (std::size_t v = 0; v < count; ++v) writer.variant(v, out);
    return out;
}

Corpus generate_corpus(const CorpusSpec& spec) {
    spec.validate();
    Corpus c;
    std::unordered_set<std::string> labels;
    for (const auto& fam : spec.families) {
        auto profiles = generate_family(fam.tpl, fam.variants, spec.mutation_rate, spec.seed);
        std::vector<std::string> group;
        for (auto& gp : profiles) {
            if (!labels.insert(gp.label).second) throw InputError("generated label collision '" + gp.label + "'");
            group.push_back(gp.label);
            c.profiles.push_back(std::move(gp));
        }
        c.truth.groups.push_back(std::move(group));
        c.family_names.push_back(fam.tpl.name);
    }
    return c;
}

FamilyTemplate make_template(std::string name, std::size_t event_count, std::uint64_t salt) {
    if (event_count == 0) throw InputError("template needs at least one event");
    Xorshift64Star rng(salt ^ fnv1a(name));
    const std::string tag = lower(name) + hex(rng.next(), 5);

    std::vector<std::string> files, regs, dlls;
    for (int i = 0; i < 4; ++i) {
        files.push_back(i % 2 == 0 ? "C:\\DOCUME~1\\ants\\LOCALS~1\\Temp\\" + tag + "\\s" + hex(rng.next(), 4) + ".exe"
                                   : "C:\\WINDOWS\\system32\\" + tag.substr(0, 3) + hex(rng.next(), 5) + ".exe");
    }
    for (int i = 0; i < 3; ++i) {
        static constexpr std::array<std::string_view, 3> roots{
            "HKLM\\Software\\Microsoft\\Windows\\CurrentVersion\\Run\\",
            "HKLM\\System\\CurrentControlSet\\Services\\",
            "HKCU\\Software\\Microsoft\\Windows\\ShellNoRoam\\MUICache\\",
        };
        regs.push_back(std::string(roots[static_cast<std::size_t>(i)]) + tag + hex(rng.next(), 3));
    }
    for (int i = 0; i < 2; ++i) dlls.push_back("C:\\WINDOWS\\" + tag + hex(rng.next(), 3) + ".dll");


    FamilyTemplate tpl;
    tpl.name = std::move(name);
    auto& ev = tpl.base_events;
    ev.push_back({"CreateFile", {{"hName", files[0]}, {"desiredAccess", "GENERIC_WRITE"}, {"creationDisposition", "CREATE_ALWAYS"}}, "SUCCESS"});
    ev.push_back({"WriteFile", {{"hName", files[0]}}, "SUCCESS"});
    ev.push_back({"CloseHandle", {{"hName", files[0]}}, "SUCCESS"});
    ev.push_back({"RegCreateKey", {{"hKey", regs[0]}}, "SUCCESS"});
    ev.push_back({"RegSetValue", {{"hKey", regs[0]}, {"type", "REG_SZ"}, {"data", files[0]}}, "SUCCESS"});
    ev.push_back({"LoadLibrary", {{"lpFileName", dlls[0]}}, "SUCCESS"});
    ev.push_back({"CreateProcessInternal", {{"lpApplicationName", files[0]}, {"lpCommandLine", files[0] + " /" + tag}}, "SUCCESS"});
    if (ev.size() > event_count) ev.resize(event_count);
    const std::size_t head = ev.size();

    // Each activity kind touches every resource of its pool, so swapping a
    // pooled value mostly lands on behavior the family already shows.
    auto add_kind = [&](std::size_t kind) {
        switch (kind) {
            case 0: for (const auto& f : files) ev.push_back({"CreateFile", {{"hName", f}, {"desiredAccess", "GENERIC_WRITE"}, {"creationDisposition", "CREATE_ALWAYS"}}, "SUCCESS"}); break;
            case 1: for (const auto& f : files) ev.push_back({"WriteFile", {{"hName", f}}, "SUCCESS"}); break;
            case 2: for (const auto& f : files) ev.push_back({"CloseHandle", {{"hName", f}}, "SUCCESS"}); break;
            case 3: for (const auto& r : regs) ev.push_back({"RegCreateKey", {{"hKey", r}}, "SUCCESS"}); break;
            case 4: for (const auto& r : regs) ev.push_back({"RegSetValue", {{"hKey", r}, {"type", "REG_SZ"}, {"data", files[0]}}, "SUCCESS"}); break;
            case 5: for (const auto& d : dlls) ev.push_back({"LoadLibrary", {{"lpFileName", d}}, "SUCCESS"}); break;
            case 6: for (const auto& f : files) ev.push_back({"CreateFile", {{"hName", f}, {"desiredAccess", "GENERIC_READ"}, {"creationDisposition", "OPEN_EXISTING"}}, "SUCCESS"}); break;
            case 7: for (const auto& f : files) ev.push_back({"ReadFile", {{"hName", f}}, "SUCCESS"}); break;
            case 8: for (const auto& f : files) ev.push_back({"CopyFile", {{"lpExistingFileName", files[0]}, {"lpNewFileName", f}}, "SUCCESS"}); break;
            case 9: {
                const std::string ret = rng.chance(0.5) ? "SUCCESS" : "FAILURE";
                for (const auto& d : dlls) ev.push_back({"DeleteFile", {{"lpFileName", d}}, ret});
                break;
            }
            case 10: for (const auto& r : regs) ev.push_back({"RegOpenKey", {{"hKey", r}}, "SUCCESS"}); break;
            case 11: {
                const std::string ret = rng.chance(0.5) ? "SUCCESS" : "FAILURE";
                for (const auto& r : regs) ev.push_back({"RegQueryValue", {{"hKey", r}}, ret});
                break;
            }
            case 12: for (const auto& r : regs) ev.push_back({"RegCloseKey", {{"hKey", r}}, "SUCCESS"}); break;
            case 13: {
                const std::string index = std::to_string(rng.below(4));
                for (const auto& r : regs) ev.push_back({"RegEnumValue", {{"hKey", r}, {"dwIndex", index}}, "SUCCESS"});
                break;
            }
            case 14: for (const auto& r : regs) ev.push_back({"RegDeleteKey", {{"hKey", r}}, "SUCCESS"}); break;
            case 15: for (const auto& f : files) ev.push_back({"WinExec", {{"lpCmdLine", f}}, "SUCCESS"}); break;
            case 16: ev.push_back({"OpenProcess", {{"dwDesiredAccess", "PROCESS_ALL_ACCESS"}, {"processName", tag + ".exe"}}, "SUCCESS"}); break;
            default: ev.push_back({"CreateRemoteThread", {{"hProcess", tag + ".exe"}}, "SUCCESS"}); break;
        }
    };
    constexpr std::size_t kHeadKinds = 6, kKinds = 18;
    for (std::size_t k = 0; k < kHeadKinds; ++k) add_kind(k);
    // Loader and shell activity every process shows; noise draws from it too.
    for (const auto& bg : noise_events()) ev.push_back(bg);
    std::vector<std::size_t> optional_kinds;
    for (std::size_t k = kHeadKinds; k < kKinds; ++k) optional_kinds.push_back(k);
    for (std::size_t i = optional_kinds.size(); i > 1; --i) std::swap(optional_kinds[i - 1], optional_kinds[rng.below(i)]);
    // Roughly a quarter of the events are distinct; the rest repeat them, the
    // way real traces loop over the same handful of resources.
    for (std::size_t k : optional_kinds) {
        if (ev.size() * 4 >= event_count) break;
        add_kind(k);
    }
    const std::size_t distinct = std::min(ev.size(), event_count);
    ev.resize(distinct);
    while (ev.size() < event_count) {
        const auto pos = head + rng.below(ev.size() - head + 1);
        const EventPattern copy = ev[rng.below(distinct)];
        ev.insert(ev.begin() + static_cast<std::ptrdiff_t>(pos), copy);
    }

    tpl.param_pools["hName"] = files;
    tpl.param_pools["lpNewFileName"] = files;
    tpl.param_pools["lpCmdLine"] = files;
    tpl.param_pools["lpFileName"] = dlls;
    tpl.param_pools["hKey"] = regs;
    return tpl;
}

FamilyTemplate rebind_parameters(const FamilyTemplate& tpl, std::string name, std::uint64_t salt) {
    FamilyTemplate out = tpl;
    out.name = std::move(name);
    const std::string root = "C:\\Program Files\\" + out.name + "\\";
    auto rebind = [&](const std::string& key, const std::string& value) {
        std::uint64_t s = salt ^ fnv1a(value);
        std::string id = hex(splitmix64(s), 8);
        return is_path_like_key(key) || key == "lpExistingFileName" || key == "lpNewFileName" || key == "data" ||
                       key == "lpCmdLine" || key == "hProcess" || key == "processName"
                   ? root + id + ".dat"
                   : lower(value) + "_" + id;
    };
    for (auto& ev : out.base_events) {
        for (auto& [k, v] : ev.attributes) v = rebind(k, v);
    }
    for (auto& [k, pool] : out.param_pools) {
        for (auto& v : pool) v = rebind(k, v);
    }
    return out;
}

}  // namespace malfam
