#include "malfam/profile.hpp"

#include "malfam/error.hpp"
#include "malfam/xml.hpp"

#include <algorithm>
#include <array>
#include <charconv>

namespace malfam {

namespace {

constexpr std::array kPathKeys{
    std::string_view{"hName"},          std::string_view{"lpFileName"}, std::string_view{"lpApplicationName"},
    std::string_view{"lpCommandLine"},  std::string_view{"hKey"},
};

std::string_view trim(std::string_view s) {
    auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::optional<std::uint64_t> to_u64(std::string_view s) {
    s = trim(s);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::string meta_text(const xml::Element& meta, std::string_view field) {
    const auto* e = meta.child(field);
    if (e == nullptr) throw SchemaError(std::string(field), "missing from <Meta>");
    return std::string(trim(e->text));
}

std::uint64_t meta_positive(const xml::Element& meta, std::string_view field) {
    auto text = meta_text(meta, field);
    auto v = to_u64(text);
    if (!v || *v == 0) throw SchemaError(std::string(field), "expected a positive integer, got '" + text + "'");
    return *v;
}

void encode_into(std::string& out, std::string_view raw) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    for (char c : raw) {
        if (c == '%' || c == '|' || c == '=' || c == ';') {
            out.push_back('%');
            out.push_back(kHex[(static_cast<unsigned char>(c) >> 4) & 0xF]);
            out.push_back(kHex[static_cast<unsigned char>(c) & 0xF]);
        } else {
            out.push_back(c);
        }
    }
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

}  // namespace

void FeatureConfig::validate() const {
    if (ngram_n < 1) throw InputError("ngram must be at least 1");
}

bool is_path_like_key(std::string_view key) {
    return std::find(kPathKeys.begin(), kPathKeys.end(), key) != kPathKeys.end();
}

Profile parse_profile(std::string_view xml_text) {
    xml::Element root = xml::parse(xml_text);
    if (root.name != "Profile") throw SchemaError("Profile", "root element is <" + root.name + ">");

    const auto* meta = root.child("Meta");
    if (meta == nullptr) throw SchemaError("Meta", "missing from <Profile>");
    const auto* exec = root.child("Execution");
    if (exec == nullptr) throw SchemaError("Execution", "missing from <Profile>");

    Profile p;
    p.hash = meta_text(*meta, "Hash");
    if (p.hash.empty()) throw SchemaError("Hash", "must not be empty");
    p.process_id = meta_positive(*meta, "Process_id");
    p.duration_seconds = meta_positive(*meta, "Duration");
    if (const auto* parent = meta->child("Parent_hash")) {
        p.parent_hash = std::string(trim(parent->text));
    }

    p.events.reserve(exec->children.size());
    for (const auto& call : exec->children) {
        const std::string where = " (<" + call.name + "> at line " + std::to_string(call.line) + ")";
        if (!call.children.empty()) throw SchemaError(call.name, "API event must not contain elements" + where);
        ApiEvent ev;
        ev.api_name = call.name;
        bool have_time = false;
        for (const auto& attr : call.attributes) {
            if (attr.name == "Time") {
                auto t = to_u64(attr.value);
                if (!t) throw SchemaError("Time", "expected a non-negative integer, got '" + attr.value + "'" + where);
                ev.timestamp = *t;
                have_time = true;
            } else if (attr.name == "Return") {
                ev.return_value = attr.value;
            } else {
                ev.attributes.emplace_back(attr.name, attr.value);
            }
        }
        if (!have_time) throw SchemaError("Time", "missing" + where);
        if (!p.events.empty() && ev.timestamp < p.events.back().timestamp) {
            throw SchemaError("Time", "timestamps must be non-decreasing" + where);
        }
        p.events.push_back(std::move(ev));
    }
    return p;
}

std::string serialize_profile(const Profile& p) {
    std::string out = "<?xml version=\"1.0\"?>\n<Profile>\n<Meta>\n";
    out += "<Hash>" + xml::escape(p.hash) + "</Hash>\n";
    out += "<Process_id>" + std::to_string(p.process_id) + "</Process_id>\n";
    out += "<Duration>" + std::to_string(p.duration_seconds) + "</Duration>\n";
    if (p.parent_hash) out += "<Parent_hash>" + xml::escape(*p.parent_hash) + "</Parent_hash>\n";
    out += "</Meta>\n";
    if (p.events.empty()) {
        out += "<Execution/>\n";
    } else {
        out += "<Execution>\n";
        for (const auto& ev : p.events) {
            out += "<" + ev.api_name;
            for (const auto& [k, v] : ev.attributes) {
                out += " " + k + "=\"" + xml::escape(v, true) + "\"";
            }
            if (ev.return_value) out += " Return=\"" + xml::escape(*ev.return_value, true) + "\"";
            out += " Time=\"" + std::to_string(ev.timestamp) + "\" />\n";
        }
        out += "</Execution>\n";
    }
    out += "</Profile>\n";
    return out;
}

BehaviorElement canonicalize_event(const ApiEvent& e, const FeatureConfig& cfg) {
    BehaviorElement token;
    encode_into(token, e.api_name);
    if (!cfg.with_params) return token;

    std::vector<std::pair<std::string_view, std::string>> attrs;
    attrs.reserve(e.attributes.size());
    for (const auto& [k, v] : e.attributes) {
        attrs.emplace_back(k, cfg.normalize_paths && is_path_like_key(k) ? ascii_lower(v) : v);
    }
    std::sort(attrs.begin(), attrs.end());
    for (const auto& [k, v] : attrs) {
        token.push_back('|');
        encode_into(token, k);
        token.push_back('=');
        encode_into(token, v);
    }
    if (cfg.include_return && e.return_value) {
        token += "|Return=";
        encode_into(token, *e.return_value);
    }
    return token;
}

void normalize_set(ElementSet& s) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
}

ElementSet extract_elements(const Profile& p, const FeatureConfig& cfg) {
    cfg.validate();
    std::vector<BehaviorElement> per_event;
    per_event.reserve(p.events.size());
    for (const auto& ev : p.events) per_event.push_back(canonicalize_event(ev, cfg));

    ElementSet out;
    const std::size_t n = cfg.ngram_n;
    if (n == 1) {
        out = std::move(per_event);
    } else if (per_event.size() >= n) {
        out.reserve(per_event.size() - n + 1);
        for (std::size_t i = 0; i + n <= per_event.size(); ++i) {
            std::string window = per_event[i];
            for (std::size_t k = 1; k < n; ++k) {
                window.push_back(';');
                window += per_event[i + k];
            }
            out.push_back(std::move(window));
        }
    }
    normalize_set(out);
    return out;
}

}  // namespace malfam
