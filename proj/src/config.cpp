#include "gp/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace gp {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view v) {
    T out{};
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw Error("not a valid number: '" + std::string(v) + "'");
    return out;
}

bool parse_bool(std::string_view v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw Error("expected true or false, got '" + std::string(v) + "'");
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
    char buf[40];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

struct Key {
    std::string name;
    std::function<std::string(const AppConfig&)> get;
    std::function<void(AppConfig&, std::string_view)> set;
};

// Field accessors are generic lambdas returning a reference, usable on const and mutable configs.
template <class F>
Key dbl(std::string name, F field) {
    return {std::move(name), [field](const AppConfig& c) { return fmt(field(c)); },
            [field](AppConfig& c, std::string_view v) { field(c) = parse_number<double>(v); }};
}

template <class F>
Key integer(std::string name, F field) {
    using T = std::remove_reference_t<decltype(field(std::declval<AppConfig&>()))>;
    return {std::move(name), [field](const AppConfig& c) { return std::to_string(field(c)); },
            [field](AppConfig& c, std::string_view v) { field(c) = parse_number<T>(v); }};
}

template <class F>
Key boolean(std::string name, F field) {
    return {std::move(name),
            [field](const AppConfig& c) { return std::string(field(c) ? "true" : "false"); },
            [field](AppConfig& c, std::string_view v) { field(c) = parse_bool(v); }};
}

template <class F>
Key text(std::string name, F field) {
    return {std::move(name), [field](const AppConfig& c) { return std::string(field(c)); },
            [field](AppConfig& c, std::string_view v) { field(c) = std::string(v); }};
}

template <class F>
void add_detect(std::vector<Key>& keys, const std::string& prefix, F d) {
    keys.push_back(dbl(prefix + ".scale0", [d](auto& c) -> auto& { return d(c).scale0; }));
    keys.push_back(dbl(prefix + ".scale_step", [d](auto& c) -> auto& { return d(c).scale_step; }));
    keys.push_back(integer(prefix + ".min_neighbors", [d](auto& c) -> auto& { return d(c).min_neighbors; }));
    keys.push_back(dbl(prefix + ".group_eps", [d](auto& c) -> auto& { return d(c).group_eps; }));
    keys.push_back(dbl(prefix + ".max_scale", [d](auto& c) -> auto& { return d(c).max_scale; }));
    keys.push_back(boolean(prefix + ".suppress_overlaps", [d](auto& c) -> auto& { return d(c).suppress_overlaps; }));
}

const std::vector<Key>& keys() {
    static const std::vector<Key> table = [] {
        std::vector<Key> k;
#define GP_REF(expr) [](auto& c) -> auto& { return expr; }
        k.push_back(dbl("codebook.eps_train", GP_REF(c.pipeline.codebook.eps_train)));
        k.push_back(dbl("codebook.eps_detect", GP_REF(c.pipeline.codebook.eps_detect)));
        k.push_back(dbl("codebook.alpha", GP_REF(c.pipeline.codebook.alpha)));
        k.push_back(dbl("codebook.beta", GP_REF(c.pipeline.codebook.beta)));
        k.push_back(Key{"models.hand_cascade", [](const AppConfig& c) { return c.pipeline.hand_cascade.string(); },
                        [](AppConfig& c, std::string_view v) { c.pipeline.hand_cascade = std::string(v); }});
        k.push_back(Key{"models.face_cascade", [](const AppConfig& c) { return c.pipeline.face_cascade.string(); },
                        [](AppConfig& c, std::string_view v) { c.pipeline.face_cascade = std::string(v); }});
        k.push_back(Key{"models.gallery", [](const AppConfig& c) { return c.pipeline.gallery.string(); },
                        [](AppConfig& c, std::string_view v) { c.pipeline.gallery = std::string(v); }});
        k.push_back(integer("skin.s_min", GP_REF(c.pipeline.gates.s_min)));
        k.push_back(integer("skin.v_min", GP_REF(c.pipeline.gates.v_min)));
        k.push_back(integer("skin.v_max", GP_REF(c.pipeline.gates.v_max)));
        k.push_back(integer("skin.threshold", GP_REF(c.pipeline.skin_threshold)));
        k.push_back(integer("skin.morph_k", GP_REF(c.pipeline.morph_k)));
        k.push_back(integer("camshift.max_iter", GP_REF(c.pipeline.camshift.max_iter)));
        k.push_back(dbl("camshift.eps", GP_REF(c.pipeline.camshift.eps)));
        k.push_back(dbl("camshift.lost_threshold", GP_REF(c.pipeline.camshift.lost_threshold)));
        k.push_back(integer("camshift.min_size", GP_REF(c.pipeline.camshift.min_size)));
        add_detect(k, "hand_detect", GP_REF(c.pipeline.hand_detect));
        add_detect(k, "face_detect", GP_REF(c.pipeline.face_detect));
        k.push_back(integer("cpdh.n_rho", GP_REF(c.pipeline.n_rho)));
        k.push_back(integer("cpdh.n_theta", GP_REF(c.pipeline.n_theta)));
        k.push_back(dbl("cpdh.tau", GP_REF(c.pipeline.tau)));
        k.push_back(boolean("cpdh.allow_mirror", GP_REF(c.pipeline.allow_mirror)));
        k.push_back(integer("pipeline.debounce_frames", GP_REF(c.pipeline.debounce_frames)));
        k.push_back(integer("pipeline.cooldown_frames", GP_REF(c.pipeline.cooldown_frames)));
        k.push_back(dbl("pipeline.fps_assumed", GP_REF(c.pipeline.fps_assumed)));
        k.push_back(integer("pipeline.face_every", GP_REF(c.pipeline.face_every)));
        k.push_back(dbl("pipeline.roi_scale", GP_REF(c.pipeline.roi_scale)));
        k.push_back(integer("pipeline.learner_id", GP_REF(c.pipeline.learner_id)));
        k.push_back(dbl("indicator.window_s", GP_REF(c.indicator.window_s)));
        k.push_back(dbl("indicator.c_ref", GP_REF(c.indicator.c_ref)));
        k.push_back(text("supervisor.host", GP_REF(c.supervisor.host)));
        k.push_back(integer("supervisor.port", GP_REF(c.supervisor.port)));
        k.push_back(Key{"supervisor.store", [](const AppConfig& c) { return c.supervisor.store.string(); },
                        [](AppConfig& c, std::string_view v) { c.supervisor.store = std::string(v); }});
        k.push_back(dbl("supervisor.heartbeat_interval_s", GP_REF(c.supervisor.heartbeat_interval_s)));
        k.push_back(integer("supervisor.missed_heartbeats", GP_REF(c.supervisor.missed_heartbeats)));
        k.push_back(dbl("export.bin_width_s", GP_REF(c.export_bin_width_s)));
        k.push_back(Key{"export.format",
                        [](const AppConfig& c) {
                            return std::string(c.export_format == ExportFormat::csv ? "csv" : "jsonl");
                        },
                        [](AppConfig& c, std::string_view v) { c.export_format = parse_export_format(v); }});
#undef GP_REF
        return k;
    }();
    return table;
}

constexpr std::string_view kWeightPrefix = "indicator.weight.";

void set_key(AppConfig& c, std::string_view key, std::string_view value) {
    if (key.substr(0, kWeightPrefix.size()) == kWeightPrefix) {
        const int cls = parse_number<int>(key.substr(kWeightPrefix.size()));
        c.indicator.weights[cls] = parse_number<double>(value);
        return;
    }
    for (const auto& k : keys())
        if (k.name == key) return k.set(c, value);
    throw Error("unknown key '" + std::string(key) + "'");
}

std::pair<std::string_view, std::string_view> split(std::string_view line) {
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error("expected key=value");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw Error("empty key");
    return {key, trim(line.substr(eq + 1))};
}

}  // namespace

void AppConfig::validate() const {
    pipeline.validate();
    indicator.validate();
    if (!(supervisor.heartbeat_interval_s > 0)) throw Error("supervisor.heartbeat_interval_s must be > 0");
    if (supervisor.missed_heartbeats < 1) throw Error("supervisor.missed_heartbeats must be >= 1");
    if (!(export_bin_width_s > 0)) throw Error("export.bin_width_s must be > 0");
}

AppConfig parse_config(std::string_view text, std::string_view origin) {
    AppConfig cfg;
    bool versioned = false;
    std::size_t n = 0;
    while (!text.empty()) {
        ++n;
        const auto nl = text.find('\n');
        const auto raw = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        const auto line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        try {
            const auto [key, value] = split(line);
            if (!versioned) {
                if (key != "version") throw Error("first setting must be version=1");
                if (value != "1") throw Error("unsupported version " + std::string(value));
                versioned = true;
                continue;
            }
            set_key(cfg, key, value);
        } catch (const Error& e) {
            throw Error(std::string(origin) + " line " + std::to_string(n) + ": " + e.what());
        }
    }
    if (!versioned) throw Error(std::string(origin) + ": missing version=1");
    try {
        cfg.validate();
    } catch (const Error& e) {
        throw Error(std::string(origin) + ": " + e.what());
    }
    return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

void apply_setting(AppConfig& cfg, std::string_view assignment) {
    try {
        const auto [key, value] = split(trim(assignment));
        set_key(cfg, key, value);
    } catch (const Error& e) {
        throw Error("--set " + std::string(assignment) + ": " + e.what());
    }
}

std::string dump_config(const AppConfig& cfg) {
    std::string out = "version=1\n";
    for (const auto& k : keys()) out += k.name + "=" + k.get(cfg) + "\n";
    for (const auto& [cls, w] : cfg.indicator.weights)
        out += std::string(kWeightPrefix) + std::to_string(cls) + "=" + fmt(w) + "\n";
    return out;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& k : keys()) out.push_back(k.name);
    out.push_back(std::string(kWeightPrefix) + "<class>");
    return out;
}

}  // namespace gp
