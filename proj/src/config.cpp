#include "owl/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>
#include <stdexcept>

#include "owl/errors.hpp"

namespace owl {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string fmt_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double to_double(const std::string& s) {
    double v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw std::invalid_argument("expected a number");
    return v;
}

std::uint64_t to_u64(const std::string& s) {
    std::uint64_t v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw std::invalid_argument("expected a non-negative integer");
    return v;
}

bool to_bool(const std::string& s) {
    if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return false;
    throw std::invalid_argument("expected true or false");
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

struct Key {
    std::string name;
    std::function<void(Scenario&, const std::string&)> set;
    std::function<std::string(const Scenario&)> get;
};

Key num(std::string name, double Scenario::*field) {
    return {std::move(name), [field](Scenario& s, const std::string& v) { s.*field = to_double(v); },
            [field](const Scenario& s) { return fmt_double(s.*field); }};
}

template <typename Get>
Key num(std::string name, Get ref) {
    return {std::move(name), [ref](Scenario& s, const std::string& v) { ref(s) = to_double(v); },
            [ref](const Scenario& s) { return fmt_double(ref(const_cast<Scenario&>(s))); }};
}

template <typename Get>
Key flag(std::string name, Get ref) {
    return {std::move(name), [ref](Scenario& s, const std::string& v) { ref(s) = to_bool(v); },
            [ref](const Scenario& s) { return fmt_bool(ref(const_cast<Scenario&>(s))); }};
}

const std::vector<Key>& key_table() {
    static const std::vector<Key> keys = [] {
        std::vector<Key> k;
        k.push_back({"name", [](Scenario& s, const std::string& v) { s.name = v; },
                     [](const Scenario& s) { return s.name; }});
        k.push_back({"source",
                     [](Scenario& s, const std::string& v) {
                         if (v.empty()) throw std::invalid_argument("expected prbs15, prbs7 or a file path");
                         s.source = v;
                     },
                     [](const Scenario& s) { return s.source; }});
        k.push_back({"n_bits", [](Scenario& s, const std::string& v) { s.n_bits = static_cast<std::size_t>(to_u64(v)); },
                     [](const Scenario& s) { return std::to_string(s.n_bits); }});
        k.push_back({"analyses",
                     [](Scenario& s, const std::string& v) {
                         std::set<std::string> out;
                         std::stringstream ss(v);
                         std::string item;
                         while (std::getline(ss, item, ',')) {
                             item = trim(item);
                             if (item.empty()) continue;
                             if (item != "eye" && item != "mask" && item != "ber" && item != "latency") {
                                 throw std::invalid_argument("unknown analysis '" + item + "' (eye|mask|ber|latency)");
                             }
                             out.insert(item);
                         }
                         s.analyses = std::move(out);
                     },
                     [](const Scenario& s) {
                         std::string out;
                         // File order, not set order.
                         for (const char* a : {"eye", "mask", "ber", "latency"}) {
                             if (!s.wants(a)) continue;
                             if (!out.empty()) out += ", ";
                             out += a;
                         }
                         return out;
                     }});
        k.push_back({"output_dir", [](Scenario& s, const std::string& v) { s.output_dir = v; },
                     [](const Scenario& s) { return s.output_dir.string(); }});
        k.push_back({"seed", [](Scenario& s, const std::string& v) { s.seed = to_u64(v); },
                     [](const Scenario& s) { return std::to_string(s.seed); }});
        k.push_back({"target", [](Scenario& s, const std::string& v) { s.target = parse_target(v); },
                     [](const Scenario& s) { return std::string(target_name(s.target)); }});
        k.push_back(flag("write_waveforms", [](Scenario& s) -> bool& { return s.write_waveforms; }));
        k.push_back(num("bit_rate", &Scenario::bit_rate));
        k.push_back(num("sample_rate", &Scenario::sample_rate));

        k.push_back(num("pulse.vpp", [](Scenario& s) -> double& { return s.pulse.vpp; }));
        k.push_back(num("pulse.dc_offset", [](Scenario& s) -> double& { return s.pulse.dc_offset; }));
        k.push_back(num("pulse.t_rise_s", [](Scenario& s) -> double& { return s.pulse.t_rise; }));
        k.push_back(num("pulse.t_fall_s", [](Scenario& s) -> double& { return s.pulse.t_fall; }));
        k.push_back(num("pulse.overshoot_frac", [](Scenario& s) -> double& { return s.pulse.overshoot_frac; }));

        k.push_back(num("pad_loss_db", [](Scenario& s) -> double& { return s.link.pad_loss_db; }));
        k.push_back(num("splitter_loss_db", [](Scenario& s) -> double& { return s.link.splitter_loss_db; }));
        k.push_back(flag("splitter_enabled", [](Scenario& s) -> bool& { return s.link.splitter_enabled; }));
        k.push_back(num("bt_il_db", [](Scenario& s) -> double& { return s.link.bt_il_db; }));
        k.push_back(num("v_dc", [](Scenario& s) -> double& { return s.link.v_dc; }));
        k.push_back(num("i_dc", [](Scenario& s) -> double& { return s.link.i_dc; }));
        k.push_back(num("drive_impedance", [](Scenario& s) -> double& { return s.link.drive_impedance; }));
        k.push_back(num("vcsel.i_th", [](Scenario& s) -> double& { return s.link.vcsel.i_th; }));
        k.push_back(num("vcsel.i_roll", [](Scenario& s) -> double& { return s.link.vcsel.i_roll; }));
        k.push_back(num("vcsel.p_max", [](Scenario& s) -> double& { return s.link.vcsel.p_max; }));
        k.push_back(num("vcsel.slope_w_per_a", [](Scenario& s) -> double& { return s.link.vcsel.slope_w_per_a; }));
        k.push_back(num("vcsel.f3db_hz", [](Scenario& s) -> double& { return s.link.vcsel.f3db; }));
        k.push_back(num("vcsel.wavelength_nm", [](Scenario& s) -> double& { return s.link.vcsel.wavelength_nm; }));
        k.push_back(num("fs_loss_db", [](Scenario& s) -> double& { return s.link.fs_loss_db; }));
        k.push_back(num("rx.responsivity_a_per_w", [](Scenario& s) -> double& { return s.link.rx.responsivity_a_per_w; }));
        k.push_back(num("rx.tia_gain_v_per_a", [](Scenario& s) -> double& { return s.link.rx.tia_gain_v_per_a; }));
        k.push_back(num("rx.f_low_hz", [](Scenario& s) -> double& { return s.link.rx.f_low; }));
        k.push_back(num("rx.f_high_hz", [](Scenario& s) -> double& { return s.link.rx.f_high; }));
        k.push_back(flag("rx.inverting", [](Scenario& s) -> bool& { return s.link.rx.inverting; }));
        k.push_back(num("rx.vpp_max", [](Scenario& s) -> double& { return s.link.rx.vpp_max; }));
        k.push_back(flag("rx.settled_start", [](Scenario& s) -> bool& { return s.link.rx.settled_start; }));
        k.push_back(num("bpi_il_db", [](Scenario& s) -> double& { return s.link.bpi_il_db; }));
        k.push_back(flag("bpi_enabled", [](Scenario& s) -> bool& { return s.link.bpi_enabled; }));
        k.push_back(num("cable_delay_s", [](Scenario& s) -> double& { return s.link.cable_delay_s; }));
        k.push_back(flag("ceq.enabled", [](Scenario& s) -> bool& { return s.link.ceq.enabled; }));
        k.push_back(num("ceq.zero_hz", [](Scenario& s) -> double& { return s.link.ceq.zero_hz; }));
        k.push_back(num("ceq.pole_rb_factor", [](Scenario& s) -> double& { return s.link.ceq.pole_rb_factor; }));
        k.push_back({"ceq.slicer_threshold_v",
                     [](Scenario& s, const std::string& v) {
                         if (v == "auto") s.link.ceq.slicer_threshold_v.reset();
                         else s.link.ceq.slicer_threshold_v = to_double(v);
                     },
                     [](const Scenario& s) {
                         const auto& t = s.link.ceq.slicer_threshold_v;
                         return t ? fmt_double(*t) : std::string("auto");
                     }});
        k.push_back(num("ceq.latency_s", [](Scenario& s) -> double& { return s.link.ceq.latency_s; }));
        k.push_back(num("noise_sigma_v", [](Scenario& s) -> double& { return s.link.noise_sigma_v; }));
        return k;
    }();
    return keys;
}

const Key* find_key(const std::string& name) {
    for (const auto& k : key_table()) {
        if (k.name == name) return &k;
    }
    return nullptr;
}

void finish(Scenario& s) {
    s.pulse.ui = 1.0 / s.bit_rate;
    s.link.seed = s.seed;
}

}  // namespace

Scenario Scenario::default_3g() {
    Scenario s;
    s.name = "paper-3g";
    s.link = LinkConfig::default_3g();
    s.pulse = PulseSpec::sdi_3g();
    s.output_dir = "out/paper-3g";
    finish(s);
    return s;
}

void Scenario::validate() const {
    auto fail = [](const std::string& key, const std::string& why) { throw ConfigError(key + ": " + why, key); };
    if (!(bit_rate > 0)) fail("bit_rate", "must be positive");
    if (!(sample_rate * pulse.ui >= 4.0)) fail("sample_rate", "must give at least 4 samples per UI");
    if (wants("eye") && n_bits < 10000) fail("n_bits", "eye analysis needs at least 10000 bits");
    if (n_bits == 0) fail("n_bits", "must be positive");
    try {
        pulse.validate();
    } catch (const std::invalid_argument& e) {
        fail("pulse", e.what());
    }
    try {
        link.validate();
    } catch (const std::invalid_argument& e) {
        fail("link", e.what());
    }
}

ConfigMap parse_config(std::istream& in) {
    ConfigMap out;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string text = trim(std::string_view(raw).substr(0, hash));
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line) + ": expected 'key = value'", "", line);
        }
        std::string key = trim(std::string_view(text).substr(0, eq));
        std::string value = trim(std::string_view(text).substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(line) + ": empty key", "", line);
        if (out.count(key)) {
            throw ConfigError("line " + std::to_string(line) + ": duplicate key " + key, key, line);
        }
        out[key] = {std::move(value), line};
    }
    return out;
}

ConfigMap parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string(), "", 0);
    return parse_config(in);
}

const std::vector<std::string>& scenario_keys() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& k : key_table()) n.push_back(k.name);
        return n;
    }();
    return names;
}

Scenario make_scenario(const ConfigMap& file, const std::vector<std::pair<std::string, std::string>>& overrides) {
    ConfigMap merged = file;
    for (const auto& [k, v] : overrides) merged[k] = {v, 0};

    Scenario s;
    bool from_preset = false;
    if (auto it = merged.find("preset"); it != merged.end()) {
        if (it->second.value != "paper-3g") {
            throw ConfigError("line " + std::to_string(it->second.line) + ": unknown preset '" + it->second.value + "'",
                              "preset", it->second.line);
        }
        s = Scenario::default_3g();
        from_preset = true;
    }

    for (const auto& [key, entry] : merged) {
        if (key == "preset") continue;
        const Key* k = find_key(key);
        const std::string where = entry.line > 0 ? "line " + std::to_string(entry.line) + ": " : "";
        if (!k) throw ConfigError(where + "unknown key " + key, key, entry.line);
        try {
            k->set(s, entry.value);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(where + key + " = '" + entry.value + "': " + e.what(), key, entry.line);
        }
    }
    if (!from_preset) {
        for (const auto& k : key_table()) {
            if (!merged.count(k.name)) throw ConfigError("missing required key " + k.name, k.name, 0);
        }
    }
    finish(s);
    s.validate();
    return s;
}

Scenario load_scenario(const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, std::string>>& overrides) {
    return make_scenario(parse_config_file(path), overrides);
}

std::string scenario_value(const Scenario& s, const std::string& key) {
    const Key* k = find_key(key);
    if (!k) throw NotFound("unknown key " + key);
    return k->get(s);
}

std::string to_config_text(const Scenario& s) {
    std::string out;
    for (const auto& k : key_table()) out += k.name + " = " + k.get(s) + "\n";
    return out;
}

}  // namespace owl
