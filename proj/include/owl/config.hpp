#pragma once

// Scenario files: "key = value" lines, dotted keys, '#' comments.
//
// A file that starts from `preset = paper-3g` may set any subset of keys;
// otherwise every key in scenario_keys() must be present.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "owl/budget.hpp"
#include "owl/channel.hpp"
#include "owl/waveform.hpp"

namespace owl {

struct Scenario {
    std::string name = "paper-3g";
    LinkConfig link;
    PulseSpec pulse;
    double bit_rate = sdi_rate::g3;
    double sample_rate = kDefaultSampleRate;
    std::string source = "prbs15";  // prbs15, prbs7 or an OWLBITS path
    std::size_t n_bits = 100000;
    std::set<std::string> analyses{"eye", "mask", "ber", "latency"};
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 1;
    ErrorTarget target = ErrorTarget::per_hour;
    bool write_waveforms = false;

    static Scenario default_3g();
    bool wants(const std::string& analysis) const { return analyses.count(analysis) > 0; }
    /// Throws ConfigError naming the offending key.
    void validate() const;
};

struct ConfigEntry {
    std::string value;
    int line = 0;  // 0 for values that did not come from a file
};
using ConfigMap = std::map<std::string, ConfigEntry>;

/// Splits text into entries. Throws ConfigError on malformed or duplicate lines.
ConfigMap parse_config(std::istream& in);
ConfigMap parse_config_file(const std::filesystem::path& path);

/// All recognised keys, in file order.
const std::vector<std::string>& scenario_keys();

/// Builds a scenario from file entries plus overrides (overrides win).
Scenario make_scenario(const ConfigMap& file, const std::vector<std::pair<std::string, std::string>>& overrides = {});
Scenario load_scenario(const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, std::string>>& overrides = {});

/// Current value of one key, formatted as it would appear in a file.
std::string scenario_value(const Scenario& s, const std::string& key);
/// Full config text with every key; parsing it reproduces the scenario.
std::string to_config_text(const Scenario& s);

}  // namespace owl
