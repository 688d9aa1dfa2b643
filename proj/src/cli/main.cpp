// owl: command-line front end.
//
// Exit codes: 0 success, 1 an analysis check failed (reports are still
// written), 2 bad input (config, files, arguments).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "owl/budget.hpp"
#include "owl/config.hpp"
#include "owl/errors.hpp"
#include "owl/latency.hpp"
#include "owl/report.hpp"
#include "owl/sdi_codec.hpp"
#include "owl/waveform.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kBadInput = 2;

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

std::string si(double v, const char* unit) {
    struct P {
        double scale;
        const char* prefix;
    };
    static constexpr P prefixes[] = {{1e9, "G"}, {1e6, "M"}, {1e3, "k"}, {1, ""}, {1e-3, "m"},
                                     {1e-6, "u"}, {1e-9, "n"}, {1e-12, "p"}};
    const double a = std::abs(v);
    for (const auto& p : prefixes) {
        if (a >= p.scale || p.scale == 1e-12) {
            std::ostringstream os;
            os << std::setprecision(6) << v / p.scale << ' ' << p.prefix << unit;
            return os.str();
        }
    }
    return {};
}

struct SimulateArgs {
    std::string config;
    std::vector<std::string> sets;
    std::map<std::string, std::string> keys;
    bool quiet = false;
};

int cmd_simulate(const SimulateArgs& a, CLI::App& sub, const std::vector<std::string>& argv) {
    try {
        std::vector<std::pair<std::string, std::string>> overrides;
        // Precedence: per-key flags and --set > OWL_SEED > file > preset.
        if (const char* env = std::getenv("OWL_SEED")) overrides.emplace_back("seed", env);
        for (const auto& kv : a.sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw owl::ConfigError("--set expects key=value, got '" + kv + "'", kv);
            overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
        }
        for (const auto& [key, value] : a.keys) {
            if (sub.get_option("--" + key)->count() > 0) overrides.emplace_back(key, value);
        }
        const owl::Scenario s = owl::load_scenario(a.config, overrides);
        const auto outcome = owl::simulate(s, true);

        nlohmann::json meta{{"generated_at", utc_now()}, {"tool", "owl"}, {"argv", argv}};
        owl::write_json(s.output_dir / "metadata.json", meta);

        if (!a.quiet) {
            const auto& r = outcome.report;
            std::cout << "scenario " << s.name << ": " << s.n_bits << " bits at " << si(s.bit_rate, "b/s") << '\n';
            if (r.contains("errors")) std::cout << "  bit errors: " << r["errors"]["bit_errors"] << '\n';
            if (r.contains("eye")) {
                char line[96];
                std::snprintf(line, sizeof line, "  eye Q: %.2f, BER est %.3g\n", r["eye"]["q_factor"].get<double>(),
                              r["eye"]["ber_est"].get<double>());
                std::cout << line;
            }
            if (r.contains("latency") && r["latency"].contains("tau_sdi_s")) {
                std::cout << "  tau_sdi: " << si(r["latency"]["tau_sdi_s"].get<double>(), "s") << '\n';
            }
            if (r.contains("degraded")) std::cout << "  degraded: " << r["degraded"]["message"].get<std::string>() << '\n';
            std::cout << "  status: " << r["status"].get<std::string>() << " (" << (s.output_dir / "report.json").string()
                      << ")\n";
        }
        return outcome.pass() ? kOk : kCheckFailed;
    } catch (const owl::ConfigError& e) {
        std::cerr << "config error: " << e.what();
        if (!e.key().empty()) std::cerr << " [key " << e.key() << "]";
        std::cerr << '\n';
        return kBadInput;
    }
}

struct LatencyArgs {
    std::string a, b;
    double tau_bb = 12.18e-9;
    double ceq = 14e-9;
    double max_lag = 20e-9;
    bool subsample = false;
    std::string out, csv;
};

int cmd_latency(const LatencyArgs& a) {
    owl::Waveform x, y;
    try {
        x = owl::read_waveform(a.a);
        y = owl::read_waveform(a.b);
        if (x.sample_rate != y.sample_rate) throw std::invalid_argument("capture sample rates differ");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBadInput;
    }
    try {
        const auto d = owl::estimate_delay(x, y, a.max_lag, a.subsample);
        auto r = owl::compose_latency(d.tau_d_s, a.tau_bb, a.ceq);
        r.correlation_peak = d.correlation_peak;
        r.n_samples = std::min(x.size(), y.size());
        r.window_s = static_cast<double>(r.n_samples) / x.sample_rate;
        const auto j = owl::to_json(r);
        std::cout << "tau_d   " << si(r.tau_d_s, "s") << "  (peak " << r.correlation_peak << ")\n"
                  << "tau_bb  " << si(r.tau_bb_s, "s") << '\n'
                  << "tau_ow  " << si(r.tau_ow_s, "s") << '\n'
                  << "ceq     " << si(r.ceq_latency_s, "s") << '\n'
                  << "tau_sdi " << si(r.tau_sdi_s, "s") << '\n';
        if (!a.out.empty()) owl::write_json(a.out, j);
        if (!a.csv.empty()) owl::write_correlation_csv(a.csv, owl::cross_correlate(x, y, a.max_lag));
        return kOk;
    } catch (const owl::LowConfidence& e) {
        std::cerr << "low confidence: " << e.what() << "; peak " << e.correlation_peak() << " at "
                  << si(e.tau_d_s(), "s") << '\n';
        return kCheckFailed;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBadInput;
    }
}

struct BudgetArgs {
    double rate = owl::sdi_rate::g3;
    double headroom = 0.5;
    std::string target = "per_hour";
    std::optional<double> q;
    std::string variants_csv;
};

int cmd_budget(const BudgetArgs& a) {
    try {
        const auto target = owl::parse_target(a.target);
        const auto v = owl::variant_lookup(a.rate);
        std::cout << "bit rate        " << si(a.rate, "b/s") << '\n'
                  << "min bandwidth   " << si(owl::min_bandwidth(a.rate, a.headroom), "Hz") << " (headroom "
                  << a.headroom << ")\n"
                  << "unit interval   " << si(1.0 / a.rate, "s") << '\n'
                  << "variant         " << v.name << " / " << v.standard << '\n';
        for (const auto& f : v.video_formats) std::cout << "  format        " << f << '\n';
        const auto& knee = owl::crash_knee(target);
        std::cout << "crash knee      " << owl::target_name(target) << ": Q >= " << knee.q_threshold << " ("
                  << std::setprecision(3) << owl::q_to_snr_db(knee.q_threshold) << " dB), BER " << knee.ber_threshold
                  << ", exact Q " << std::setprecision(4) << owl::ber_to_q(knee.ber_threshold) << '\n';
        if (a.q) {
            const auto verdict = owl::crash_knee_check(*a.q, target);
            std::cout << "measured Q " << *a.q << ": " << (verdict.pass ? "pass" : "fail") << ", margin "
                      << std::setprecision(3) << verdict.margin_db << " dB\n";
        }
        if (!a.variants_csv.empty()) owl::write_variants_csv(a.variants_csv);
        if (a.q && !owl::crash_knee_check(*a.q, target).pass) return kCheckFailed;
        return kOk;
    } catch (const owl::NotFound& e) {
        std::cerr << "not found: " << e.what() << '\n';
        return kBadInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBadInput;
    }
}

struct CodecArgs {
    std::string pattern = "prbs15";
    std::size_t n = 32767;
    double rate = owl::sdi_rate::g3;
    std::string in, out;
};

int cmd_codec(CLI::App& codec, const CodecArgs& a) {
    try {
        if (codec.got_subcommand("prbs")) {
            owl::LfsrSpec spec;
            if (a.pattern == "prbs15") spec = owl::LfsrSpec::prbs15();
            else if (a.pattern == "prbs7") spec = owl::LfsrSpec::prbs7();
            else throw std::invalid_argument("pattern must be prbs15 or prbs7");
            const auto r = owl::generate_prbs(spec, a.n, a.rate);
            if (r.warning) std::cerr << "warning: " << *r.warning << '\n';
            owl::write_bits(a.out, r.stream);
            std::cout << "wrote " << a.n << " bits to " << a.out << '\n';
        } else if (codec.got_subcommand("scramble")) {
            owl::write_bits(a.out, owl::scramble(owl::read_bits(a.in)));
        } else if (codec.got_subcommand("descramble")) {
            owl::write_bits(a.out, owl::descramble(owl::read_bits(a.in)));
        } else if (codec.got_subcommand("info")) {
            const auto b = owl::read_bits(a.in);
            std::size_t ones = 0;
            for (auto bit : b.bits) ones += bit;
            std::cout << "bits      " << b.size() << '\n'
                      << "ones      " << ones << '\n'
                      << "bit rate  " << si(b.bit_rate, "b/s") << (b.is_standard_rate() ? "" : " (non-standard)") << '\n';
        }
        return kOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBadInput;
    }
}

bool is_csv(const std::string& p) { return std::filesystem::path(p).extension() == ".csv"; }

int cmd_convert(const std::string& in, const std::string& out, const std::string& unit) {
    try {
        owl::Unit u = owl::Unit::volts;
        if (unit == "amperes") u = owl::Unit::amperes;
        else if (unit == "watts") u = owl::Unit::watts;
        else if (unit != "volts") throw std::invalid_argument("unit must be volts, amperes or watts");
        const owl::Waveform w = is_csv(in) ? owl::read_waveform_csv(in, u) : owl::read_waveform(in);
        if (is_csv(out)) owl::write_waveform_csv(out, w);
        else owl::write_waveform(out, w);
        std::cout << "converted " << w.size() << " samples at " << si(w.sample_rate, "Sa/s") << '\n';
        return kOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBadInput;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"VCSEL optical wireless SDI link simulator and analysis toolkit", "owl"};
    app.require_subcommand(1);
    const std::vector<std::string> argv_list(argv, argv + argc);

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Run a scenario and write report.json, eye.csv and eye.svg");
    s->add_option("config", sim.config, "Scenario file")->required()->check(CLI::ExistingFile);
    s->add_option("--set", sim.sets, "Override any key: --set key=value (repeatable)");
    s->add_flag("-q,--quiet", sim.quiet, "Suppress the summary");
    for (const auto& key : owl::scenario_keys()) s->add_option("--" + key, sim.keys[key], "Override " + key);

    LatencyArgs lat;
    auto* l = app.add_subcommand("latency", "Estimate the delay between two OWLWAV1 captures and compose latency");
    l->add_option("capture_a", lat.a, "Reference capture")->required();
    l->add_option("capture_b", lat.b, "Delayed capture")->required();
    l->add_option("--tau-bb", lat.tau_bb, "Back-to-back reference delay, seconds")->capture_default_str();
    l->add_option("--ceq-latency", lat.ceq, "Cable equalizer latency, seconds")->capture_default_str();
    l->add_option("--max-lag", lat.max_lag, "Largest lag searched, seconds")->capture_default_str();
    l->add_flag("--subsample", lat.subsample, "Parabolic refinement of the peak");
    l->add_option("-o,--output", lat.out, "Write the report as JSON");
    l->add_option("--csv", lat.csv, "Write the correlation as CSV");

    BudgetArgs bud;
    auto* b = app.add_subcommand("budget", "Bandwidth rule, variant lookup and crash-knee thresholds");
    b->add_option("--rate", bud.rate, "Bit rate, b/s")->capture_default_str();
    b->add_option("--headroom", bud.headroom, "Bandwidth headroom factor")->capture_default_str();
    b->add_option("--target", bud.target, "per_second or per_hour")->capture_default_str();
    b->add_option("--q", bud.q, "Measured Q to check against the target");
    b->add_option("--variants-csv", bud.variants_csv, "Export the variant table");

    CodecArgs cod;
    auto* c = app.add_subcommand("codec", "Bit-stream tools (OWLBITS files)");
    c->require_subcommand(1);
    auto* cp = c->add_subcommand("prbs", "Generate a PRBS");
    cp->add_option("--pattern", cod.pattern, "prbs15 or prbs7")->capture_default_str();
    cp->add_option("-n,--bits", cod.n, "Number of bits")->capture_default_str();
    cp->add_option("--rate", cod.rate, "Bit rate, b/s")->capture_default_str();
    cp->add_option("-o,--output", cod.out, "Output file")->required();
    for (const char* name : {"scramble", "descramble"}) {
        auto* sc = c->add_subcommand(name, std::string(name) + " a bit file");
        sc->add_option("input", cod.in)->required()->check(CLI::ExistingFile);
        sc->add_option("output", cod.out)->required();
    }
    auto* ci = c->add_subcommand("info", "Summarize a bit file");
    ci->add_option("input", cod.in)->required()->check(CLI::ExistingFile);

    std::string conv_in, conv_out, conv_unit = "volts";
    auto* cv = app.add_subcommand("convert", "Convert waveforms between OWLWAV1 and CSV (by extension)");
    cv->add_option("input", conv_in)->required()->check(CLI::ExistingFile);
    cv->add_option("output", conv_out)->required();
    cv->add_option("--unit", conv_unit, "Unit for CSV input")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kBadInput;
    }

    try {
        if (*s) return cmd_simulate(sim, *s, argv_list);
        if (*l) return cmd_latency(lat);
        if (*b) return cmd_budget(bud);
        if (*c) return cmd_codec(*c, cod);
        if (*cv) return cmd_convert(conv_in, conv_out, conv_unit);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBadInput;
    }
    return kBadInput;
}
