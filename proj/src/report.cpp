#include "owl/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>

#include "owl/errors.hpp"

namespace owl {

namespace {

using nlohmann::json;

constexpr std::size_t kMaskBits = 20000;
constexpr std::size_t kLatencyWindowSamples = 32001;
constexpr double kLatencyMaxLag = 20e-9;

// Non-finite values become null rather than invalid JSON.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

BitStream source_bits(const Scenario& s) {
    if (s.source == "prbs15") return generate_prbs(LfsrSpec::prbs15(), s.n_bits, s.bit_rate).stream;
    if (s.source == "prbs7") return generate_prbs(LfsrSpec::prbs7(), s.n_bits, s.bit_rate).stream;
    BitStream b = read_bits(s.source);
    if (std::abs(b.bit_rate - s.bit_rate) > 1e-6 * s.bit_rate) {
        throw ConfigError("source: bit file rate " + std::to_string(b.bit_rate) + " differs from bit_rate", "source");
    }
    return b;
}

}  // namespace

json to_json(const EyeMetrics& m) {
    return {{"q_factor", number(m.q_factor)},
            {"snr_db", number(m.snr_db)},
            {"ber_est", number(m.ber_est)},
            {"v_high_mean", m.v_high_mean},
            {"v_low_mean", m.v_low_mean},
            {"sigma_high", m.sigma_high},
            {"sigma_low", m.sigma_low},
            {"vertical_opening_v", m.vertical_opening_v},
            {"horizontal_opening_ui", m.horizontal_opening_ui}};
}

json to_json(const ComplianceReport& r) {
    json rules = json::array();
    for (const auto& rule : r.rules) {
        rules.push_back({{"name", rule.name},
                         {"measured", rule.measured},
                         {"lower", number(rule.lower)},
                         {"upper", number(rule.upper)},
                         {"unit", rule.unit},
                         {"pass", rule.pass}});
    }
    return {{"all_pass", r.all_pass()}, {"rules", rules}};
}

json to_json(const EdgeTimes& e) {
    return {{"t_rise_s", e.t_rise_s},       {"t_fall_s", e.t_fall_s},   {"overshoot_frac", e.overshoot_frac},
            {"undershoot_frac", e.undershoot_frac}, {"vpp", e.vpp()}, {"dc_offset", e.dc_offset()},
            {"n_rising", e.n_rising},       {"n_falling", e.n_falling}};
}

json to_json(const LatencyReport& r) {
    return {{"tau_d_s", r.tau_d_s},
            {"tau_bb_s", r.tau_bb_s},
            {"tau_ow_s", r.tau_ow_s},
            {"ceq_latency_s", r.ceq_latency_s},
            {"tau_sdi_s", r.tau_sdi_s},
            {"correlation_peak", r.correlation_peak},
            {"window_s", r.window_s},
            {"n_samples", r.n_samples}};
}

json to_json(const KneeVerdict& v) {
    return {{"pass", v.pass},
            {"measured_q", number(v.measured_q)},
            {"threshold_q", v.threshold_q},
            {"margin_db", number(v.margin_db)},
            {"exact_q", v.exact_q}};
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    os << j.dump(2) << '\n';
}

SimulationOutcome simulate(const Scenario& s, bool write_artifacts) {
    s.validate();
    SimulationOutcome out;
    json& rep = out.report;
    rep["schema_version"] = kReportSchemaVersion;
    json cfg = json::object();
    for (const auto& k : scenario_keys()) cfg[k] = scenario_value(s, k);
    rep["scenario"] = cfg;

    if (write_artifacts) std::filesystem::create_directories(s.output_dir);
    auto fail = [&](const std::string& check) { out.failed_checks.push_back(check); };

    const BitStream bits = source_bits(s);
    const double ui = s.pulse.ui;

    if (s.wants("mask")) {
        BitStream head = bits;
        head.bits.resize(std::min(bits.size(), kMaskBits));
        const Waveform src = synthesize(nrzi_encode(scramble(head), -1), s.pulse, s.sample_rate);
        try {
            const auto e = edge_times(src, ui);
            const auto r = mask_check(e);
            rep["mask"] = to_json(r);
            rep["mask"]["readback"] = to_json(e);
            if (!r.all_pass()) fail("mask");
        } catch (const std::invalid_argument& e) {
            rep["mask"] = {{"error", e.what()}};
            fail("mask");
        }
    }

    ChainOptions opts;
    opts.keep_intermediate = s.write_waveforms;
    opts.sample_rate = s.sample_rate;
    std::optional<ChainTrace> trace;
    try {
        trace = run_chain(bits, s.link, s.pulse, opts);
    } catch (const DegradedSignal& e) {
        out.degraded = true;
        rep["degraded"] = {{"stage", "ceq"}, {"message", e.what()}, {"measured_q", number(e.measured_q())}};
        rep["eye"] = {{"q_factor", number(e.measured_q())},
                      {"ber_est", e.measured_q() > 0 ? number(q_to_ber(e.measured_q())) : json(0.5)}};
        for (const char* a : {"eye", "ber", "latency"}) {
            if (s.wants(a)) fail(a);
        }
    }

    if (trace) {
        rep["chain"] = {{"group_delay_s", trace->group_delay_s},
                        {"sample_phase_s", trace->sample_phase_s},
                        {"level_offset", trace->level_offset},
                        {"polarity_inverted", trace->polarity_inverted}};

        if (s.wants("ber")) {
            rep["errors"] = {{"bits", bits.size()},
                             {"bit_errors", trace->bit_errors},
                             {"missing_bits", trace->missing_bits},
                             {"ber", static_cast<double>(trace->bit_errors) / static_cast<double>(bits.size())}};
            if (trace->bit_errors != 0) fail("ber");
        }

        if (s.wants("eye")) {
            EyeOptions eo;
            eo.clock_phase_s = trace->sample_phase_s;
            const auto eye = build_eye(trace->eye_waveform, ui, eo);
            try {
                const auto m = q_factor(eye);
                rep["eye"] = to_json(m);
                const auto v = crash_knee_check(m.q_factor, s.target);
                rep["crash_knee"] = to_json(v);
                rep["crash_knee"]["target"] = target_name(s.target);
                if (!v.pass) fail("eye");
            } catch (const DegradedSignal& e) {
                out.degraded = true;
                rep["degraded"] = {{"stage", "eye"}, {"message", e.what()}, {"measured_q", number(e.measured_q())}};
                rep["eye"] = {{"q_factor", number(e.measured_q())},
                              {"ber_est", e.measured_q() > 0 ? number(q_to_ber(e.measured_q())) : json(0.5)}};
                fail("eye");
            }
            rep["eye"]["n_traces"] = eye.n_traces;
            rep["eye"]["clock_phase_s"] = eye.clock_phase_s;
            if (write_artifacts) {
                write_eye_csv(s.output_dir / "eye.csv", eye);
                write_eye_svg(s.output_dir / "eye.svg", eye);
            }
        }

        if (s.wants("latency")) {
            // Back-to-back reference: the source through the reference cable.
            const Waveform& src = trace->stage("source");
            const Waveform& rx = trace->stage("rx_pre_ceq");
            const std::size_t n = std::min({kLatencyWindowSamples, src.size(), rx.size()});
            Waveform ref = delay(src, s.link.cable_delay_s);
            ref.samples.resize(n);
            Waveform got = rx;
            got.samples.resize(n);
            try {
                const auto d = estimate_delay(ref, got, kLatencyMaxLag);
                auto r = compose_latency(d.tau_d_s, s.link.cable_delay_s, trace->ceq_latency_s);
                r.correlation_peak = d.correlation_peak;
                r.window_s = static_cast<double>(n) / s.sample_rate;
                r.n_samples = n;
                rep["latency"] = to_json(r);
                if (write_artifacts) {
                    write_correlation_csv(s.output_dir / "correlation.csv", cross_correlate(ref, got, kLatencyMaxLag));
                }
            } catch (const LowConfidence& e) {
                rep["latency"] = {{"error", e.what()},
                                  {"tau_d_s", e.tau_d_s()},
                                  {"correlation_peak", e.correlation_peak()}};
                fail("latency");
            }
        }

        if (write_artifacts && s.write_waveforms) {
            const auto dir = s.output_dir / "waveforms";
            std::filesystem::create_directories(dir);
            for (const auto& st : trace->stages) write_waveform(dir / (st.name + ".owlwav"), st.waveform);
            write_bits(dir / "tx.owlbits", bits);
            write_bits(dir / "recovered.owlbits", trace->recovered);
        }
    }

    json checks = json::object();
    for (const char* a : {"eye", "mask", "ber", "latency"}) {
        if (!s.wants(a)) continue;
        checks[a] = std::find(out.failed_checks.begin(), out.failed_checks.end(), a) == out.failed_checks.end();
    }
    rep["checks"] = checks;
    rep["status"] = out.pass() ? "pass" : "fail";
    if (write_artifacts) write_json(s.output_dir / "report.json", rep);
    return out;
}

}  // namespace owl
