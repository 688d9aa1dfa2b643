#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "owl/analysis.hpp"
#include "owl/channel.hpp"
#include "owl/errors.hpp"

using namespace owl;

namespace {

constexpr double kUi = 1.0 / sdi_rate::g3;

// Piecewise-constant waveform: value v[k] held for the whole of UI k.
Waveform held(const std::vector<double>& v, int samples_per_ui = 16) {
    Waveform w;
    w.sample_rate = samples_per_ui / kUi;
    for (double x : v) w.samples.insert(w.samples.end(), static_cast<std::size_t>(samples_per_ui), x);
    return w;
}

struct TwoLevel {
    std::vector<double> values;
    double q_oracle;
};

// Random two-level symbols with Gaussian noise per UI; Q from the drawn values.
TwoLevel gaussian_clusters(std::size_t n, double mu, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    const auto bits = oracle::random_bits(n, seed + 1);
    TwoLevel t;
    double s[2] = {0, 0}, ss[2] = {0, 0}, c[2] = {0, 0};
    for (std::size_t k = 0; k < n; ++k) {
        const double v = (bits[k] ? mu : -mu) + noise(rng);
        t.values.push_back(v);
        s[bits[k]] += v, ss[bits[k]] += v * v, c[bits[k]] += 1;
    }
    double m[2], sd[2];
    for (int i = 0; i < 2; ++i) m[i] = s[i] / c[i], sd[i] = std::sqrt(ss[i] / c[i] - m[i] * m[i]);
    t.q_oracle = (m[1] - m[0]) / (sd[1] + sd[0]);
    return t;
}

EyeDiagram eye_at_zero(const Waveform& w) {
    EyeOptions o;
    o.clock_phase_s = 0.5 * kUi;
    return build_eye(w, kUi, o);
}

EdgeTimes at_limits() {
    EdgeTimes e;
    e.t_rise_s = 135e-12;
    e.t_fall_s = 135e-12;
    e.overshoot_frac = 0.10;
    e.undershoot_frac = 0.10;
    e.v_high = 0.4;
    e.v_low = -0.4;
    e.n_rising = e.n_falling = 8;
    return e;
}

std::vector<std::string> failing(const ComplianceReport& r) {
    std::vector<std::string> f;
    for (const auto& rule : r.rules) {
        if (!rule.pass) f.push_back(rule.name);
    }
    return f;
}

}  // namespace

TEST(Eye, SquareWaveHasTwoZeroVarianceClusters) {
    std::vector<double> v;
    for (int k = 0; k < 200; ++k) v.push_back(k % 2 ? 0.4 : -0.4);
    const auto eye = eye_at_zero(held(v));
    const auto m = q_factor(eye);
    EXPECT_NEAR(m.v_high_mean, 0.4, eye.amp_bin_width());
    EXPECT_NEAR(m.v_low_mean, -0.4, eye.amp_bin_width());
    EXPECT_EQ(m.sigma_high, 0.0);
    EXPECT_EQ(m.sigma_low, 0.0);
    EXPECT_TRUE(std::isinf(m.q_factor));
    EXPECT_EQ(m.ber_est, 0.0);
}

TEST(Eye, HistogramCountsOneSamplePerColumnPerTrace) {
    const auto t = gaussian_clusters(500, 0.4, 0.03, 3);
    for (int pb : {64, 100, 256}) {
        EyeOptions o;
        o.phase_bins = pb;
        o.amp_bins = 50;
        const auto eye = build_eye(held(t.values), kUi, o);
        EXPECT_GT(eye.n_traces, 490u);
        EXPECT_EQ(eye.total(), eye.n_traces * static_cast<std::size_t>(pb));
        EXPECT_EQ(eye.hist.size(), static_cast<std::size_t>(pb) * 50u);
    }
}

TEST(Eye, DcWaveformIsAClosedLine) {
    const auto w = held(std::vector<double>(100, 0.25));
    EXPECT_EQ(vertical_opening_at(w, kUi, 0.0), 0.0);
    const auto eye = eye_at_zero(w);
    std::set<int> rows;
    for (int p = 0; p < eye.phase_bins; ++p) {
        for (int a = 0; a < eye.amp_bins; ++a) {
            if (eye.count(p, a)) rows.insert(a);
        }
    }
    EXPECT_EQ(rows.size(), 1u);
    EXPECT_THROW(q_factor(eye), DegradedSignal);
}

TEST(Eye, AutoPhaseIsArgmaxOfGrid) {
    const auto bits = generate_prbs(LfsrSpec::prbs15(), 3000).stream;
    auto pulse = PulseSpec::sdi_3g();
    pulse.t_rise = pulse.t_fall = 150e-12;
    const auto w = synthesize(nrzi_encode(bits, 1), pulse, 32e9, 0.37 * kUi);
    const auto eye = build_eye(w, kUi);
    const double best = vertical_opening_at(w, kUi, eye.clock_phase_s);
    for (int i = 0; i < 64; ++i) EXPECT_GE(best + 1e-12, vertical_opening_at(w, kUi, kUi * i / 64.0)) << i;
    // The optimum sits mid-bit, half a UI after the shifted edges.
    const double frac = std::fmod(eye.clock_phase_s - 0.37 * kUi + 10 * kUi, kUi) / kUi;
    EXPECT_NEAR(frac, 0.5, 0.1);
}

TEST(Eye, InputGuards) {
    EXPECT_THROW(build_eye(held(std::vector<double>(20, 0.0)), kUi), std::invalid_argument);
    EXPECT_THROW(build_eye(held(std::vector<double>(100, 0.0), 3), kUi), std::invalid_argument);
    EyeOptions bad;
    bad.phase_bins = 1;
    EXPECT_THROW(build_eye(held(std::vector<double>(100, 0.0)), kUi, bad), std::invalid_argument);
}

TEST(Eye, MergeSumsCounts) {
    const auto t = gaussian_clusters(300, 0.4, 0.02, 9);
    auto eye = eye_at_zero(held(t.values));
    const auto once = eye;
    eye.merge(once);
    EXPECT_EQ(eye.total(), 2 * once.total());
    EXPECT_EQ(eye.n_traces, 2 * once.n_traces);
    EXPECT_NEAR(q_factor(eye).q_factor, q_factor(once).q_factor, 1e-9);
    EyeOptions o;
    o.amp_bins = 128;
    EXPECT_THROW(eye.merge(build_eye(held(t.values), kUi, o)), std::invalid_argument);
}

TEST(QFactor, TwoGaussianClustersGiveTwenty) {
    const auto t = gaussian_clusters(20000, 0.4, 0.02, 42);
    EXPECT_NEAR(t.q_oracle, 20.0, 0.4);
    const auto m = q_factor(eye_at_zero(held(t.values)));
    EXPECT_NEAR(m.q_factor, t.q_oracle, 0.01 * t.q_oracle);
    EXPECT_NEAR(m.q_factor, 20.0, 0.5);
    EXPECT_NEAR(m.snr_db, 20 * std::log10(m.q_factor), 1e-12);
    EXPECT_NEAR(m.ber_est, oracle::q_to_ber(m.q_factor), 1e-12 * oracle::q_to_ber(m.q_factor) + 1e-300);
    EXPECT_LE(m.vertical_opening_v, m.v_high_mean - m.v_low_mean);
}

TEST(QFactor, SheppardCorrectionRemovesBinBias) {
    // Coarse bins inflate the raw histogram variance by w^2 / 12.
    const auto t = gaussian_clusters(20000, 0.4, 0.02, 5);
    EyeOptions o;
    o.clock_phase_s = 0.5 * kUi;
    o.amp_bins = 40;  // bin width about 0.024 V, comparable to sigma
    const auto m = q_factor(build_eye(held(t.values), kUi, o));
    EXPECT_NEAR(m.q_factor, t.q_oracle, 0.03 * t.q_oracle);
}

TEST(QFactor, AffineInvariance) {
    const auto t = gaussian_clusters(5000, 0.4, 0.04, 77);
    const double q0 = q_factor(eye_at_zero(held(t.values))).q_factor;
    for (auto [a, b] : {std::pair{2.5, 0.3}, std::pair{0.1, -1.0}, std::pair{7.0, 5.0}}) {
        std::vector<double> v;
        for (double x : t.values) v.push_back(a * x + b);
        EXPECT_NEAR(q_factor(eye_at_zero(held(v))).q_factor, q0, 1e-6 * q0) << a << ' ' << b;
    }
}

TEST(QFactor, UnimodalCentreIsDegraded) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0, 0.1);
    std::vector<double> v;
    for (int k = 0; k < 2000; ++k) v.push_back(n(rng));
    try {
        q_factor(eye_at_zero(held(v)));
        FAIL();
    } catch (const DegradedSignal& e) {
        EXPECT_GE(e.measured_q(), 0.0);
        EXPECT_LT(e.measured_q(), 2.0);
    }
}

TEST(QFactor, MetricInvariantsOnSimulatedEye) {
    for (double sigma : {0.005, 0.03, 0.08}) {
        auto cfg = LinkConfig::default_3g();
        cfg.noise_sigma_v = sigma;
        ChainOptions co;
        co.keep_intermediate = false;
        const auto t = run_chain(generate_prbs(LfsrSpec::prbs15(), 20000).stream, cfg, PulseSpec::sdi_3g(), co);
        EyeOptions o;
        o.clock_phase_s = t.sample_phase_s;
        const auto m = q_factor(build_eye(t.eye_waveform, kUi, o));
        EXPECT_GE(m.q_factor, 0.0);
        EXPECT_GE(m.ber_est, 0.0);
        EXPECT_LE(m.ber_est, 0.5);
        EXPECT_LE(m.vertical_opening_v, m.v_high_mean - m.v_low_mean);
        if (sigma == 0.005) {
            EXPECT_GT(m.horizontal_opening_ui, 0.6);
        }
    }
}

TEST(EdgeTimes, ReadsBackSynthesisParameters) {
    const auto bits = generate_prbs(LfsrSpec::prbs15(), 4000).stream;
    const auto w = synthesize(nrzi_encode(bits, 1), PulseSpec::sdi_3g(), 32e9);
    const auto e = edge_times(w, kUi);
    EXPECT_NEAR(e.t_rise_s, 100e-12, 31.25e-12);
    EXPECT_NEAR(e.t_fall_s, 100e-12, 31.25e-12);
    EXPECT_NEAR(e.vpp(), 0.8, 1e-3);
    EXPECT_NEAR(e.dc_offset(), 0.0, 1e-3);
    EXPECT_NEAR(e.overshoot_frac, 0.0, 1e-3);
    EXPECT_GE(e.n_rising, 8u);
    EXPECT_GE(e.n_falling, 8u);
}

TEST(EdgeTimes, InstantaneousEdgesUnderOneSample) {
    const auto bits = generate_prbs(LfsrSpec::prbs15(), 2000).stream;
    auto p = PulseSpec::sdi_3g();
    p.t_rise = p.t_fall = 0;
    const auto e = edge_times(synthesize(nrzi_encode(bits, 1), p, 32e9), kUi);
    EXPECT_LT(e.t_rise_s, 31.25e-12);
    EXPECT_LT(e.t_fall_s, 31.25e-12);
}

TEST(EdgeTimes, FortyMillivoltOvershoot) {
    const auto bits = generate_prbs(LfsrSpec::prbs15(), 4000).stream;
    auto p = PulseSpec::sdi_3g();
    p.overshoot_frac = 0.1;  // 40 mV on 800 mV
    const auto e = edge_times(synthesize(nrzi_encode(bits, 1), p, 32e9), kUi);
    EXPECT_NEAR(e.overshoot_frac, 0.10, 2e-3);
    EXPECT_NEAR(e.undershoot_frac, 0.10, 2e-3);
}

TEST(EdgeTimes, TooFewTransitions) {
    Levels lv(200, 1);
    for (int k = 50; k < 55; ++k) lv[static_cast<std::size_t>(2 * k)] = -1;
    const auto w = synthesize(lv, PulseSpec::sdi_3g(), 32e9);
    EXPECT_THROW(edge_times(w, kUi), std::invalid_argument);
    EXPECT_THROW(edge_times(held(std::vector<double>(100, 0.1)), kUi), std::invalid_argument);
}

TEST(Mask, CleanSynthesisPasses) {
    const auto bits = generate_prbs(LfsrSpec::prbs15(), 4000).stream;
    const auto r = mask_check(edge_times(synthesize(nrzi_encode(bits, 1), PulseSpec::sdi_3g(), 32e9), kUi));
    EXPECT_TRUE(r.all_pass()) << failing(r).size();
    EXPECT_EQ(r.rules.size(), 6u);
}

TEST(Mask, SingleRuleFailures) {
    auto e = at_limits();
    EXPECT_TRUE(mask_check(e).all_pass());

    e.v_high = 0.45, e.v_low = -0.45;  // 900 mV
    EXPECT_EQ(failing(mask_check(e)), std::vector<std::string>{"amplitude_vpp"});
    EXPECT_NEAR(mask_check(e).rule("amplitude_vpp").measured, 0.9, 1e-12);

    e = at_limits();
    e.t_rise_s = 140e-12, e.t_fall_s = 80e-12;
    EXPECT_EQ(failing(mask_check(e)), (std::vector<std::string>{"rise_time", "rise_fall_mismatch"}));

    e = at_limits();
    e.v_high += 0.6, e.v_low += 0.6;
    EXPECT_EQ(failing(mask_check(e)), std::vector<std::string>{"dc_offset"});

    EXPECT_THROW(mask_check(at_limits()).rule("nope"), NotFound);
}

TEST(Mask, RulesAreIndependent) {
    // Each field perturbation may only move the verdicts of the rules that read it.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        EdgeTimes e;
        e.t_rise_s = 60e-12 + 120e-12 * u(rng);
        e.t_fall_s = 60e-12 + 120e-12 * u(rng);
        e.overshoot_frac = 0.15 * u(rng);
        e.undershoot_frac = 0.15 * u(rng);
        const double vpp = 0.6 + 0.4 * u(rng), off = -0.7 + 1.4 * u(rng);
        e.v_high = off + vpp / 2, e.v_low = off - vpp / 2;
        const auto base = mask_check(e);
        auto f = e;
        f.t_fall_s = 60e-12 + 120e-12 * u(rng);
        const auto r = mask_check(f);
        for (const char* name : {"amplitude_vpp", "rise_time", "overshoot", "dc_offset"}) {
            EXPECT_EQ(r.rule(name).pass, base.rule(name).pass) << name;
        }
    }
}

TEST(BitErrors, Examples) {
    const BitStream tx{oracle::random_bits(1'000'000, 8), sdi_rate::g3};
    auto r = count_bit_errors(tx, tx);
    EXPECT_EQ(r.errors, 0u);
    EXPECT_EQ(r.offset, 0);
    EXPECT_EQ(r.overlap, tx.size());

    BitStream delayed{std::vector<std::uint8_t>(50007, 1), tx.bit_rate};
    std::copy_n(tx.bits.begin(), 50000, delayed.bits.begin() + 7);
    r = count_bit_errors(BitStream{{tx.bits.begin(), tx.bits.begin() + 50000}, tx.bit_rate}, delayed);
    EXPECT_EQ(r.offset, 7);
    EXPECT_EQ(r.errors, 0u);

    auto flipped = tx;
    for (int i = 0; i < 13; ++i) flipped.bits[static_cast<std::size_t>(1000 + 76543 * i)] ^= 1u;
    r = count_bit_errors(tx, flipped);
    EXPECT_EQ(r.errors, 13u);
    EXPECT_DOUBLE_EQ(r.ber, 1.3e-5);

    const BitStream early{{tx.bits.begin() + 3, tx.bits.begin() + 20000}, tx.bit_rate};
    EXPECT_EQ(count_bit_errors(tx, early).offset, -3);
}

TEST(BitErrors, ShortOverlapRejected) {
    const BitStream a{oracle::random_bits(999, 1), sdi_rate::g3};
    EXPECT_THROW(count_bit_errors(a, a), std::invalid_argument);
    EXPECT_THROW(count_bit_errors(a, BitStream{}), std::invalid_argument);
}

TEST(EyeExport, CsvAndSvg) {
    const auto t = gaussian_clusters(200, 0.4, 0.02, 1);
    EyeOptions o;
    o.phase_bins = 32;
    o.amp_bins = 16;
    const auto eye = build_eye(held(t.values), kUi, o);
    const auto dir = std::filesystem::temp_directory_path() / "owl_eye_export";
    std::filesystem::create_directories(dir);
    write_eye_csv(dir / "eye.csv", eye);
    write_eye_svg(dir / "eye.svg", eye);

    std::ifstream csv(dir / "eye.csv");
    std::string line;
    std::size_t rows = 0;
    std::uint64_t total = 0;
    std::getline(csv, line);
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 16);
    while (std::getline(csv, line)) {
        ++rows;
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        while (std::getline(ss, cell, ',')) total += std::stoull(cell);
    }
    EXPECT_EQ(rows, 32u);
    EXPECT_EQ(total, eye.total());

    std::ifstream svg(dir / "eye.svg");
    const std::string body((std::istreambuf_iterator<char>(svg)), {});
    EXPECT_NE(body.find("<svg"), std::string::npos);
    EXPECT_NE(body.find("</svg>"), std::string::npos);
    EXPECT_NE(body.find("stroke-dasharray"), std::string::npos);
    std::filesystem::remove_all(dir);
}
