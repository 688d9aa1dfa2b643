#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "oracles.hpp"
#include "owl/waveform.hpp"

using namespace owl;

namespace {

constexpr double kFs = 32e9;

// Linear-interpolated time where the samples first cross `level` after index from.
double first_crossing(const Waveform& w, double level, std::size_t from = 0) {
    for (std::size_t i = from; i + 1 < w.size(); ++i) {
        const double a = w.samples[i] - level, b = w.samples[i + 1] - level;
        if ((a < 0) != (b < 0)) return w.time_at(i) + a / (a - b) / w.sample_rate;
    }
    return NAN;
}

Levels balanced_levels(std::size_t n, std::uint64_t seed) {
    auto bits = oracle::random_bits(n, seed);
    Levels lv(n);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) lv[i] = static_cast<std::int8_t>(bits[i] ? 1 : -1), pos += bits[i];
    // Flip surplus symbols so +1 and -1 counts match.
    for (std::size_t i = 0; pos != n / 2; ++i) {
        if (pos > n / 2 && lv[i] == 1) lv[i] = -1, --pos;
        else if (pos < n / 2 && lv[i] == -1) lv[i] = 1, ++pos;
    }
    return lv;
}

Waveform sine(double f, double fs, std::size_t n, double amp = 1.0) {
    Waveform w;
    w.sample_rate = fs;
    for (std::size_t i = 0; i < n; ++i) w.samples.push_back(amp * std::sin(2 * std::numbers::pi * f * static_cast<double>(i) / fs));
    return w;
}

// Least-squares amplitude of a sinusoid at f over the interior of w.
double fitted_amplitude(const Waveform& w, double f, std::size_t guard) {
    double ss = 0, sc = 0, cc = 0, xs = 0, xc = 0;
    for (std::size_t i = guard; i + guard < w.size(); ++i) {
        const double t = w.time_at(i);
        const double s = std::sin(2 * std::numbers::pi * f * t), c = std::cos(2 * std::numbers::pi * f * t);
        ss += s * s, sc += s * c, cc += c * c, xs += w.samples[i] * s, xc += w.samples[i] * c;
    }
    const double det = ss * cc - sc * sc;
    const double a = (xs * cc - xc * sc) / det, b = (xc * ss - xs * sc) / det;
    return std::hypot(a, b);
}

}  // namespace

TEST(Synthesize, ConstantLevel) {
    const auto w = synthesize(Levels(100, 1), PulseSpec::sdi_3g(), kFs);
    for (double v : w.samples) ASSERT_DOUBLE_EQ(v, 0.4);
    const auto n = synthesize(Levels(100, -1), PulseSpec::sdi_3g(), kFs);
    for (double v : n.samples) ASSERT_DOUBLE_EQ(v, -0.4);
}

TEST(Synthesize, SampleCount) {
    for (std::size_t n : {1u, 10u, 1000u, 12345u}) {
        const auto w = synthesize(Levels(n, 1), PulseSpec::sdi_3g(), kFs);
        EXPECT_EQ(w.size(), static_cast<std::size_t>(std::llround(static_cast<double>(n) / 2.97e9 * kFs)));
    }
    EXPECT_EQ(synthesize(Levels(1000, 1), PulseSpec::sdi_3g(), kFs).size(), 10774u);
}

TEST(Synthesize, EdgeTimesReadBack) {
    for (double tr : {60e-12, 100e-12, 135e-12}) {
        PulseSpec p;
        p.t_rise = tr;
        p.t_fall = tr;
        Levels lv(20, -1);
        std::fill(lv.begin() + 10, lv.end(), 1);
        const auto up = synthesize(lv, p, kFs);
        const double t20 = first_crossing(up, -0.4 + 0.2 * 0.8), t80 = first_crossing(up, -0.4 + 0.8 * 0.8);
        EXPECT_NEAR(t80 - t20, tr, 1.0 / kFs) << tr;
        // Edge centred on the UI boundary.
        EXPECT_NEAR(first_crossing(up, 0.0), 10 * p.ui, 1.0 / kFs);

        for (auto& l : lv) l = static_cast<std::int8_t>(-l);
        const auto down = synthesize(lv, p, kFs);
        const double f80 = first_crossing(down, 0.4 - 0.2 * 0.8), f20 = first_crossing(down, 0.4 - 0.8 * 0.8);
        EXPECT_NEAR(f20 - f80, tr, 1.0 / kFs);
    }
}

TEST(Synthesize, ExtremaBoundedByOvershoot) {
    for (double os : {0.0, 0.05, 0.10, 0.3}) {
        PulseSpec p;
        p.overshoot_frac = os;
        p.dc_offset = 0.1;
        const auto w = synthesize(balanced_levels(4000, 9), p, kFs);
        const auto [mn, mx] = std::minmax_element(w.samples.begin(), w.samples.end());
        const double lim = p.vpp / 2 * (1 + os);
        EXPECT_LE(*mx, p.dc_offset + lim + 1e-12) << os;
        EXPECT_GE(*mn, p.dc_offset - lim - 1e-12) << os;
        if (os > 0) EXPECT_GT(*mx, p.dc_offset + p.vpp / 2 * (1 + 0.9 * os));
    }
}

TEST(Synthesize, BalancedMeanIsDcOffset) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        PulseSpec p;
        p.dc_offset = -0.2;
        const auto w = synthesize(balanced_levels(10000, seed), p, kFs);
        EXPECT_NEAR(mean(w), p.dc_offset, p.vpp / 1000);
    }
}

TEST(Synthesize, Errors) {
    EXPECT_THROW(synthesize(Levels{}, PulseSpec{}, kFs), std::invalid_argument);
    EXPECT_THROW(synthesize(Levels{1}, PulseSpec{}, 10e9), std::invalid_argument);
    PulseSpec bad;
    bad.t_rise = bad.ui;
    EXPECT_THROW(synthesize(Levels{1}, bad, kFs), std::invalid_argument);
}

TEST(PulseSpecType, Presets) {
    const auto p = PulseSpec::sdi_3g();
    EXPECT_NEAR(p.ui, 336.7e-12, 0.1e-12);
    EXPECT_DOUBLE_EQ(p.vpp, 0.8);
    const auto p6 = PulseSpec::for_rate(5.94e9);
    EXPECT_DOUBLE_EQ(p6.ui, 1 / 5.94e9);
    EXPECT_LT(p6.t_rise, p6.ui);
    EXPECT_THROW(PulseSpec::for_rate(0), std::invalid_argument);
}

TEST(DcBias, Examples) {
    const auto w = synthesize(balanced_levels(1000, 4), PulseSpec::sdi_3g(), kFs);
    EXPECT_EQ(add_dc_bias(w, 0.0).samples, w.samples);
    const auto b = add_dc_bias(w, 2.4);
    const auto [mn, mx] = std::minmax_element(b.samples.begin(), b.samples.end());
    EXPECT_NEAR(*mn, 2.0, 1e-12);
    EXPECT_NEAR(*mx, 2.8, 1e-12);
    const auto back = add_dc_bias(b, -2.4);
    for (std::size_t i = 0; i < w.size(); ++i) ASSERT_NEAR(back.samples[i], w.samples[i], 1e-15);
    EXPECT_EQ(b.sample_rate, w.sample_rate);
    EXPECT_EQ(b.unit, w.unit);
}

TEST(Resample, SameRateIsIdentity) {
    const auto w = sine(1e9, kFs, 1000);
    EXPECT_EQ(resample(w, kFs).samples, w.samples);
}

TEST(Resample, SinusoidAmplitude) {
    const auto w = sine(1e9, kFs, 4000);
    const auto up = resample(w, 64e9);
    EXPECT_NEAR(up.sample_rate, 64e9, 0);
    EXPECT_NEAR(20 * std::log10(fitted_amplitude(up, 1e9, 200)), 0.0, 0.1);
    const auto down = resample(w, 16e9);
    EXPECT_NEAR(20 * std::log10(fitted_amplitude(down, 1e9, 100)), 0.0, 0.1);
}

TEST(Resample, InBandEnergyPreserved) {
    // Tones up to 0.9 of the lower Nyquist frequency.
    for (double f : {0.5e9, 3e9, 6e9, 7.2e9}) {
        const auto w = sine(f, kFs, 8000);
        const auto r = resample(w, 16e9);
        EXPECT_NEAR(20 * std::log10(fitted_amplitude(r, f, 100)), 0.0, 0.1) << f;
    }
}

TEST(Resample, DcUnchanged) {
    Waveform w;
    w.samples.assign(500, 1.25);
    for (double rate : {10e9, 50e9, 64e9}) {
        const auto r = resample(w, rate);
        for (double v : r.samples) ASSERT_NEAR(v, 1.25, 1e-9);
    }
}

TEST(Delay, IntegerAndFractional) {
    const auto w = sine(1e9, kFs, 2000);
    const auto d = delay(w, 5.0 / kFs);
    for (std::size_t i = 5; i < w.size(); ++i) ASSERT_DOUBLE_EQ(d.samples[i], w.samples[i - 5]);
    EXPECT_DOUBLE_EQ(d.samples[0], w.samples[0]);

    const double tau = 7.3 / kFs;
    const auto f = delay(w, tau);
    for (std::size_t i = 100; i + 100 < w.size(); ++i) {
        const double want = std::sin(2 * std::numbers::pi * 1e9 * (w.time_at(i) - tau));
        ASSERT_NEAR(f.samples[i], want, 1e-4) << i;
    }
}

TEST(Slice, HalfOpenRange) {
    Waveform w;
    w.samples = {0, 1, 2, 3, 4, 5};
    w.sample_rate = 1.0;
    const auto s = slice(w, 1.0, 4.0);
    EXPECT_EQ(s.samples, (std::vector<double>{1, 2, 3}));
    EXPECT_DOUBLE_EQ(s.t0, 1.0);
}

TEST(WaveformType, WattsMustBeNonNegative) {
    Waveform w;
    w.unit = Unit::watts;
    w.samples = {0.0, 1e-3, -1e-9};
    EXPECT_THROW(w.validate(), std::invalid_argument);
    w.samples.clear();
    w.unit = Unit::volts;
    EXPECT_THROW(w.validate(), std::invalid_argument);
}

TEST(WaveformFile, BinaryLayoutAndRoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "owl_wave.owlwav";
    Waveform w = sine(1e9, kFs, 77);
    w.t0 = 1.5e-9;
    w.unit = Unit::amperes;
    write_waveform(path, w);
    EXPECT_EQ(std::filesystem::file_size(path), 8u + 4u + 8u + 8u + 8u + 77u * 8u);
    const auto r = read_waveform(path);
    EXPECT_EQ(r.samples, w.samples);
    EXPECT_EQ(r.sample_rate, w.sample_rate);
    EXPECT_EQ(r.t0, w.t0);
    EXPECT_EQ(r.unit, Unit::amperes);

    std::ifstream is(path, std::ios::binary);
    char magic[8];
    is.read(magic, 8);
    EXPECT_EQ(std::string(magic, 8), std::string("OWLWAV1\0", 8));
    std::uint32_t unit = 9;
    is.read(reinterpret_cast<char*>(&unit), 4);
    EXPECT_EQ(unit, 1u);
    is.close();

    {
        std::ofstream os(path, std::ios::binary);
        os << "OWLWAV2";
    }
    EXPECT_THROW(read_waveform(path), std::invalid_argument);
    std::filesystem::remove(path);
}

TEST(WaveformFile, CsvRoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "owl_wave.csv";
    Waveform w = sine(2e9, kFs, 64);
    w.t0 = -1e-9;
    write_waveform_csv(path, w);
    {
        std::ifstream is(path);
        std::string header;
        std::getline(is, header);
        EXPECT_EQ(header, "t_seconds,value");
    }
    const auto r = read_waveform_csv(path);
    ASSERT_EQ(r.size(), w.size());
    EXPECT_NEAR(r.sample_rate, kFs, kFs * 1e-9);
    EXPECT_NEAR(r.t0, w.t0, 1e-18);
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(r.samples[i], w.samples[i], 1e-12);
    std::filesystem::remove(path);
}
