#include "owl/latency.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <memory>
#include <stdexcept>

#include "owl/errors.hpp"
#include "owl/sdi_codec.hpp"

namespace owl {

namespace {

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};
template <typename T>
using FftwBuf = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuf<T> fftw_buffer(std::size_t n) {
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
    if (!p) throw std::bad_alloc();
    return FftwBuf<T>(p);
}

std::vector<double> demeaned(const Waveform& w) {
    const double m = mean(w);
    std::vector<double> v(w.samples);
    for (double& s : v) s -= m;
    return v;
}

// c[m] = sum_k x[k] y[k + m] for m in [-(nx-1), ny-1], stored at index m + nx - 1.
std::vector<double> full_xcorr(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t need = x.size() + y.size() - 1;
    std::size_t n = 1;
    while (n < need) n <<= 1;
    const std::size_t nc = n / 2 + 1;

    auto rx = fftw_buffer<double>(n);
    auto ry = fftw_buffer<double>(n);
    auto cx = fftw_buffer<fftw_complex>(nc);
    auto cy = fftw_buffer<fftw_complex>(nc);
    std::fill_n(rx.get(), n, 0.0);
    std::fill_n(ry.get(), n, 0.0);
    std::copy(x.begin(), x.end(), rx.get());
    std::copy(y.begin(), y.end(), ry.get());

    fftw_plan px = fftw_plan_dft_r2c_1d(static_cast<int>(n), rx.get(), cx.get(), FFTW_ESTIMATE);
    fftw_plan py = fftw_plan_dft_r2c_1d(static_cast<int>(n), ry.get(), cy.get(), FFTW_ESTIMATE);
    fftw_execute(px);
    fftw_execute(py);
    for (std::size_t k = 0; k < nc; ++k) {
        const std::complex<double> a(cx[k][0], -cx[k][1]);
        const std::complex<double> b(cy[k][0], cy[k][1]);
        const auto p = a * b;
        cx[k][0] = p.real();
        cx[k][1] = p.imag();
    }
    fftw_plan pi = fftw_plan_dft_c2r_1d(static_cast<int>(n), cx.get(), rx.get(), FFTW_ESTIMATE);
    fftw_execute(pi);
    fftw_destroy_plan(px);
    fftw_destroy_plan(py);
    fftw_destroy_plan(pi);

    std::vector<double> c(need);
    const double inv = 1.0 / static_cast<double>(n);
    const auto nx = static_cast<long>(x.size());
    for (long m = -(nx - 1); m < static_cast<long>(y.size()); ++m) {
        const std::size_t src = m >= 0 ? static_cast<std::size_t>(m) : n - static_cast<std::size_t>(-m);
        c[static_cast<std::size_t>(m + nx - 1)] = rx[src] * inv;
    }
    return c;
}

}  // namespace

std::vector<CorrelationPoint> cross_correlate(const Waveform& x, const Waveform& y, double max_lag_s) {
    x.validate();
    y.validate();
    if (x.sample_rate != y.sample_rate) throw std::invalid_argument("cross_correlate: sample rates differ");
    if (!(max_lag_s >= 0)) throw std::invalid_argument("max_lag_s must be >= 0");
    const double fs = x.sample_rate;
    const auto max_lag = static_cast<long>(std::floor(max_lag_s * fs + 1e-9));
    if (static_cast<double>(x.size()) < 2.0 * max_lag || static_cast<double>(y.size()) < 2.0 * max_lag) {
        throw std::invalid_argument("cross_correlate: each record must span at least twice max_lag");
    }

    auto constant = [](const Waveform& w) {
        const auto [lo, hi] = std::minmax_element(w.samples.begin(), w.samples.end());
        return *lo == *hi;
    };
    if (constant(x) || constant(y)) throw std::invalid_argument("cross_correlate: constant input");

    const auto xd = demeaned(x);
    const auto yd = demeaned(y);
    auto energy = [](const std::vector<double>& v) {
        double s = 0;
        for (double a : v) s += a * a;
        return s / static_cast<double>(v.size());
    };
    const double norm = std::sqrt(energy(xd) * energy(yd));
    if (!(norm > 0)) throw std::invalid_argument("cross_correlate: constant input");

    const auto c = full_xcorr(xd, yd);
    const auto nx = static_cast<long>(x.size());
    const auto ny = static_cast<long>(y.size());
    const double t_skew = y.t0 - x.t0;

    std::vector<CorrelationPoint> out;
    out.reserve(static_cast<std::size_t>(2 * max_lag + 1));
    for (long m = -max_lag; m <= max_lag; ++m) {
        const long overlap = std::min(nx, ny - m) - std::max(0L, -m);
        if (overlap <= 0) continue;
        const double raw = c[static_cast<std::size_t>(m + nx - 1)] / static_cast<double>(overlap);
        out.push_back({static_cast<double>(m) / fs + t_skew, raw, std::clamp(raw / norm, -1.0, 1.0)});
    }
    return out;
}

DelayEstimate estimate_delay(const Waveform& x, const Waveform& y, double max_lag_s, bool subsample) {
    const auto r = cross_correlate(x, y, max_lag_s);
    std::size_t best = 0;
    for (std::size_t i = 1; i < r.size(); ++i) {
        if (r[i].normalized > r[best].normalized) best = i;
    }
    const double T = 1.0 / x.sample_rate;
    DelayEstimate d;
    d.correlation_peak = r[best].normalized;
    d.tau_d_s = r[best].lag_s;
    d.lag_samples = std::lround((r[best].lag_s - (y.t0 - x.t0)) * x.sample_rate);
    if (subsample && best > 0 && best + 1 < r.size()) {
        const double a = r[best - 1].raw, b = r[best].raw, c = r[best + 1].raw;
        const double den = a - 2.0 * b + c;
        if (den < 0) d.tau_d_s += 0.5 * (a - c) / den * T;
    }
    if (d.correlation_peak < kMinCorrelationPeak) {
        throw LowConfidence("correlation peak below 0.3; signals unrelated or window too short", d.tau_d_s,
                            d.correlation_peak);
    }
    return d;
}

LatencyReport compose_latency(double tau_d_s, double tau_bb_s, double ceq_latency_s) {
    LatencyReport r;
    r.tau_d_s = tau_d_s;
    r.tau_bb_s = tau_bb_s;
    r.ceq_latency_s = ceq_latency_s;
    r.tau_ow_s = tau_d_s + tau_bb_s;
    r.tau_sdi_s = r.tau_ow_s + ceq_latency_s;
    return r;
}

std::pair<double, double> conversion_delay_estimate(double frame_rate, double lines_per_frame, double lines_lo,
                                                    double lines_hi) {
    if (!(lines_lo >= 0 && lines_hi >= lines_lo)) throw std::invalid_argument("line range must satisfy 0 <= lo <= hi");
    const double line = sdi_line_timing(frame_rate, lines_per_frame).line_duration_s;
    return {lines_lo * line, lines_hi * line};
}

void write_correlation_csv(const std::filesystem::path& path, const std::vector<CorrelationPoint>& points) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    os << "lag_seconds,raw,normalized\n" << std::setprecision(12);
    for (const auto& p : points) os << p.lag_s << ',' << p.raw << ',' << p.normalized << '\n';
}

}  // namespace owl
