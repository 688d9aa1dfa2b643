#include "owl/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace owl::dsp {

namespace {

constexpr double kPi = std::numbers::pi;

// Bilinear constant prewarped so that analog w_warp lands on f_warp.
double prewarp_k(double f_warp, double fs) {
    const double w = 2.0 * kPi * f_warp;
    return w / std::tan(kPi * f_warp / fs);
}

// (B0 + B1 s) / (A0 + A1 s) with s = K (1 - z^-1) / (1 + z^-1).
Biquad bilinear1(double B0, double B1, double A0, double A1, double K) {
    const double a0 = A0 + A1 * K;
    Biquad q;
    q.b0 = (B0 + B1 * K) / a0;
    q.b1 = (B0 - B1 * K) / a0;
    q.a1 = (A0 - A1 * K) / a0;
    return q;
}

Biquad bilinear2(double B0, double B1, double B2, double A0, double A1, double A2, double K) {
    const double K2 = K * K;
    const double a0 = A0 + A1 * K + A2 * K2;
    Biquad q;
    q.b0 = (B0 + B1 * K + B2 * K2) / a0;
    q.b1 = (2 * B0 - 2 * B2 * K2) / a0;
    q.b2 = (B0 - B1 * K + B2 * K2) / a0;
    q.a1 = (2 * A0 - 2 * A2 * K2) / a0;
    q.a2 = (A0 - A1 * K + A2 * K2) / a0;
    return q;
}

void check_rates(double f, double fs) {
    if (!(f > 0) || !(fs > 0)) throw std::invalid_argument("filter frequencies must be positive");
}

}  // namespace

std::complex<double> Biquad::response(double f, double fs) const {
    const auto z1 = std::polar(1.0, -2.0 * kPi * f / fs);
    const auto z2 = z1 * z1;
    return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
}

std::complex<double> Cascade::response(double f, double fs) const {
    std::complex<double> h{1.0, 0.0};
    for (const auto& s : sections_) h *= s.response(f, fs);
    return h;
}

double Cascade::magnitude_db(double f, double fs) const {
    return 20.0 * std::log10(std::abs(response(f, fs)));
}

Biquad lowpass_first_order(double fc, double fs) {
    check_rates(fc, fs);
    if (fc >= 0.45 * fs) {
        const double a = std::exp(-2.0 * kPi * fc / fs);
        Biquad q;
        q.b0 = 1.0 - a;
        q.a1 = -a;
        return q;
    }
    const double wc = 2.0 * kPi * fc;
    return bilinear1(1.0, 0.0, 1.0, 1.0 / wc, prewarp_k(fc, fs));
}

Biquad highpass_first_order(double fc, double fs) {
    check_rates(fc, fs);
    if (fc >= 0.45 * fs) throw std::invalid_argument("high-pass corner too close to Nyquist");
    const double wc = 2.0 * kPi * fc;
    return bilinear1(0.0, 1.0 / wc, 1.0, 1.0 / wc, prewarp_k(fc, fs));
}

Biquad zero_pole(double f_zero, double f_pole, double fs) {
    check_rates(f_zero, fs);
    check_rates(f_pole, fs);
    const double wz = 2.0 * kPi * f_zero;
    const double wp = 2.0 * kPi * f_pole;
    // Prewarp at the zero, where the boost starts to matter.
    const double f_warp = std::min({f_zero, f_pole, 0.45 * fs});
    return bilinear1(1.0, 1.0 / wz, 1.0, 1.0 / wp, prewarp_k(f_warp, fs));
}

std::vector<std::complex<double>> bessel_poles(int order) {
    using C = std::complex<double>;
    switch (order) {
    case 1: return {C(-1.0, 0.0)};
    case 2: return {C(-1.101601330592161, 0.636009824757034)};
    case 3: return {C(-1.047409161008935, 0.999264436280637), C(-1.322675799910444, 0.0)};
    case 4: return {C(-0.995208764350272, 1.257105739454664), C(-1.370067830551442, 0.410249717493752)};
    case 5:
        return {C(-0.957676548562682, 1.471124320730394), C(-1.380877325860439, 0.717909587626768),
                C(-1.502316271447478, 0.0)};
    case 6:
        return {C(-0.930656522946859, 1.661863268942592), C(-1.381858097596564, 0.971471890711572),
                C(-1.571490403616032, 0.320896374222624)};
    default: throw std::invalid_argument("Bessel order must be in [1, 6]");
    }
}

Cascade bessel_lowpass(int order, double fc, double fs) {
    check_rates(fc, fs);
    if (fc >= 0.45 * fs) throw std::invalid_argument("Bessel corner too close to Nyquist");
    const double wc = 2.0 * kPi * fc;
    const double K = prewarp_k(fc, fs);
    Cascade c;
    for (const auto& p : bessel_poles(order)) {
        if (p.imag() == 0.0) {
            const double a = -p.real() * wc;
            c.append(bilinear1(a, 0.0, a, 1.0, K));
        } else {
            const double m2 = std::norm(p) * wc * wc;
            const double b = -2.0 * p.real() * wc;
            c.append(bilinear2(m2, 0.0, 0.0, m2, b, 1.0, K));
        }
    }
    return c;
}

double bessel_group_delay(int order, double fc) {
    double tau = 0.0;
    for (const auto& p : bessel_poles(order)) {
        const double contrib = (-1.0 / p).real();
        tau += p.imag() == 0.0 ? contrib : 2.0 * contrib;
    }
    return tau / (2.0 * kPi * fc);
}

SincInterpolator::SincInterpolator(int half_width, double beta, double cutoff)
    : half_width_(half_width), beta_(beta), cutoff_(cutoff) {
    if (half_width < 1) throw std::invalid_argument("half_width must be >= 1");
    if (!(cutoff > 0) || cutoff > 1) throw std::invalid_argument("cutoff must be in (0, 1]");
    constexpr int kTable = 4096;
    window_table_.resize(kTable + 2);
    const double norm = std::cyl_bessel_i(0.0, beta_);
    for (int i = 0; i <= kTable + 1; ++i) {
        const double r = std::min(1.0, static_cast<double>(i) / kTable);
        window_table_[static_cast<std::size_t>(i)] = std::cyl_bessel_i(0.0, beta_ * std::sqrt(1.0 - r * r)) / norm;
    }
}

double SincInterpolator::window(double t) const {
    const double r = std::abs(t) / half_width_;
    if (r >= 1.0) return 0.0;
    const double pos = r * static_cast<double>(window_table_.size() - 2);
    const auto i = static_cast<std::size_t>(pos);
    const double f = pos - static_cast<double>(i);
    return window_table_[i] * (1.0 - f) + window_table_[i + 1] * f;
}

double SincInterpolator::kernel(double t) const {
    const double x = cutoff_ * t;
    const double sinc = x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x);
    return cutoff_ * sinc * window(t);
}

void SincInterpolator::weights(double frac, std::vector<double>& w) const {
    w.resize(static_cast<std::size_t>(2 * half_width_));
    double sum = 0.0;
    for (int j = 0; j < 2 * half_width_; ++j) {
        const int k = j - half_width_ + 1;
        const double v = kernel(frac - k);
        w[static_cast<std::size_t>(j)] = v;
        sum += v;
    }
    for (auto& v : w) v /= sum;
}

double SincInterpolator::at(std::span<const double> x, double pos) const {
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    const double fl = std::floor(pos);
    const auto i0 = static_cast<std::ptrdiff_t>(fl);
    const double frac = pos - fl;
    if (frac == 0.0 && cutoff_ == 1.0) return x[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i0, 0, n - 1))];
    double acc = 0.0;
    double sum = 0.0;
    for (int j = 0; j < 2 * half_width_; ++j) {
        const std::ptrdiff_t k = i0 + j - half_width_ + 1;
        const double v = kernel(frac - (j - half_width_ + 1));
        acc += v * x[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, n - 1))];
        sum += v;
    }
    return acc / sum;
}

}  // namespace owl::dsp
