#pragma once

// IIR sections designed by the bilinear transform (prewarped at the corner
// frequency), plus a Kaiser-windowed sinc interpolator.

#include <complex>
#include <span>
#include <vector>

namespace owl::dsp {

/// Transposed direct form II second-order section.
struct Biquad {
    double b0 = 1, b1 = 0, b2 = 0;
    double a1 = 0, a2 = 0;
    double s1 = 0, s2 = 0;

    double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }

    double step(double x) {
        const double y = b0 * x + s1;
        s1 = b1 * x - a1 * y + s2;
        s2 = b2 * x - a2 * y;
        return y;
    }

    /// Set the state as if x had been applied forever.
    void prime(double x) {
        const double y = dc_gain() * x;
        s2 = b2 * x - a2 * y;
        s1 = b1 * x - a1 * y + s2;
    }

    void reset() { s1 = s2 = 0; }

    std::complex<double> response(double f, double fs) const;
};

class Cascade {
public:
    Cascade() = default;
    explicit Cascade(std::vector<Biquad> sections) : sections_(std::move(sections)) {}

    void append(const Biquad& s) { sections_.push_back(s); }
    void append(const Cascade& c) { sections_.insert(sections_.end(), c.sections_.begin(), c.sections_.end()); }

    double step(double x) {
        for (auto& s : sections_) x = s.step(x);
        return x;
    }
    void process(std::span<double> xs) {
        for (auto& x : xs) x = step(x);
    }
    void prime(double x) {
        for (auto& s : sections_) {
            s.prime(x);
            x *= s.dc_gain();
        }
    }
    void reset() {
        for (auto& s : sections_) s.reset();
    }

    std::complex<double> response(double f, double fs) const;
    double magnitude_db(double f, double fs) const;

    const std::vector<Biquad>& sections() const { return sections_; }

private:
    std::vector<Biquad> sections_;
};

/// Single real pole at fc. Falls back to matched-z when fc is too close to
/// Nyquist for the bilinear prewarp (fc >= 0.45 fs).
Biquad lowpass_first_order(double fc, double fs);
Biquad highpass_first_order(double fc, double fs);

/// (1 + s/wz) / (1 + s/wp), unity gain at DC.
Biquad zero_pole(double f_zero, double f_pole, double fs);

/// Bessel low-pass normalized for -3 dB at fc, orders 1 to 6.
Cascade bessel_lowpass(int order, double fc, double fs);

/// Analog-prototype group delay at DC for bessel_lowpass(order, fc).
double bessel_group_delay(int order, double fc);

/// Analog prototype poles (upper half plane plus the real pole) for -3 dB at 1 rad/s.
std::vector<std::complex<double>> bessel_poles(int order);

/// Kaiser-windowed sinc interpolator with weights normalized to unit DC gain.
class SincInterpolator {
public:
    /// cutoff is relative to the input Nyquist frequency, in (0, 1].
    explicit SincInterpolator(int half_width = 32, double beta = 8.0, double cutoff = 1.0);

    /// Value at fractional index pos; out-of-range taps clamp to the end samples.
    double at(std::span<const double> x, double pos) const;

    /// Weights for taps floor(pos) - half_width + 1 .. floor(pos) + half_width.
    void weights(double frac, std::vector<double>& w) const;

    int half_width() const { return half_width_; }

private:
    double kernel(double t) const;
    double window(double t) const;

    int half_width_;
    double beta_;
    double cutoff_;
    std::vector<double> window_table_;
};

}  // namespace owl::dsp
