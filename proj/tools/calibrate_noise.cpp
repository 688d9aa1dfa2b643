// Finds the receiver noise sigma that puts the paper-3g eye Q at a target
// value, by bisection on sigma with the preset seed.
//
//   calibrate_noise [--q 27.42] [--bits 1000000]
//
// The printed sigma is what kCalibratedNoiseSigma and presets/paper-3g.cfg hold.

#include <cstdio>

#include "CLI11.hpp"
#include "owl/analysis.hpp"
#include "owl/channel.hpp"
#include "owl/errors.hpp"

namespace {

double measure_q(double sigma, std::size_t n_bits) {
    auto cfg = owl::LinkConfig::default_3g();
    cfg.noise_sigma_v = sigma;
    const auto pulse = owl::PulseSpec::sdi_3g();
    const auto bits = owl::generate_prbs(owl::LfsrSpec::prbs15(), n_bits).stream;
    owl::ChainOptions opts;
    opts.keep_intermediate = false;
    const auto trace = owl::run_chain(bits, cfg, pulse, opts);
    owl::EyeOptions eo;
    eo.clock_phase_s = trace.sample_phase_s;
    return owl::q_factor(owl::build_eye(trace.eye_waveform, pulse.ui, eo)).q_factor;
}

// A closed eye counts as Q = 0 so bisection keeps going.
double measure_q_or_zero(double sigma, std::size_t n_bits) {
    try {
        return measure_q(sigma, n_bits);
    } catch (const owl::DegradedSignal&) {
        return 0.0;
    }
}

}  // namespace

int main(int argc, char** argv) {
    double target = 27.42;
    std::size_t n_bits = 1000000;
    CLI::App app{"Calibrate receiver noise sigma against a target eye Q at 2.97 Gb/s"};
    app.add_option("--q", target, "Target Q factor")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--bits", n_bits, "PRBS15 bits per trial")->capture_default_str()->check(CLI::Range(2000, 100000000));
    CLI11_PARSE(app, argc, argv);

    const double q0 = measure_q(0.0, n_bits);
    std::printf("noise-free Q = %.4f\n", q0);
    if (q0 < target) {
        std::printf("target unreachable: ISI alone limits Q below %.2f\n", target);
        return 1;
    }
    double lo = 0.0, hi = 0.05;
    while (measure_q_or_zero(hi, n_bits) > target) hi *= 2;
    for (int it = 0; it < 24; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double q = measure_q_or_zero(mid, n_bits);
        std::printf("sigma = %.9g V -> Q = %.4f\n", mid, q);
        if (q > target) lo = mid;
        else hi = mid;
    }
    const double sigma = 0.5 * (lo + hi);
    std::printf("calibrated sigma = %.6g V (Q = %.4f)\n", sigma, measure_q_or_zero(sigma, n_bits));
    return 0;
}
