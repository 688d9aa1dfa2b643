#pragma once

// Cross-correlation delay estimation and end-to-end latency composition.

#include <filesystem>
#include <utility>
#include <vector>

#include "owl/waveform.hpp"

namespace owl {

struct CorrelationPoint {
    double lag_s;
    double raw;         // mean-removed, divided by overlap length
    double normalized;  // raw / sqrt(Rxx(0) Ryy(0)), clamped to [-1, 1]
};

/// R(tau) = mean over the overlap of x(kT) y(kT + tau), integer-sample lags
/// with |tau| <= max_lag_s. A positive lag means y trails x.
std::vector<CorrelationPoint> cross_correlate(const Waveform& x, const Waveform& y, double max_lag_s);

struct DelayEstimate {
    double tau_d_s = 0;
    double correlation_peak = 0;
    long lag_samples = 0;
};

/// Argmax of the normalized correlation; optional parabolic refinement.
/// Throws LowConfidence when the peak is below 0.3.
DelayEstimate estimate_delay(const Waveform& x, const Waveform& y, double max_lag_s, bool subsample = false);

inline constexpr double kMinCorrelationPeak = 0.3;

struct LatencyReport {
    double tau_d_s = 0;
    double tau_bb_s = 0;
    double tau_ow_s = 0;
    double ceq_latency_s = 0;
    double tau_sdi_s = 0;
    double correlation_peak = 0;
    double window_s = 0;
    std::size_t n_samples = 0;
};

LatencyReport compose_latency(double tau_d_s, double tau_bb_s, double ceq_latency_s);

/// [lo, hi] scan lines converted to seconds.
std::pair<double, double> conversion_delay_estimate(double frame_rate, double lines_per_frame, double lines_lo,
                                                    double lines_hi);

void write_correlation_csv(const std::filesystem::path& path, const std::vector<CorrelationPoint>& points);

}  // namespace owl
