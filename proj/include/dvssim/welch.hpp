#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dvssim {

struct PsdSample {
    double f_hz = 0.0;
    double psd = 0.0; ///< V^2/Hz
};

/// Averaged periodogram with a Hann window and per-segment mean removal.
/// One-sided, scaled so that summing psd * df over all bins gives the
/// variance of the input. Throws ParameterError when the input is shorter
/// than one segment or the overlap is outside [0, 1).
[[nodiscard]] std::vector<PsdSample> welch_psd(std::span<const double> samples, double T_s, std::size_t segment_len,
                                               double overlap = 0.5);

} // namespace dvssim
