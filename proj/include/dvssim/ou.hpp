#pragma once

#include <numbers>

namespace dvssim {

/// Stationary Ornstein-Uhlenbeck noise: first-order low-passed white noise
/// with standard deviation `sigma` and corner frequency `f_c`.
struct OuParams {
    double sigma = 0.0; ///< volt
    double f_c = 1.0;   ///< Hz

    /// Mean-reversion rate in 1/s.
    [[nodiscard]] double theta() const { return 2.0 * std::numbers::pi * f_c; }
};

} // namespace dvssim
