#pragma once

#include <array>
#include <complex>
#include <cstddef>

namespace dvssim {

/// Rational transfer function of order <= 2 in the Laplace variable.
///
/// Coefficients are stored in ascending powers of s:
///   H(s) = (num[0] + num[1] s + num[2] s^2) / (den[0] + den[1] s + den[2] s^2)
struct ContinuousTf {
    std::array<double, 3> num{0.0, 0.0, 0.0};
    std::array<double, 3> den{1.0, 0.0, 0.0};

    /// Highest power of s with a nonzero coefficient in either polynomial.
    [[nodiscard]] std::size_t order() const;

    [[nodiscard]] std::complex<double> evaluate(std::complex<double> s) const;

    /// H(j 2 pi f).
    [[nodiscard]] std::complex<double> at_frequency(double f_hz) const;

    [[nodiscard]] double dc_gain() const { return num[0] / den[0]; }

    /// True when every pole lies strictly in the left half-plane.
    [[nodiscard]] bool is_stable() const;
};

} // namespace dvssim
