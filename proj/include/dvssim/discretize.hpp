#pragma once

#include "dvssim/transfer_function.hpp"

#include <array>
#include <complex>

namespace dvssim {

/// Direct-form-I difference equation of order <= 2 obtained from a
/// continuous transfer function by the bilinear transform
///   s <- (2/T_s)(z - 1)/(z + 1).
///
/// The recursion is evaluated relative to the DC response,
///   y[n] = g x[n] + sum_k b_k (x[n-k] - x[n]) - sum_k a_k (y[n-k] - g x[n]),
/// which is algebraically identical to the usual form. b0 is tied to the
/// continuous DC gain so that H(z = 1) = H(s = 0), and a primed filter fed a
/// constant returns exactly g x.
class FilterState {
public:
    FilterState() = default;

    /// Throws ParameterError when T_s <= 0 or the continuous system is unstable.
    FilterState(const ContinuousTf& tf, double T_s);

    double process(double x);

    /// Replaces the coefficients and keeps both delay lines, so the output
    /// and its first difference carry over unchanged.
    void refresh(const ContinuousTf& tf);

    /// Fills the delay lines with the steady state for a constant input `x`.
    void prime(double x);

    [[nodiscard]] std::complex<double> response(double f_hz) const;
    [[nodiscard]] double dc_gain() const { return gain_; }
    [[nodiscard]] int order() const { return order_; }
    [[nodiscard]] double T_s() const { return T_s_; }
    [[nodiscard]] const std::array<double, 3>& num_coeffs() const { return b_; }
    [[nodiscard]] const std::array<double, 3>& den_coeffs() const { return a_; }
    [[nodiscard]] double last_output() const { return y_[0]; }

private:
    void set_coefficients(const ContinuousTf& tf);

    int order_ = 0;
    double T_s_ = 1.0;
    double gain_ = 1.0;
    std::array<double, 3> b_{1.0, 0.0, 0.0};
    std::array<double, 3> a_{1.0, 0.0, 0.0};
    std::array<double, 2> x_{0.0, 0.0}; ///< x[n-1], x[n-2]
    std::array<double, 2> y_{0.0, 0.0}; ///< y[n-1], y[n-2]
};

/// Discretizes `tf` with the bilinear transform.
[[nodiscard]] inline FilterState bilinear(const ContinuousTf& tf, double T_s) { return FilterState(tf, T_s); }

} // namespace dvssim
