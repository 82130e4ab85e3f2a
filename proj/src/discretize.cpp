#include "dvssim/discretize.hpp"

#include "dvssim/error.hpp"

#include <cmath>
#include <numbers>

namespace dvssim {

FilterState::FilterState(const ContinuousTf& tf, double T_s) : T_s_(T_s) {
    if (!(T_s > 0.0) || !std::isfinite(T_s)) {
        throw ParameterError("timestep must be positive");
    }
    set_coefficients(tf);
}

void FilterState::set_coefficients(const ContinuousTf& tf) {
    if (!tf.is_stable()) {
        throw ParameterError("continuous transfer function is not stable");
    }
    order_ = static_cast<int>(tf.order());
    gain_ = tf.dc_gain();
    const double k = 2.0 / T_s_;
    const auto& n = tf.num;
    const auto& d = tf.den;

    std::array<double, 3> b{};
    std::array<double, 3> a{};
    switch (order_) {
    case 2:
        b = {n[0] + n[1] * k + n[2] * k * k, 2.0 * n[0] - 2.0 * n[2] * k * k, n[0] - n[1] * k + n[2] * k * k};
        a = {d[0] + d[1] * k + d[2] * k * k, 2.0 * d[0] - 2.0 * d[2] * k * k, d[0] - d[1] * k + d[2] * k * k};
        break;
    case 1:
        b = {n[0] + n[1] * k, n[0] - n[1] * k, 0.0};
        a = {d[0] + d[1] * k, d[0] - d[1] * k, 0.0};
        break;
    default:
        b = {n[0], 0.0, 0.0};
        a = {d[0], 0.0, 0.0};
        break;
    }
    for (std::size_t i = 0; i < 3; ++i) {
        b[i] /= a[0];
    }
    a[1] /= a[0];
    a[2] /= a[0];
    a[0] = 1.0;
    // Tie b0 to the DC gain so that H(z = 1) is the continuous DC gain.
    b[0] = gain_ * (1.0 + a[1] + a[2]) - b[1] - b[2];
    b_ = b;
    a_ = a;
}

double FilterState::process(double x) {
    const double gx = gain_ * x;
    const double y = gx + b_[1] * (x_[0] - x) + b_[2] * (x_[1] - x) - a_[1] * (y_[0] - gx) - a_[2] * (y_[1] - gx);
    x_[1] = x_[0];
    x_[0] = x;
    y_[1] = y_[0];
    y_[0] = y;
    return y;
}

void FilterState::refresh(const ContinuousTf& tf) { set_coefficients(tf); }

void FilterState::prime(double x) {
    x_ = {x, x};
    y_ = {gain_ * x, gain_ * x};
}

std::complex<double> FilterState::response(double f_hz) const {
    const std::complex<double> zinv = std::polar(1.0, -2.0 * std::numbers::pi * f_hz * T_s_);
    const auto num = b_[0] + zinv * (b_[1] + zinv * b_[2]);
    const auto den = a_[0] + zinv * (a_[1] + zinv * a_[2]);
    return num / den;
}

} // namespace dvssim
