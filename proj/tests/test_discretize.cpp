#include "dvssim/circuit_model.hpp"
#include "dvssim/discretize.hpp"
#include "dvssim/error.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

using namespace dvssim;
using Catch::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

ContinuousTf first_order(double gain, double w) {
    ContinuousTf tf;
    tf.num = {gain, 0.0, 0.0};
    tf.den = {1.0, 1.0 / w, 0.0};
    return tf;
}

// Bilinear substitution done directly on the complex frequency: the digital
// response at f equals the analog response at the prewarped frequency.
std::complex<double> warped_analog(const ContinuousTf& tf, double f, double T_s) {
    const double w_a = (2.0 / T_s) * std::tan(kPi * f * T_s);
    return tf.evaluate({0.0, w_a});
}

} // namespace

TEST_CASE("order-zero transfer function passes the input through", "[discretize]") {
    ContinuousTf one;
    one.num = {1.0, 0.0, 0.0};
    auto f = bilinear(one, 1e-5);
    CHECK(f.order() == 0);
    for (double x : {0.0, 1.5, -3.0, 1e-9}) {
        CHECK(f.process(x) == x);
    }
    CHECK(f.response(123.0) == std::complex<double>(1.0, 0.0));
}

TEST_CASE("first-order DC gain is preserved exactly", "[discretize]") {
    auto f = bilinear(first_order(2.5, 2.0 * kPi * 100.0), 1e-4);
    CHECK(f.response(0.0).real() == Approx(2.5).epsilon(1e-15));
    double y = 0.0;
    for (int i = 0; i < 5000; ++i) {
        y = f.process(0.3);
    }
    CHECK(y == Approx(2.5 * 0.3).epsilon(1e-14));
    CHECK(f.den_coeffs()[0] == 1.0);
}

TEST_CASE("digital response equals the prewarped analog response", "[discretize]") {
    const auto op = compute_operating_point(PixelParams{}, {1e-12, 1e-9, 100e-12});
    for (auto kind : {TfKind::Zm, TfKind::Zout, TfKind::Asf, TfKind::ZoutSf}) {
        const auto tf = transfer_function(op, kind);
        const double T_s = 1e-5;
        const auto f = bilinear(tf, T_s);
        for (double hz : {1.0, 100.0, 1e3, 1e4, 4e4}) {
            const auto expect = warped_analog(tf, hz, T_s);
            CHECK(std::abs(f.response(hz) - expect) < 1e-9 * std::abs(expect));
        }
    }
}

TEST_CASE("biquad magnitude within 1% of the analog response below 1/(20 T_s)", "[discretize][property]") {
    for (double i_pd : {10e-15, 100e-15, 1e-12, 10e-12, 100e-12}) {
        for (double T_s : {1e-5, 3e-5, 1e-4}) {
            const auto op = compute_operating_point(PixelParams{}, {i_pd, 1e-9, 100e-12});
            for (auto kind : {TfKind::Zm, TfKind::Zout}) {
                const auto tf = transfer_function(op, kind);
                const auto f = bilinear(tf, T_s);
                CHECK(f.dc_gain() == tf.dc_gain());
                const double f_max = 1.0 / (20.0 * T_s);
                for (double hz = 0.1; hz <= f_max; hz *= 1.05) {
                    const double ratio = std::abs(f.response(hz)) / std::abs(tf.at_frequency(hz));
                    CHECK(std::abs(ratio - 1.0) < 0.01);
                }
            }
        }
    }
}

TEST_CASE("biquad magnitude error stays within the frequency-warping bound", "[discretize][property]") {
    // With both poles below the band edge the response falls as f^-2, so the
    // magnitude error is about twice the warping tan(x)/x - 1, x = pi f T_s.
    const double T_s = 1e-6;
    for (double i_pd : {10e-15, 1e-12, 10e-12}) {
        const auto op = compute_operating_point(PixelParams{}, {i_pd, 1e-9, 100e-12});
        const auto tf = transfer_function(op, TfKind::Zm);
        const auto f = bilinear(tf, T_s);
        for (double hz = 0.1; hz <= 1.0 / (20.0 * T_s); hz *= 1.05) {
            const double x = kPi * hz * T_s;
            const double bound = 2.0 * (std::tan(x) / x - 1.0) + 1e-3;
            const double ratio = std::abs(f.response(hz)) / std::abs(tf.at_frequency(hz));
            CHECK(std::abs(ratio - 1.0) < bound);
        }
    }
}

TEST_CASE("z-domain poles lie inside the unit circle", "[discretize][property]") {
    for (double i_pd : {1e-15, 1e-13, 1e-11}) {
        const auto op = compute_operating_point(PixelParams{}, {i_pd, 1e-9, 100e-12});
        for (double T_s : {1e-7, 1e-5, 1e-2}) {
            const auto f = bilinear(transfer_function(op, TfKind::Zm), T_s);
            const auto& a = f.den_coeffs();
            // z^2 + a1 z + a2 = 0
            const std::complex<double> disc = std::sqrt(std::complex<double>(a[1] * a[1] - 4.0 * a[2], 0.0));
            CHECK(std::abs((-a[1] + disc) / 2.0) < 1.0);
            CHECK(std::abs((-a[1] - disc) / 2.0) < 1.0);
        }
    }
}

TEST_CASE("step response converges to the exact exponential", "[discretize]") {
    const double tau = 1e-3;
    const double T_end = 3e-3;
    double prev_err = 1.0;
    for (double T_s : {1e-4, 5e-5, 2.5e-5}) {
        auto f = bilinear(first_order(1.0, 1.0 / tau), T_s);
        double y = 0.0;
        const int n = static_cast<int>(std::lround(T_end / T_s));
        for (int i = 0; i < n; ++i) {
            y = f.process(1.0);
        }
        // Bilinear with a zero-order held step approximates the trapezoid
        // rule; the sample falls half a step late.
        const double err = std::abs(y - (1.0 - std::exp(-(T_end - 0.5 * T_s) / tau)));
        CHECK(err < prev_err);
        prev_err = err;
    }
    CHECK(prev_err < 1e-4);
}

TEST_CASE("prime sets the steady state", "[discretize]") {
    const auto op = compute_operating_point(PixelParams{}, {1e-12, 1e-9, 100e-12});
    auto f = bilinear(transfer_function(op, TfKind::Zm), 1e-5);
    f.prime(2e-15);
    CHECK(f.process(2e-15) == f.dc_gain() * 2e-15);
    CHECK(f.last_output() == f.dc_gain() * 2e-15);
}

TEST_CASE("refresh keeps the delay lines", "[discretize]") {
    auto f = bilinear(first_order(1.0, 100.0), 1e-3);
    f.prime(1.0);
    f.refresh(first_order(1.0, 400.0));
    // Same DC gain and a settled state: the output stays put.
    CHECK(f.process(1.0) == 1.0);
    CHECK(f.T_s() == 1e-3);
}

TEST_CASE("bad timesteps and unstable systems are rejected", "[discretize]") {
    CHECK_THROWS_AS(bilinear(first_order(1.0, 10.0), 0.0), ParameterError);
    CHECK_THROWS_AS(bilinear(first_order(1.0, 10.0), -1.0), ParameterError);
    ContinuousTf unstable;
    unstable.num = {1.0, 0.0, 0.0};
    unstable.den = {1.0, -1.0, 0.0};
    CHECK_THROWS_AS(bilinear(unstable, 1e-3), ParameterError);
}
