#include "dvssim/circuit_model.hpp"
#include "dvssim/error.hpp"
#include "dvssim/io.hpp"
#include "dvssim/psd_fit.hpp"
#include "dvssim/random.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

using namespace dvssim;
using Catch::Approx;

namespace {

PixelParams device() {
    PixelParams p;
    p.C_pd = 26e-15;
    p.C_fb = 0.8e-15;
    p.C_pr = 6e-15;
    p.C_sf = 8e-15;
    return p;
}

// Model curves at four photocurrents with log-normal scatter.
std::vector<MeasuredPsd> synthetic(const PixelParams& truth, double scatter, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<MeasuredPsd> out;
    for (double i_pd : {10e-15, 100e-15, 1e-12, 10e-12}) {
        MeasuredPsd m;
        m.bias = {i_pd, 3e-9, 100e-12};
        for (int k = 0; k <= 100; ++k) { // 1 Hz to 100 kHz
            m.samples.push_back({std::pow(10.0, k / 20.0), 0.0});
        }
        const auto model = model_psd(truth, m);
        for (std::size_t k = 0; k < model.size(); ++k) {
            m.samples[k].psd = model[k] * std::exp(scatter * rng.normal());
        }
        out.push_back(std::move(m));
    }
    return out;
}

const FitMask kCaps = make_fit_mask({FitParam::C_pd, FitParam::C_fb, FitParam::C_pr, FitParam::C_sf});

} // namespace

TEST_CASE("model_psd agrees with the analytic PSD", "[fit]") {
    const auto data = synthetic(PixelParams{}, 0.0, 1);
    const auto op = compute_operating_point(PixelParams{}, data[2].bias);
    const auto model = model_psd(PixelParams{}, data[2]);
    for (std::size_t k = 0; k < model.size(); k += 10) {
        CHECK(model[k] == Approx(eval_noise_psd(op, data[2].bias, data[2].samples[k].f_hz).total()));
    }
}

TEST_CASE("fit recovers capacitances from 1% scatter within 5%", "[fit]") {
    const auto truth = device();
    const auto data = synthetic(truth, 0.01, 3);
    const auto fit = fit_psd_params(data, PixelParams{}, kCaps);
    for (auto which : {FitParam::C_pd, FitParam::C_fb, FitParam::C_pr, FitParam::C_sf}) {
        INFO("param " << static_cast<int>(which));
        CHECK(get_param(fit.params, which) == Approx(get_param(truth, which)).epsilon(0.05));
    }
    // Fixed parameters are untouched.
    CHECK(fit.params.kappa_fb == PixelParams{}.kappa_fb);
    CHECK(fit.rms_log10_residual < 0.01);
}

TEST_CASE("noise-free data is recovered almost exactly", "[fit]") {
    const auto truth = device();
    const auto fit = fit_psd_params(synthetic(truth, 0.0, 4), PixelParams{}, kCaps);
    CHECK(fit.params.C_pd == Approx(truth.C_pd).epsilon(1e-4));
    CHECK(fit.params.C_sf == Approx(truth.C_sf).epsilon(1e-4));
    CHECK(fit.rms_log10_residual < 1e-6);
}

TEST_CASE("empty mask returns the starting parameters", "[fit]") {
    const auto data = synthetic(device(), 0.01, 5);
    const PixelParams start;
    const auto fit = fit_psd_params(data, start, FitMask{});
    CHECK(fit.params.C_pd == start.C_pd);
    CHECK(fit.params.C_sf == start.C_sf);
    CHECK(fit.iterations == 0);
    REQUIRE(fit.cost_history.size() == 1);
}

TEST_CASE("cost never increases on the 3 nA fixtures", "[fit][property]") {
    std::vector<MeasuredPsd> data;
    for (const char* name : {"10", "100", "1000", "10000"}) {
        MeasuredPsd m;
        m.bias = {std::stod(name) * 1e-15, 3e-9, 100e-12};
        m.samples = read_psd_csv(std::filesystem::path(DVSSIM_FIXTURE_DIR) / ("psd_ipr3n_ipd" + std::string(name) + "f.csv"));
        data.push_back(std::move(m));
    }
    const auto fit = fit_psd_params(data, PixelParams{}, kCaps);
    REQUIRE(fit.cost_history.size() >= 2);
    for (std::size_t i = 1; i < fit.cost_history.size(); ++i) {
        CHECK(fit.cost_history[i] <= fit.cost_history[i - 1]);
    }
    CHECK(fit.cost_history.back() < fit.cost_history.front());
}

TEST_CASE("fit masks and parameter access", "[fit]") {
    const auto m = parse_fit_mask("C_pd, kappa_sf");
    CHECK(m.test(static_cast<std::size_t>(FitParam::C_pd)));
    CHECK(m.test(static_cast<std::size_t>(FitParam::kappa_sf)));
    CHECK(m.count() == 2);
    CHECK_THROWS_AS(parse_fit_mask("C_xx"), ParameterError);
    PixelParams p;
    set_param(p, FitParam::V_A_amp_p, 31.0);
    CHECK(get_param(p, FitParam::V_A_amp_p) == 31.0);
}

TEST_CASE("too little data is rejected", "[fit]") {
    MeasuredPsd m;
    m.bias = {1e-12, 3e-9, 100e-12};
    m.samples = {{1.0, 1e-9}, {10.0, 1e-10}};
    const std::vector<MeasuredPsd> data{m};
    CHECK_THROWS_AS(fit_psd_params(data, PixelParams{}, kCaps), ParameterError);
}

TEST_CASE("iteration cap raises FitError carrying the best point", "[fit]") {
    const auto data = synthetic(device(), 0.01, 6);
    FitOptions o;
    o.max_iterations = 1;
    o.tolerance = 0.0;
    try {
        (void)fit_psd_params(data, PixelParams{}, kCaps, o);
        FAIL("expected FitError");
    } catch (const FitError& e) {
        CHECK(e.best().cost_history.back() <= e.best().cost_history.front());
    }
}
