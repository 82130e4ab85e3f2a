#include "dvssim/error.hpp"
#include "dvssim/scenarios.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace dvssim;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

fs::path out_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / "dvssim_test_scenarios" / name;
    fs::remove_all(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string lookup(const Summary& s, const std::string& key) {
    for (const auto& [k, v] : s) {
        if (k == key) {
            return v;
        }
    }
    return {};
}

// Unit OU process so that thresholds and timesteps are in natural units.
SimConfig unit_ou() {
    SimConfig c;
    c.ou_sigma = 1.0;
    c.ou_fc = 1.0;
    c.sweep_duration = 1000.0;
    c.seed = 3;
    return c;
}

} // namespace

TEST_CASE("simulate writes identical files for the same seed", "[scenario]") {
    SimConfig c;
    c.duration = 4e-3;
    const auto a = out_dir("a");
    c.out_dir = a;
    const auto s1 = run_simulate(c);
    c.out_dir = out_dir("b");
    const auto s2 = run_simulate(c);
    for (const char* f : {"trace.csv", "events.csv", "events.bin"}) {
        INFO(f);
        CHECK(slurp(a / f) == slurp(c.out_dir / f));
    }
    CHECK(lookup(s1, "on_events") == lookup(s2, "on_events"));
    CHECK(std::stoi(lookup(s1, "on_events")) > 0);
    CHECK(fs::exists(c.out_dir / "summary.txt"));
}

TEST_CASE("simulate with several pixels writes one stream per pixel", "[scenario]") {
    SimConfig c;
    c.duration = 2e-3;
    c.pixels = 3;
    c.out_dir = out_dir("multi");
    const auto s = run_simulate(c);
    CHECK(fs::exists(c.out_dir / "events_p2.bin"));
    CHECK(slurp(c.out_dir / "events_p0.csv") != slurp(c.out_dir / "events_p1.csv"));
    CHECK(lookup(s, "pixels") == "3");
}

TEST_CASE("simulate rejects a zero-length run", "[scenario]") {
    SimConfig c;
    c.duration = 0.0;
    c.out_dir = out_dir("zero");
    CHECK_THROWS_AS(run_simulate(c), ParameterError);
}

TEST_CASE("threshold sweep orders naive below fpt and tracks the reference", "[scenario][slow]") {
    auto c = unit_ou();
    c.theta_grid = {0.5, 1.0, 2.0, 10.0};
    const auto t = run_sweep_threshold(c);
    REQUIRE(t.rows.size() == 4);
    for (const auto& r : t.rows) {
        const double naive = r[1] + r[2];
        const double fpt = r[4] + r[5];
        const double ref = r[7] + r[8];
        INFO("theta " << r[0]);
        if (r[0] < 5.0) {
            CHECK(naive < fpt);
            // Standard errors of the two runs combined, with a small floor for
            // the bias that remains at the reference step.
            const double se = std::hypot(r[6], r[9]);
            CHECK(std::abs(fpt - ref) < 3.0 * se + 0.03 * ref);
        } else {
            CHECK(fpt * c.sweep_duration < 1.0);
            CHECK(ref * c.sweep_duration < 1.0);
        }
    }
    c.theta_grid.clear();
    CHECK_THROWS_AS(run_sweep_threshold(c), ParameterError);
}

TEST_CASE("timestep sweep: fpt stays flat while naive falls", "[scenario][slow]") {
    auto c = unit_ou();
    c.ts_grid = {0.005, 0.05, 0.5};
    const auto t = run_sweep_timestep(c);
    REQUIRE(t.rows.size() == 3);
    CHECK(t.rows[2][1] < t.rows[0][1]);
    CHECK(t.rows[2][3] == Approx(t.rows[0][3]).epsilon(0.1));
    CHECK(t.header.front() == "ts_fc");
}

TEST_CASE("bench reports throughput that grows with the timestep", "[scenario]") {
    auto c = unit_ou();
    c.ts_grid = {0.005, 0.5};
    c.bench_seconds = 0.05;
    Summary host;
    const auto t = run_bench(c, &host);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[1][2] > t.rows[0][2]);
    CHECK(t.rows[1][3] > t.rows[0][3]);
    CHECK(!lookup(host, "host").empty());
    c.ts_grid.clear();
    CHECK_THROWS_AS(run_bench(c), ParameterError);
}

TEST_CASE("psd: per-source columns add up to the total", "[scenario][slow]") {
    SimConfig c;
    c.i_low = 1e-12;
    c.psd_segment = 1u << 12;
    const auto t = run_psd(c);
    REQUIRE(!t.rows.empty());
    for (const auto& r : t.rows) {
        CHECK(r[2] + r[3] + r[4] == Approx(r[1]).epsilon(1e-12));
    }
    c.noise = false;
    CHECK_THROWS_AS(run_psd(c), ParameterError);
}

TEST_CASE("fit-psd runs on the shipped fixtures", "[scenario]") {
    auto c = load_config(fs::path(DVSSIM_SOURCE_DIR) / "config" / "fit.cfg");
    c.out_dir = out_dir("fit");
    const auto s = run_fit_psd(c);
    CHECK(lookup(s, "curves") == "4");
    CHECK(std::stod(lookup(s, "final_cost")) <= std::stod(lookup(s, "initial_cost")));
    CHECK(fs::exists(c.out_dir / "fit_params.txt"));
    CHECK(fs::exists(c.out_dir / "fit_curve_3.csv"));
    c.psd_i_pd.pop_back();
    CHECK_THROWS_AS(run_fit_psd(c), ParameterError);
}

TEST_CASE("OU model comes from the config or the circuit", "[scenario]") {
    auto c = unit_ou();
    CHECK(resolve_ou(c).sigma == 1.0);
    SimConfig d;
    const auto ou = resolve_ou(d);
    CHECK(ou.sigma == Approx(3.0e-3).epsilon(0.01));
    CHECK(ou.f_c == Approx(40.25).epsilon(0.01));
}

TEST_CASE("noise run input checks", "[scenario]") {
    NoiseRunConfig r;
    r.T_s = 0.0;
    CHECK_THROWS_AS(run_noise_events(r), ParameterError);
    r = NoiseRunConfig{};
    r.theta_sigma = 0.0;
    CHECK_THROWS_AS(run_noise_events(r), ParameterError);
    r = NoiseRunConfig{};
    r.batches = 1;
    CHECK_THROWS_AS(run_noise_events(r), ParameterError);
}
