// Command-line front end for the pixel simulator.

#include "dvssim/config.hpp"
#include "dvssim/error.hpp"
#include "dvssim/io.hpp"
#include "dvssim/scenarios.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Common {
    std::string config_path;
    std::vector<std::string> settings;
    std::string out_dir;
    int pixels = 0;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("-c,--config", c.config_path, "key=value config file")->check(CLI::ExistingFile);
    sub->add_option("-s,--set", c.settings, "override one setting, e.g. --set T_s=1e-5");
    sub->add_option("-o,--out", c.out_dir, "output directory");
    sub->add_option("--seed", c.seed, "random seed (DVSSIM_SEED overrides the config, this overrides both)");
}

dvssim::SimConfig build_config(const Common& c) {
    dvssim::SimConfig cfg = c.config_path.empty() ? dvssim::SimConfig{} : dvssim::load_config(c.config_path);
    for (const auto& s : c.settings) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw dvssim::ParameterError("--set expects key=value, got '" + s + "'");
        }
        dvssim::apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    dvssim::apply_env_overrides(cfg);
    if (c.seed) {
        cfg.seed = *c.seed;
    }
    if (c.pixels > 0) {
        cfg.pixels = c.pixels;
    }
    if (!c.out_dir.empty()) {
        cfg.out_dir = c.out_dir;
    }
    return cfg;
}

void write_table(const dvssim::SimConfig& cfg, const std::string& name, const dvssim::CsvTable& t) {
    const auto path = cfg.out_dir / name;
    dvssim::write_csv(path, t);
    std::cout << "table=" << path.string() << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Event-camera pixel simulator with circuit-level noise and first-passage event generation"};
    app.require_subcommand(1);

    Common simulate_opts;
    auto* simulate = app.add_subcommand("simulate", "simulate one waveform; writes trace, events and summary");
    add_common(simulate, simulate_opts);
    simulate->add_option("--pixels", simulate_opts.pixels, "independent pixel instances")->check(CLI::PositiveNumber);

    Common thr_opts;
    double ts_fc = 0.5;
    auto* sweep_thr = app.add_subcommand("sweep-threshold", "noise event rate versus threshold");
    add_common(sweep_thr, thr_opts);
    sweep_thr->add_option("--ts-fc", ts_fc, "timestep in units of 1/f_c")->check(CLI::PositiveNumber);

    Common ts_opts;
    auto* sweep_ts = app.add_subcommand("sweep-timestep", "noise event rate versus timestep");
    add_common(sweep_ts, ts_opts);

    Common bench_opts;
    auto* bench = app.add_subcommand("bench", "throughput versus timestep for both event modes");
    add_common(bench, bench_opts);

    Common psd_opts;
    auto* psd = app.add_subcommand("psd", "analytic and synthesized noise PSD at v_sf");
    add_common(psd, psd_opts);

    Common fit_opts;
    auto* fit = app.add_subcommand("fit-psd", "fit pixel parameters to measured PSD curves");
    add_common(fit, fit_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (simulate->parsed()) {
            const auto s = dvssim::run_simulate(build_config(simulate_opts));
            std::cout << dvssim::format_summary(s);
        } else if (sweep_thr->parsed()) {
            const auto cfg = build_config(thr_opts);
            write_table(cfg, "sweep_threshold.csv", dvssim::run_sweep_threshold(cfg, ts_fc));
        } else if (sweep_ts->parsed()) {
            const auto cfg = build_config(ts_opts);
            write_table(cfg, "sweep_timestep.csv", dvssim::run_sweep_timestep(cfg));
        } else if (bench->parsed()) {
            const auto cfg = build_config(bench_opts);
            dvssim::Summary host{{"command", "bench"}};
            write_table(cfg, "bench.csv", dvssim::run_bench(cfg, &host));
            dvssim::write_summary(cfg.out_dir / "bench_summary.txt", host);
            std::cout << dvssim::format_summary(host);
        } else if (psd->parsed()) {
            const auto cfg = build_config(psd_opts);
            const auto t = dvssim::run_psd(cfg);
            write_table(cfg, "psd.csv", t);
            std::vector<dvssim::PsdSample> synth;
            for (const auto& r : t.rows) {
                synth.push_back({r[0], r[5]});
            }
            dvssim::write_psd_csv(cfg.out_dir / "psd_synth.csv", synth);
        } else if (fit->parsed()) {
            std::cout << dvssim::format_summary(dvssim::run_fit_psd(build_config(fit_opts)));
        }
    } catch (const std::exception& e) {
        std::cerr << "dvssim: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
