#include "dvssim/scenarios.hpp"

#include "dvssim/error.hpp"
#include "dvssim/noise_synth.hpp"
#include "dvssim/psd_fit.hpp"
#include "dvssim/random.hpp"
#include "dvssim/welch.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <sys/utsname.h>

namespace dvssim {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v) { return format_number(v); }

ComparatorConfig noise_comparator(const NoiseRunConfig& cfg) {
    ComparatorConfig c;
    c.a_diff = 1.0;
    c.theta_on = cfg.theta_sigma * cfg.ou.sigma;
    c.theta_off = c.theta_on;
    c.mode = cfg.mode;
    c.refractory = cfg.refractory;
    c.reset_includes_noise = cfg.reset_includes_noise;
    return c;
}

} // namespace

std::string format_summary(const Summary& summary) {
    std::string out;
    for (const auto& [k, v] : summary) {
        out += k + "=" + v + "\n";
    }
    return out;
}

void write_summary(const std::filesystem::path& path, const Summary& summary) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream f(path, std::ios::trunc);
    if (!f) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    f << format_summary(summary);
}

NoiseRunResult run_noise_events(const NoiseRunConfig& cfg) {
    if (!(cfg.T_s > 0.0) || !(cfg.duration >= cfg.T_s)) {
        throw ParameterError("noise run needs T_s > 0 and duration >= T_s");
    }
    if (!(cfg.ou.sigma > 0.0) || !(cfg.ou.f_c > 0.0) || !(cfg.theta_sigma > 0.0)) {
        throw ParameterError("noise run needs positive sigma, f_c and threshold");
    }
    if (cfg.batches < 2) {
        throw ParameterError("noise run needs at least two batches");
    }
    const auto steps = static_cast<std::uint64_t>(std::llround(cfg.duration / cfg.T_s));
    const double rho = std::exp(-cfg.ou.theta() * cfg.T_s);
    const double innov = cfg.ou.sigma * std::sqrt(-std::expm1(-2.0 * cfg.ou.theta() * cfg.T_s));

    Rng noise_rng(cfg.seed, cfg.pixel, StreamId::Ipd);
    Rng cmp_rng(cfg.seed, cfg.pixel, StreamId::Comparator);
    double n = cfg.ou.sigma * noise_rng.normal(); // stationary start
    Comparator cmp(noise_comparator(cfg), n);
    std::vector<EventRecord> events;
    events.reserve(1024);

    NoiseRunResult r;
    r.steps = steps;
    const auto batch_len = std::max<std::uint64_t>(steps / static_cast<std::uint64_t>(cfg.batches), 1);
    std::vector<double> batch_counts;
    std::uint64_t in_batch = 0;
    std::uint64_t batch_events = 0;

    const auto t0 = Clock::now();
    for (std::uint64_t k = 1; k <= steps; ++k) {
        const double n_next = rho * n + innov * noise_rng.normal();
        const IntervalSample s{static_cast<double>(k - 1) * cfg.T_s, static_cast<double>(k) * cfg.T_s, 0.0, 0.0, n,
                               n_next};
        cmp.check(s, cfg.ou, cmp_rng, events);
        batch_events += events.size();
        events.clear();
        n = n_next;
        if (++in_batch == batch_len) {
            batch_counts.push_back(static_cast<double>(batch_events));
            in_batch = 0;
            batch_events = 0;
        }
    }
    r.wall_seconds = seconds_since(t0);
    r.on = cmp.stats().on;
    r.off = cmp.stats().off;
    r.saturated = cmp.stats().saturated;
    const double duration = static_cast<double>(steps) * cfg.T_s;
    r.rate = static_cast<double>(r.on + r.off) / duration;

    const double batch_t = static_cast<double>(batch_len) * cfg.T_s;
    double mean = 0.0;
    for (double c : batch_counts) {
        mean += c / batch_t;
    }
    mean /= static_cast<double>(batch_counts.size());
    double var = 0.0;
    for (double c : batch_counts) {
        var += (c / batch_t - mean) * (c / batch_t - mean);
    }
    const auto nb = static_cast<double>(batch_counts.size());
    r.rate_se = nb > 1 ? std::sqrt(var / (nb - 1.0) / nb) : 0.0;
    return r;
}

OuParams resolve_ou(const SimConfig& cfg) {
    if (cfg.ou_sigma && cfg.ou_fc) {
        return {*cfg.ou_sigma, *cfg.ou_fc};
    }
    BiasPoint b = cfg.bias;
    b.i_pd = cfg.i_low;
    const auto op = compute_operating_point(cfg.params, b);
    return reduce_to_ou(op, b, cfg.flicker_coeff).params();
}

Waveform make_waveform(const SimConfig& c) {
    switch (c.waveform) {
    case WaveformKind::Constant: return constant_waveform(c.i_low, c.duration);
    case WaveformKind::Step: return step_waveform(c.i_low, c.i_high, c.t_start, c.duration);
    case WaveformKind::Pulse: return pulse_waveform(c.i_low, c.i_high, c.t_start, c.pulse_width, c.duration);
    case WaveformKind::Sine: return log_sine_waveform(c.i_low, c.sine_depth, c.sine_freq, c.duration, c.T_s);
    case WaveformKind::Csv: return read_waveform_csv(c.waveform_csv);
    }
    throw ParameterError("unknown waveform kind");
}

Summary run_simulate(const SimConfig& cfg) {
    validate(cfg);
    const auto wave = make_waveform(cfg);
    if (wave.empty() || !(wave.back().t - wave.front().t > 0.0)) {
        throw ParameterError("waveform has zero duration");
    }
    SimOptions o;
    o.T_s = cfg.T_s;
    o.noise_enabled = cfg.noise;
    o.seed = cfg.seed;
    o.relin_threshold = cfg.relin_threshold;
    o.comparator = cfg.comparator;
    o.flicker_coeff = cfg.flicker_coeff;
    if (cfg.ou_sigma && cfg.ou_fc) {
        o.ou_override = OuParams{*cfg.ou_sigma, *cfg.ou_fc};
    }

    const auto n_pix = static_cast<std::size_t>(cfg.pixels);
    std::vector<SimResult> results(n_pix);
    const auto t0 = Clock::now();
    {
        // Pixels are independent; each worker takes a strided subset and the
        // results are written afterwards in pixel order.
        const std::size_t workers = std::min<std::size_t>(n_pix, std::max(1u, std::thread::hardware_concurrency()));
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t p = w; p < n_pix; p += workers) {
                        SimOptions op = o;
                        op.pixel = p;
                        op.record_trace = p == 0;
                        results[p] = simulate_waveform(wave, cfg.params, cfg.bias, op);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) {
            t.join();
        }
        for (const auto& e : errors) {
            if (e) {
                std::rethrow_exception(e);
            }
        }
    }
    const double wall = seconds_since(t0);

    const auto& dir = cfg.out_dir;
    write_trace_csv(dir / "trace.csv", results[0].trace);
    std::uint64_t on = 0;
    std::uint64_t off = 0;
    bool saturated = false;
    bool ou_valid = true;
    for (std::size_t p = 0; p < n_pix; ++p) {
        const std::string suffix = n_pix == 1 ? "" : "_p" + std::to_string(p);
        write_events_csv(dir / ("events" + suffix + ".csv"), results[p].events);
        write_events_binary(dir / ("events" + suffix + ".bin"), results[p].events);
        on += results[p].stats.on;
        off += results[p].stats.off;
        saturated = saturated || results[p].stats.saturated;
        ou_valid = ou_valid && results[p].ou_valid;
    }
    const double sim_t = static_cast<double>(results[0].steps) * cfg.T_s;
    Summary s{{"command", "simulate"},
              {"waveform", to_string(cfg.waveform)},
              {"mode", std::string(to_string(cfg.comparator.mode))},
              {"noise", cfg.noise ? "on" : "off"},
              {"seed", std::to_string(cfg.seed)},
              {"pixels", std::to_string(cfg.pixels)},
              {"T_s", num(cfg.T_s)},
              {"steps", std::to_string(results[0].steps)},
              {"simulated_s", num(sim_t)},
              {"on_events", std::to_string(on)},
              {"off_events", std::to_string(off)},
              {"on_rate_hz", num(static_cast<double>(on) / (sim_t * static_cast<double>(n_pix)))},
              {"off_rate_hz", num(static_cast<double>(off) / (sim_t * static_cast<double>(n_pix)))},
              {"refreshes", std::to_string(results[0].refreshes)},
              {"saturated", saturated ? "true" : "false"},
              {"ou_valid", ou_valid ? "true" : "false"},
              {"runtime_s", num(wall)}};
    write_summary(dir / "summary.txt", s);
    return s;
}

namespace {

NoiseRunConfig noise_run(const SimConfig& cfg, const OuParams& ou, double theta_sigma, double ts_fc, EventMode mode) {
    NoiseRunConfig r;
    r.ou = ou;
    r.theta_sigma = theta_sigma;
    r.T_s = ts_fc / ou.f_c;
    r.duration = cfg.sweep_duration;
    r.mode = mode;
    r.refractory = cfg.comparator.refractory;
    r.reset_includes_noise = cfg.comparator.reset_includes_noise;
    r.seed = cfg.seed;
    return r;
}

} // namespace

CsvTable run_sweep_threshold(const SimConfig& cfg, double ts_fc) {
    if (cfg.theta_grid.empty()) {
        throw ParameterError("threshold grid is empty");
    }
    const auto ou = resolve_ou(cfg);
    CsvTable t{{"theta_sigma", "naive_on_rate", "naive_off_rate", "naive_rate_se", "fpt_on_rate", "fpt_off_rate",
                "fpt_rate_se", "ref_on_rate", "ref_off_rate", "ref_rate_se"},
               {}};
    for (double th : cfg.theta_grid) {
        std::vector<double> row{th};
        for (auto [mode, ts] : {std::pair{EventMode::Naive, ts_fc}, std::pair{EventMode::Fpt, ts_fc},
                                std::pair{EventMode::Fpt, kReferenceTsFc}}) {
            const auto rc = noise_run(cfg, ou, th, ts, mode);
            const auto r = run_noise_events(rc);
            const double d = static_cast<double>(r.steps) * rc.T_s;
            row.insert(row.end(), {r.on_rate(d), r.off_rate(d), r.rate_se});
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

CsvTable run_sweep_timestep(const SimConfig& cfg) {
    if (cfg.ts_grid.empty()) {
        throw ParameterError("timestep grid is empty");
    }
    const auto ou = resolve_ou(cfg);
    CsvTable t{{"ts_fc", "naive_rate", "naive_rate_se", "fpt_rate", "fpt_rate_se"}, {}};
    for (double ts : cfg.ts_grid) {
        std::vector<double> row{ts};
        for (auto mode : {EventMode::Naive, EventMode::Fpt}) {
            const auto r = run_noise_events(noise_run(cfg, ou, cfg.sweep_theta, ts, mode));
            row.insert(row.end(), {r.rate, r.rate_se});
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string host_description() {
    std::string cpu = "unknown";
    std::ifstream f("/proc/cpuinfo");
    std::string line;
    while (std::getline(f, line)) {
        if (line.rfind("model name", 0) == 0) {
            cpu = line.substr(line.find(':') + 2);
            break;
        }
    }
    utsname u{};
    std::string os = "unknown";
    if (uname(&u) == 0) {
        os = std::string(u.sysname) + " " + u.release + " " + u.machine;
    }
    return cpu + "; " + std::to_string(std::thread::hardware_concurrency()) + " threads; " + os;
}

CsvTable run_bench(const SimConfig& cfg, Summary* host) {
    if (cfg.ts_grid.empty()) {
        throw ParameterError("timestep grid is empty");
    }
    const auto ou = resolve_ou(cfg);
    // Warm caches and the clock before timing.
    {
        auto w = noise_run(cfg, ou, cfg.sweep_theta, 0.05, EventMode::Fpt);
        w.duration = 2000.0 * w.T_s;
        (void)run_noise_events(w);
    }
    CsvTable t{{"ts_fc", "T_s", "naive_throughput", "fpt_throughput"}, {}};
    for (double ts : cfg.ts_grid) {
        std::vector<double> row{ts, ts / ou.f_c};
        for (auto mode : {EventMode::Naive, EventMode::Fpt}) {
            auto rc = noise_run(cfg, ou, cfg.sweep_theta, ts, mode);
            // Probe, then size the timed run to about bench_seconds of wall time.
            rc.duration = 2000.0 * rc.T_s;
            const auto probe = run_noise_events(rc);
            const double per_sim_s = probe.wall_seconds / rc.duration;
            rc.duration = std::max(2.0 * rc.T_s, cfg.bench_seconds / std::max(per_sim_s, 1e-12));
            const auto r = run_noise_events(rc);
            const double sim_s = static_cast<double>(r.steps) * rc.T_s;
            row.push_back(sim_s / std::max(r.wall_seconds, 1e-9));
        }
        t.rows.push_back(std::move(row));
    }
    if (host) {
        host->emplace_back("host", host_description());
        host->emplace_back("ou_sigma_v", num(ou.sigma));
        host->emplace_back("ou_fc_hz", num(ou.f_c));
        host->emplace_back("theta_sigma", num(cfg.sweep_theta));
    }
    return t;
}

CsvTable run_psd(const SimConfig& cfg) {
    if (!cfg.noise) {
        throw ParameterError("psd requires noise = on");
    }
    validate(cfg);
    BiasPoint bias = cfg.bias;
    bias.i_pd = clamp_photocurrent(cfg.i_low);
    const auto op = compute_operating_point(cfg.params, bias);
    const std::size_t seg = cfg.psd_segment;
    const std::size_t n = seg * 64;
    const auto warm = static_cast<std::size_t>(std::min(20.0 * op.pole_time_constants()[0] / cfg.T_s, 4e6));

    const auto synth = [&](NoiseCurrents c) {
        NoiseSynth s(op, c, cfg.T_s, cfg.seed);
        s.warmup(warm);
        std::vector<double> x(n);
        for (auto& v : x) {
            v = s.next().n_sf;
        }
        return welch_psd(x, cfg.T_s, seg, 0.5);
    };
    const auto total = synth(NoiseCurrents::from(bias));
    const auto pd = synth({bias.i_pd, 0.0, 0.0});
    const auto pr = synth({0.0, bias.i_pr, 0.0});
    const auto sf = synth({0.0, 0.0, bias.i_sf});

    CsvTable t{{"f_hz", "analytic_total", "analytic_pd", "analytic_pr", "analytic_sf", "synth_total", "synth_pd",
                "synth_pr", "synth_sf"},
               {}};
    for (std::size_t k = 1; k < total.size(); ++k) {
        const auto a = eval_noise_psd(op, bias, total[k].f_hz, cfg.flicker_coeff);
        t.rows.push_back(
            {total[k].f_hz, a.total(), a.pd, a.pr, a.sf, total[k].psd, pd[k].psd, pr[k].psd, sf[k].psd});
    }
    return t;
}

Summary run_fit_psd(const SimConfig& cfg) {
    if (cfg.psd_files.empty()) {
        throw ParameterError("fit-psd needs psd_files");
    }
    if (cfg.psd_files.size() != cfg.psd_i_pd.size()) {
        throw ParameterError("psd_i_pd must list one photocurrent per PSD file");
    }
    std::vector<MeasuredPsd> measured;
    for (std::size_t i = 0; i < cfg.psd_files.size(); ++i) {
        MeasuredPsd m;
        m.bias = cfg.bias;
        m.bias.i_pd = cfg.psd_i_pd[i];
        for (const auto& s : read_psd_csv(cfg.psd_files[i])) {
            if (s.f_hz > 0.0) {
                m.samples.push_back(s);
            }
        }
        measured.push_back(std::move(m));
    }
    FitOptions fo;
    fo.flicker_coeff = cfg.flicker_coeff;
    FitResult fit;
    bool converged = true;
    try {
        fit = fit_psd_params(measured, cfg.params, parse_fit_mask(cfg.fit_free), fo);
    } catch (const FitError& e) {
        fit = e.best();
        converged = false;
    }

    std::ostringstream params;
    params << "# fitted pixel parameters\n";
    for (auto which : {FitParam::C_pd, FitParam::C_fb, FitParam::C_pr, FitParam::C_sf, FitParam::kappa_fb,
                       FitParam::kappa_amp_n, FitParam::kappa_sf, FitParam::V_A_amp_n, FitParam::V_A_amp_p}) {
        static const char* names[] = {"C_pd",     "C_fb",        "C_pr",     "C_sf",     "kappa_fb",
                                      "kappa_amp_n", "kappa_sf", "V_A_amp_n", "V_A_amp_p"};
        params << names[static_cast<std::size_t>(which)] << " = " << num(get_param(fit.params, which)) << "\n";
    }
    std::filesystem::create_directories(cfg.out_dir);
    {
        std::ofstream f(cfg.out_dir / "fit_params.txt", std::ios::trunc);
        if (!f) {
            throw IoError("cannot write '" + (cfg.out_dir / "fit_params.txt").string() + "'");
        }
        f << params.str();
    }
    for (std::size_t i = 0; i < measured.size(); ++i) {
        const auto model = model_psd(fit.params, measured[i], cfg.flicker_coeff);
        CsvTable t{{"f_hz", "measured_psd", "model_psd"}, {}};
        for (std::size_t k = 0; k < model.size(); ++k) {
            t.rows.push_back({measured[i].samples[k].f_hz, measured[i].samples[k].psd, model[k]});
        }
        write_csv(cfg.out_dir / ("fit_curve_" + std::to_string(i) + ".csv"), t);
    }
    Summary s{{"command", "fit-psd"},
              {"curves", std::to_string(measured.size())},
              {"free", cfg.fit_free},
              {"converged", converged ? "true" : "false"},
              {"iterations", std::to_string(fit.iterations)},
              {"initial_cost", num(fit.cost_history.front())},
              {"final_cost", num(fit.cost_history.back())},
              {"rms_log10_residual", num(fit.rms_log10_residual)}};
    write_summary(cfg.out_dir / "summary.txt", s);
    return s;
}

} // namespace dvssim
