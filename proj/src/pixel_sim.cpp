#include "dvssim/pixel_sim.hpp"

#include "dvssim/error.hpp"
#include "dvssim/noise_synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dvssim {

namespace {

void check_duration(double duration) {
    if (!(duration > 0.0) || !std::isfinite(duration)) {
        throw ParameterError("waveform duration must be positive");
    }
}

// Steps of noise warmup before t = 0 so that the noise starts near its
// stationary state.
std::size_t warmup_steps(const OperatingPoint& op, double T_s) {
    const double settle = 10.0 * op.pole_time_constants()[0];
    return static_cast<std::size_t>(std::min(settle / T_s, 2e6));
}

} // namespace

Waveform constant_waveform(double i_pd, double duration) {
    check_duration(duration);
    return {{0.0, i_pd}, {duration, i_pd}};
}

Waveform step_waveform(double i_low, double i_high, double t_step, double duration) {
    check_duration(duration);
    if (!(t_step > 0.0 && t_step < duration)) {
        throw ParameterError("step time must lie inside the waveform");
    }
    return {{0.0, i_low}, {t_step, i_high}, {duration, i_high}};
}

Waveform pulse_waveform(double i_low, double i_high, double t_start, double width, double duration) {
    check_duration(duration);
    if (!(t_start > 0.0 && width > 0.0 && t_start + width < duration)) {
        throw ParameterError("pulse must lie inside the waveform");
    }
    return {{0.0, i_low}, {t_start, i_high}, {t_start + width, i_low}, {duration, i_low}};
}

Waveform log_sine_waveform(double i_mean, double depth, double f_hz, double duration, double dt) {
    check_duration(duration);
    if (!(dt > 0.0) || !(f_hz > 0.0)) {
        throw ParameterError("sine waveform needs positive frequency and sample spacing");
    }
    Waveform w;
    const auto n = static_cast<std::size_t>(std::ceil(duration / dt));
    w.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = std::min(static_cast<double>(i) * dt, duration);
        w.push_back({t, i_mean * std::exp(depth * std::sin(2.0 * std::numbers::pi * f_hz * t))});
    }
    return w;
}

double waveform_at(const Waveform& w, double t) {
    if (w.empty()) {
        throw ParameterError("empty waveform");
    }
    const auto it = std::upper_bound(w.begin(), w.end(), t, [](double x, const WaveformSample& s) { return x < s.t; });
    return it == w.begin() ? w.front().i_pd : std::prev(it)->i_pd;
}

ContinuousTf normalized_pr_tf(const OperatingPoint& op) {
    ContinuousTf tf = transfer_function(op, TfKind::Zm);
    const double dc = tf.num[0];
    for (auto& c : tf.num) {
        c /= dc;
    }
    return tf;
}

PixelSimState init_pixel_state(const PixelParams& params, const BiasPoint& bias, double T_s, double relin_threshold) {
    if (!(relin_threshold >= 0.0)) {
        throw ParameterError("relinearization threshold must be nonnegative");
    }
    PixelSimState s;
    s.T_s = T_s;
    s.bias = bias;
    s.bias.i_pd = clamp_photocurrent(bias.i_pd);
    s.i_pd = s.bias.i_pd;
    s.i_pd_at_refresh = s.i_pd;
    s.relin_threshold = relin_threshold;
    s.op = compute_operating_point(params, s.bias);
    s.pr_filter = bilinear(normalized_pr_tf(s.op), T_s);
    s.sf_filter = bilinear(transfer_function(s.op, TfKind::Asf), T_s);
    s.pr_filter.prime(0.0);
    s.sf_filter.prime(0.0);
    return s;
}

void step_signal(PixelSimState& s, double i_pd, const PixelParams& params) {
    const double i = clamp_photocurrent(i_pd);
    s.refreshed = false;
    if (i != s.i_pd) {
        // Exact integral of dV = Zm_dc(I) dI with Zm_dc = (U_T / (kappa I)) A/(A+1).
        const double loop = s.op.A_loop / (s.op.A_loop + 1.0);
        s.v_eq += params.U_T / params.kappa_fb * loop * std::log(i / s.i_pd);
        s.i_pd = i;
    }
    if (std::abs(i - s.i_pd_at_refresh) > s.relin_threshold * s.i_pd_at_refresh) {
        s.bias.i_pd = i;
        s.op = compute_operating_point(params, s.bias);
        s.pr_filter.refresh(normalized_pr_tf(s.op));
        s.sf_filter.refresh(transfer_function(s.op, TfKind::Asf));
        s.i_pd_at_refresh = i;
        s.refreshed = true;
        ++s.refreshes;
    }
    s.v_pr = s.pr_filter.process(s.v_eq);
    s.v_sf = s.sf_filter.process(s.v_pr);
    s.t += s.T_s;
}

SimResult simulate_waveform(const Waveform& waveform, const PixelParams& params, const BiasPoint& bias,
                            const SimOptions& o) {
    if (waveform.empty()) {
        throw ParameterError("empty waveform");
    }
    if (!(o.T_s > 0.0)) {
        throw ParameterError("timestep must be positive");
    }
    for (std::size_t i = 1; i < waveform.size(); ++i) {
        if (waveform[i].t < waveform[i - 1].t) {
            throw ParameterError("waveform times must be nondecreasing");
        }
    }
    const double t0 = waveform.front().t;
    const double span = waveform.back().t - t0;
    if (!(span >= o.T_s * (1.0 - 1e-9))) {
        throw ParameterError("waveform duration is shorter than one timestep");
    }
    const auto n_steps = static_cast<std::size_t>(std::floor(span / o.T_s + 1e-9));

    BiasPoint b0 = bias;
    b0.i_pd = waveform.front().i_pd;
    PixelSimState state = init_pixel_state(params, b0, o.T_s, o.relin_threshold);
    state.t = t0;

    std::optional<NoiseSynth> noise;
    if (o.noise_enabled) {
        noise.emplace(state.op, state.bias, o.T_s, o.seed, o.pixel);
        noise->warmup(warmup_steps(state.op, o.T_s));
    }
    const bool need_ou = o.noise_enabled && o.comparator.mode == EventMode::Fpt;
    SimResult result;
    const auto current_ou = [&]() -> OuParams {
        if (o.ou_override) {
            return *o.ou_override;
        }
        if (!need_ou) {
            return {};
        }
        const auto r = reduce_to_ou(state.op, state.bias, o.flicker_coeff);
        result.ou_valid = result.ou_valid && r.ou_valid;
        return r.params();
    };
    OuParams ou = current_ou();

    NoiseSample n_prev = noise ? noise->next() : NoiseSample{};
    Comparator comparator(o.comparator, state.v_sf + n_prev.n_sf);
    Rng rng(o.seed, o.pixel, StreamId::Comparator);

    if (o.record_trace) {
        result.trace.reserve(n_steps + 1);
        result.trace.push_back({t0, state.v_pr + n_prev.n_pr, state.v_sf + n_prev.n_sf,
                                comparator.v_diff(state.v_sf + n_prev.n_sf)});
    }
    for (std::size_t k = 1; k <= n_steps; ++k) {
        const double t_prev = state.t;
        const double sig_prev = state.v_sf;
        const double t = t0 + static_cast<double>(k) * o.T_s;
        step_signal(state, waveform_at(waveform, t), params);
        state.t = t;
        if (state.refreshed) {
            if (noise) {
                noise->refresh(state.op, NoiseCurrents::from(state.bias));
            }
            ou = current_ou();
        }
        const NoiseSample n_now = noise ? noise->next() : NoiseSample{};
        comparator.check({t_prev, t, sig_prev, state.v_sf, n_prev.n_sf, n_now.n_sf}, ou, rng, result.events);
        if (o.record_trace) {
            const double v_sf = state.v_sf + n_now.n_sf;
            result.trace.push_back({t, state.v_pr + n_now.n_pr, v_sf, comparator.v_diff(v_sf)});
        }
        n_prev = n_now;
    }
    result.stats = comparator.stats();
    result.steps = n_steps;
    result.refreshes = state.refreshes;
    return result;
}

} // namespace dvssim
