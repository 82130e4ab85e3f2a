#pragma once

// Large-signal pixel simulation: relinearized PR and SF filters driven by a
// photocurrent waveform, optional shot noise, and the comparator.

#include "dvssim/circuit_model.hpp"
#include "dvssim/discretize.hpp"
#include "dvssim/event_gen.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace dvssim {

struct WaveformSample {
    double t = 0.0;    ///< seconds
    double i_pd = 0.0; ///< ampere
};

/// Photocurrent samples; the value holds until the next sample (zero-order hold).
using Waveform = std::vector<WaveformSample>;

[[nodiscard]] Waveform constant_waveform(double i_pd, double duration);
[[nodiscard]] Waveform step_waveform(double i_low, double i_high, double t_step, double duration);
[[nodiscard]] Waveform pulse_waveform(double i_low, double i_high, double t_start, double width, double duration);
/// i_pd(t) = i_mean * exp(depth * sin(2 pi f t)), sampled every `dt`.
[[nodiscard]] Waveform log_sine_waveform(double i_mean, double depth, double f_hz, double duration, double dt);

/// Value of the zero-order-held waveform at `t`.
[[nodiscard]] double waveform_at(const Waveform& w, double t);

/// Noise-free PR and SF state. Voltages are increments about the operating
/// point at which the state was initialized.
struct PixelSimState {
    double t = 0.0;
    double T_s = 0.0;
    double v_pr = 0.0;
    double v_sf = 0.0;
    double v_eq = 0.0; ///< DC PR response to the current photocurrent
    double i_pd = 0.0;
    double i_pd_at_refresh = 0.0;
    double relin_threshold = 0.01; ///< relative I_pd change that triggers a refresh
    BiasPoint bias;
    OperatingPoint op;
    FilterState pr_filter; ///< Zm normalized to unit DC gain
    FilterState sf_filter; ///< Asf
    std::size_t refreshes = 0;
    bool refreshed = false; ///< set by the last step_signal call
};

/// Settled state at photocurrent bias.i_pd.
[[nodiscard]] PixelSimState init_pixel_state(const PixelParams& params, const BiasPoint& bias, double T_s,
                                             double relin_threshold = 0.01);

/// Advances one timestep with photocurrent `i_pd` (clamped to the floor).
/// The log of the photocurrent ratio, scaled by the loop's DC transimpedance,
/// drives the PR filter; coefficients are refreshed when I_pd has moved by
/// more than the relinearization threshold since the last refresh.
void step_signal(PixelSimState& state, double i_pd, const PixelParams& params);

/// Unit-DC-gain version of Zm, used for the large-signal PR path.
[[nodiscard]] ContinuousTf normalized_pr_tf(const OperatingPoint& op);

struct TracePoint {
    double t = 0.0;
    double v_pr = 0.0;
    double v_sf = 0.0;
    double v_diff = 0.0;
};

struct SimOptions {
    double T_s = 10e-6;
    bool noise_enabled = true;
    std::uint64_t seed = 1;
    std::uint64_t pixel = 0;
    double relin_threshold = 0.01;
    ComparatorConfig comparator;
    std::optional<double> flicker_coeff;
    std::optional<OuParams> ou_override; ///< replaces the reduced noise model in fpt mode
    bool record_trace = true;
};

struct SimResult {
    std::vector<TracePoint> trace;
    std::vector<EventRecord> events;
    ComparatorStats stats;
    std::size_t steps = 0;
    std::size_t refreshes = 0;
    bool ou_valid = true; ///< false if any operating point failed the dominant-pole check
};

/// Runs the waveform from its first to its last sample time on the T_s grid.
/// Throws ParameterError for an empty waveform or one shorter than T_s.
[[nodiscard]] SimResult simulate_waveform(const Waveform& waveform, const PixelParams& params, const BiasPoint& bias,
                                          const SimOptions& options);

} // namespace dvssim
