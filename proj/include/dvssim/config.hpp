#pragma once

// Flat key=value configuration with '#' comments.

#include "dvssim/circuit_model.hpp"
#include "dvssim/event_gen.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dvssim {

enum class WaveformKind { Constant, Step, Pulse, Sine, Csv };

struct SimConfig {
    PixelParams params;
    BiasPoint bias; ///< bias.i_pd is unused; the waveform sets the photocurrent
    std::optional<double> flicker_coeff;

    double T_s = 10e-6;
    double duration = 5e-3;
    double relin_threshold = 0.01;

    WaveformKind waveform = WaveformKind::Step;
    double i_low = 10e-15;
    double i_high = 1e-12;
    double t_start = 1e-3;     ///< step or pulse onset (s)
    double pulse_width = 1e-3; ///< s
    double sine_freq = 100.0;  ///< Hz
    double sine_depth = 1.0;   ///< e-folds
    std::string waveform_csv;

    bool noise = true;
    ComparatorConfig comparator;
    std::uint64_t seed = 1;
    int pixels = 1;

    /// Noise-event harness (threshold and timestep sweeps, bench). When both
    /// are unset the OU model is reduced from the circuit at i_low.
    std::optional<double> ou_sigma;
    std::optional<double> ou_fc;
    double sweep_duration = 100.0; ///< simulated seconds per sweep point
    std::vector<double> theta_grid{0.5, 1.0, 1.5, 2.0, 3.0}; ///< thresholds in units of sigma
    std::vector<double> ts_grid{0.0005, 0.005, 0.05, 0.5};   ///< timesteps in units of 1/f_c
    double sweep_theta = 1.0;                                ///< threshold (sigma units) for timestep sweeps
    double bench_seconds = 1.0;                              ///< target wall time per bench point

    std::size_t psd_segment = 1u << 15;
    std::string fit_free = "C_pd,C_fb,C_pr,C_sf";
    std::vector<std::string> psd_files; ///< measured PSD CSVs for fit-psd
    std::vector<double> psd_i_pd;       ///< photocurrent of each measured file

    std::filesystem::path out_dir = "out";
};

/// Applies one key=value assignment. Throws ParameterError for unknown keys
/// or unparsable values.
void apply_setting(SimConfig& cfg, const std::string& key, const std::string& value);

/// Parses config text; `origin` names the source in error messages.
void apply_config_text(SimConfig& cfg, const std::string& text, const std::string& origin = "config");

/// Loads a config file. A `params_file = path` entry loads another file of
/// the same format first (relative to the including file).
[[nodiscard]] SimConfig load_config(const std::filesystem::path& path);

/// Overrides the seed from the DVSSIM_SEED environment variable if it is set.
void apply_env_overrides(SimConfig& cfg);

/// Validates cross-field invariants. Throws ParameterError.
void validate(const SimConfig& cfg);

[[nodiscard]] std::string to_string(WaveformKind kind);

/// Keys accepted by apply_setting, in a stable order.
[[nodiscard]] std::vector<std::string> config_keys();

} // namespace dvssim
