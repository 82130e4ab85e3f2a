#pragma once

// Scenario runners behind the command-line front end.

#include "dvssim/config.hpp"
#include "dvssim/event_gen.hpp"
#include "dvssim/io.hpp"
#include "dvssim/ou.hpp"
#include "dvssim/pixel_sim.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace dvssim {

/// Ordered key=value lines.
using Summary = std::vector<std::pair<std::string, std::string>>;

void write_summary(const std::filesystem::path& path, const Summary& summary);
[[nodiscard]] std::string format_summary(const Summary& summary);

/// Constant-illumination noise-event run: the OU noise is advanced with its
/// exact one-step transition and fed to the comparator.
struct NoiseRunConfig {
    OuParams ou{1e-3, 40.0};
    double theta_sigma = 1.0; ///< threshold in units of sigma (ON and OFF)
    double T_s = 1e-3;
    double duration = 100.0;
    EventMode mode = EventMode::Fpt;
    double refractory = 0.0;
    bool reset_includes_noise = true;
    std::uint64_t seed = 1;
    std::uint64_t pixel = 0;
    int batches = 20; ///< batch means for the standard error
};

struct NoiseRunResult {
    std::uint64_t on = 0;
    std::uint64_t off = 0;
    double rate = 0.0;   ///< events/s, both polarities
    double rate_se = 0.0;
    double wall_seconds = 0.0;
    std::uint64_t steps = 0;
    bool saturated = false;

    [[nodiscard]] double on_rate(double duration) const { return static_cast<double>(on) / duration; }
    [[nodiscard]] double off_rate(double duration) const { return static_cast<double>(off) / duration; }
};

[[nodiscard]] NoiseRunResult run_noise_events(const NoiseRunConfig& cfg);

/// OU model used by the sweeps: the config overrides, or the circuit reduced at i_low.
[[nodiscard]] OuParams resolve_ou(const SimConfig& cfg);

/// Builds the photocurrent waveform described by the config.
[[nodiscard]] Waveform make_waveform(const SimConfig& cfg);

/// Reference timestep (units of 1/f_c) used as ground truth by the sweeps.
inline constexpr double kReferenceTsFc = 0.0005;

[[nodiscard]] Summary run_simulate(const SimConfig& cfg);
[[nodiscard]] CsvTable run_sweep_threshold(const SimConfig& cfg, double ts_fc = 0.5);
[[nodiscard]] CsvTable run_sweep_timestep(const SimConfig& cfg);
[[nodiscard]] CsvTable run_bench(const SimConfig& cfg, Summary* host = nullptr);
[[nodiscard]] CsvTable run_psd(const SimConfig& cfg);
[[nodiscard]] Summary run_fit_psd(const SimConfig& cfg);

[[nodiscard]] std::string host_description();

} // namespace dvssim
