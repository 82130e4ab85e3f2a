#pragma once

// Small-signal model of the DVS photoreceptor (PR) and source-follower (SF)
// buffer: operating point, transfer functions, shot-noise PSD and its
// reduction to an Ornstein-Uhlenbeck process.

#include "dvssim/ou.hpp"
#include "dvssim/transfer_function.hpp"

#include <array>
#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <string_view>

namespace dvssim {

inline constexpr double kElectronCharge = 1.602176634e-19;
inline constexpr double kThermalVoltage300K = 0.02585;

/// Static physical parameters of one pixel.
struct PixelParams {
    double C_pd = 20e-15; ///< photodiode capacitance (F)
    double C_fb = 1e-15;  ///< feedback (Miller) capacitance (F)
    double C_pr = 5e-15;  ///< PR output node capacitance (F)
    double C_sf = 10e-15; ///< SF output node capacitance (F)
    double kappa_fb = 0.7;
    double kappa_amp_n = 0.7;
    double kappa_sf = 0.7;
    double V_A_amp_n = 20.0; ///< Early voltage of the amplifier nFET (V)
    double V_A_amp_p = 20.0; ///< Early voltage of the amplifier pFET (V)
    double U_T = kThermalVoltage300K;
    double q_e = kElectronCharge;

    /// Throws ParameterError when any invariant is violated.
    void validate() const;
};

/// Currents setting the operating point.
struct BiasPoint {
    double i_pd = 1e-12;  ///< photocurrent (A)
    double i_pr = 1e-9;   ///< photoreceptor bias (A)
    double i_sf = 100e-12; ///< source-follower bias (A)
};

/// Photocurrents below this are clamped; dark current dominates there anyway.
inline constexpr double kMinPhotocurrent = 1e-16;

[[nodiscard]] inline double clamp_photocurrent(double i_pd) {
    return i_pd < kMinPhotocurrent ? kMinPhotocurrent : i_pd;
}

/// Small-signal quantities at one bias point together with the coefficients
/// of the second-order PR transfer functions
///   Z(s) = Z_dc (1 + s/w_z) / (s^2/w0^2 + (2 zeta/w0) s + 1).
struct OperatingPoint {
    double gm_fb = 0.0;
    double gs_fb = 0.0;
    double gm_amp_n = 0.0;
    double gs_sf = 0.0;
    double R_out = 0.0;
    double A_loop = 0.0;
    double Zm_dc = 0.0;
    double Zout_dc = 0.0;
    double w_z_Zm = 0.0;   ///< rad/s, negative (right half-plane zero)
    double w_z_Zout = 0.0; ///< rad/s, negative
    double w0 = 0.0;
    double zeta = 0.0;
    double inv_w0_sq = 0.0;      ///< 1/w0^2 (s^2)
    double two_zeta_over_w0 = 0.0; ///< 2 zeta / w0 (s)
    double tau_pd = 0.0;
    double tau_pr = 0.0;
    double tau_sf = 0.0;
    double kappa_sf = 0.0;

    /// Magnitudes of the two PR poles in rad/s, slowest first. A complex pair
    /// reports w0 twice.
    [[nodiscard]] std::array<double, 2> pr_pole_magnitudes() const;

    /// Time constants of the three physical poles (two PR, one SF), largest first.
    [[nodiscard]] std::array<double, 3> pole_time_constants() const;

    /// Highest pole frequency in Hz.
    [[nodiscard]] double highest_pole_hz() const;
};

/// Evaluates every small-signal quantity for `bias` assuming weak inversion.
/// Throws ParameterError on non-positive currents or invalid parameters.
[[nodiscard]] OperatingPoint compute_operating_point(const PixelParams& params, const BiasPoint& bias);

enum class TfKind { Zm, Zout, Asf, ZoutSf };

[[nodiscard]] std::string_view to_string(TfKind kind);

/// Continuous-time transfer function of the selected path.
[[nodiscard]] ContinuousTf transfer_function(const OperatingPoint& op, TfKind kind);

/// H(j 2 pi f) of the selected path. Requires f >= 0.
[[nodiscard]] std::complex<double> eval_tf(const OperatingPoint& op, TfKind kind, double f_hz);

/// Shot-noise PSD at V_sf, one-sided, V^2/Hz, split per source.
struct NoisePsd {
    double pd = 0.0;
    double pr = 0.0;
    double sf = 0.0;
    double flicker = 0.0;
    [[nodiscard]] double total() const { return pd + pr + sf + flicker; }
};

/// Evaluates 4qI|H|^2 for the three shot-noise sources and the optional
/// K_f/f flicker term. Requires f >= 0; the flicker term is skipped at f = 0.
[[nodiscard]] NoisePsd eval_noise_psd(const OperatingPoint& op, const BiasPoint& bias, double f_hz,
                                      std::optional<double> flicker_coeff = std::nullopt);

/// Log-spaced trapezoid settings used to integrate a PSD over frequency.
struct PsdIntegration {
    double f_min = 1e-2;
    double upper_factor = 1e3; ///< upper limit = factor * highest pole frequency
    int points_per_decade = 64;
};

[[nodiscard]] double integrate_psd(const std::function<double(double)>& psd, double f_lo, double f_hi,
                                   int points_per_decade);

/// Result of collapsing a PSD onto an Ornstein-Uhlenbeck process.
struct OuReduction {
    double sigma = 0.0;
    double f_c = 0.0;
    double pole_separation = 0.0; ///< dominant time constant / next largest
    bool ou_valid = false;        ///< pole_separation >= kDominantPoleRatio

    [[nodiscard]] OuParams params() const { return {sigma, f_c}; }
};

inline constexpr double kDominantPoleRatio = 3.0;

/// sigma^2 is the integral of `psd`; f_c comes from the largest time constant.
/// `time_constants` must be nonempty and positive.
[[nodiscard]] OuReduction reduce_to_ou(const std::function<double(double)>& psd,
                                       std::span<const double> time_constants,
                                       const PsdIntegration& grid = {});

/// Pixel-level reduction: integrates the summed shot-noise PSD and picks the
/// dominant pole among the two PR poles and the SF pole.
[[nodiscard]] OuReduction reduce_to_ou(const OperatingPoint& op, const BiasPoint& bias,
                                       std::optional<double> flicker_coeff = std::nullopt,
                                       const PsdIntegration& grid = {});

/// Noise model of one pixel at one operating point.
struct NoiseModel {
    OperatingPoint op;
    BiasPoint bias;
    std::optional<double> flicker_coeff;
    OuReduction ou;

    [[nodiscard]] NoisePsd psd(double f_hz) const { return eval_noise_psd(op, bias, f_hz, flicker_coeff); }
};

[[nodiscard]] NoiseModel make_noise_model(const PixelParams& params, const BiasPoint& bias,
                                          std::optional<double> flicker_coeff = std::nullopt);

} // namespace dvssim
