#pragma once

#include "dvssim/circuit_model.hpp"
#include "dvssim/welch.hpp"

#include <bitset>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dvssim {

/// One measured PSD curve and the bias/illumination it was taken at.
struct MeasuredPsd {
    BiasPoint bias;
    std::vector<PsdSample> samples;
};

/// Parameters that may be freed during fitting.
enum class FitParam : std::size_t {
    C_pd,
    C_fb,
    C_pr,
    C_sf,
    kappa_fb,
    kappa_amp_n,
    kappa_sf,
    V_A_amp_n,
    V_A_amp_p,
    Count
};

using FitMask = std::bitset<static_cast<std::size_t>(FitParam::Count)>;

[[nodiscard]] FitMask make_fit_mask(std::initializer_list<FitParam> params);

/// Parses a comma-separated list of parameter names (e.g. "C_pd,C_fb").
[[nodiscard]] FitMask parse_fit_mask(const std::string& spec);

[[nodiscard]] double get_param(const PixelParams& p, FitParam which);
void set_param(PixelParams& p, FitParam which, double value);

struct FitOptions {
    int max_iterations = 200;
    double tolerance = 1e-12; ///< relative cost decrease treated as converged
    std::optional<double> flicker_coeff;
};

struct FitResult {
    PixelParams params;
    double rms_log10_residual = 0.0;
    std::vector<double> cost_history; ///< cost after each accepted step, starting with the initial cost
    int iterations = 0;
};

/// Raised when the iteration cap is hit; carries the best parameters found.
class FitError : public std::runtime_error {
public:
    FitError(const std::string& what, FitResult best) : std::runtime_error(what), best_(std::move(best)) {}
    [[nodiscard]] const FitResult& best() const { return best_; }

private:
    FitResult best_;
};

/// Model PSD at V_sf for every sample of `curve`.
[[nodiscard]] std::vector<double> model_psd(const PixelParams& params, const MeasuredPsd& curve,
                                            std::optional<double> flicker_coeff = std::nullopt);

/// Damped Gauss-Newton in log10(PSD) versus log(parameter) space with box
/// constraints on the physical ranges of the freed parameters.
[[nodiscard]] FitResult fit_psd_params(std::span<const MeasuredPsd> measured, const PixelParams& initial,
                                       const FitMask& free, const FitOptions& options = {});

} // namespace dvssim
