#pragma once

// Time-domain shot-noise synthesis: white current noise per source, filtered
// through its path to v_pr and v_sf.

#include "dvssim/circuit_model.hpp"
#include "dvssim/discretize.hpp"
#include "dvssim/random.hpp"

#include <array>
#include <cstdint>

namespace dvssim {

/// Currents whose shot noise is synthesized. Unlike BiasPoint these may be
/// zero, which silences a source.
struct NoiseCurrents {
    double i_pd = 0.0;
    double i_pr = 0.0;
    double i_sf = 0.0;

    static NoiseCurrents from(const BiasPoint& b) { return {b.i_pd, b.i_pr, b.i_sf}; }
};

/// One white-noise source and the filter carrying it to its output node.
struct NoiseStreamState {
    StreamId source;
    FilterState filter;
    double scale = 0.0; ///< per-sample standard deviation, sqrt(2 q I / T_s) (ampere)
    Rng rng;
};

struct NoiseSample {
    double n_pr = 0.0;
    double n_sf = 0.0;
};

/// n_pr = Zm * w_pd + Zout * w_pr and n_sf = Asf * n_pr + ZoutSf * w_sf.
/// A white sample variance of 2qI/T_s gives the one-sided 4qI|H|^2 PSD.
class NoiseSynth {
public:
    NoiseSynth(const OperatingPoint& op, const NoiseCurrents& currents, double T_s, std::uint64_t seed,
               std::uint64_t pixel = 0);

    NoiseSynth(const OperatingPoint& op, const BiasPoint& bias, double T_s, std::uint64_t seed,
               std::uint64_t pixel = 0)
        : NoiseSynth(op, NoiseCurrents::from(bias), T_s, seed, pixel) {}

    /// Relinearizes all filters at a new operating point, keeping their state.
    void refresh(const OperatingPoint& op, const NoiseCurrents& currents);

    NoiseSample next();

    /// Advances `steps` samples and discards them.
    void warmup(std::size_t steps);

    [[nodiscard]] double T_s() const { return T_s_; }
    [[nodiscard]] const NoiseStreamState& stream(StreamId id) const;

private:
    void set_scales(const NoiseCurrents& currents);

    double T_s_;
    NoiseStreamState pd_;
    NoiseStreamState pr_;
    NoiseStreamState sf_;
    FilterState asf_;
};

} // namespace dvssim
