#pragma once

// First passage of an Ornstein-Uhlenbeck process through a constant upper
// barrier, conditioned on both endpoints of one timestep (an OU bridge).

#include "dvssim/ou.hpp"
#include "dvssim/random.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace dvssim {

/// Process values at both ends of an interval and the barrier, all in the
/// same voltage frame as the zero-mean OU process.
struct BridgeQuery {
    double x0 = 0.0;
    double x1 = 0.0;
    double dt = 0.0; ///< seconds, > 0
    double barrier = 0.0;
};

/// Crossing-time law of one bridge, obtained by solving the renewal
/// (first-kind Volterra) equation
///   P(X_t >= b | x0) = integral_0^t g(s) P(X_t >= b | X_s = b) ds
/// on a grid clustered at both interval ends, then pinning the far endpoint
/// with the transition density.
class CrossingTimeDistribution {
public:
    static constexpr int kDefaultBins = 400;

    CrossingTimeDistribution(const BridgeQuery& q, const OuParams& ou, int bins = kDefaultBins);

    /// Probability that the bridge reaches the barrier within (0, dt].
    [[nodiscard]] double probability() const { return probability_; }

    /// Conditional CDF P(t* <= t | crossing), t in seconds from the interval start.
    [[nodiscard]] double cdf(double t) const;

    /// Inverse of cdf() by bisection; u in (0, 1). Throws when probability() == 0.
    [[nodiscard]] double quantile(double u) const;

    [[nodiscard]] double dt() const { return dt_; }

private:
    double dt_ = 0.0;
    double probability_ = 0.0;
    std::vector<double> nodes_; ///< seconds, nodes_[0] = 0, nodes_.back() = dt
    std::vector<double> cum_;   ///< normalized cumulative mass at each node
};

/// Bridge upcrossing probability; 1 when either endpoint is at or above the barrier.
[[nodiscard]] double crossing_probability(const BridgeQuery& q, const OuParams& ou);

/// Conditional first-passage time for a uniform draw `u` in (0, 1), by
/// inverse transform with bisection down to below dt/1024.
/// Throws ParameterError when the crossing probability is zero.
[[nodiscard]] double sample_crossing_time(const BridgeQuery& q, const OuParams& ou, double u);

/// Exact-in-law joint sample of "crossed?" and the crossing time, drawn by
/// bounding the curved barrier of the time-changed Wiener bridge with
/// successive straight lines. Returns the crossing time in (0, dt], or
/// nothing when the bridge stays below the barrier. With `t_limit` set,
/// crossings later than t_limit are reported as nothing, which lets the
/// sampler stop early. This is the fast path used per simulation step.
[[nodiscard]] std::optional<double> sample_first_passage(const BridgeQuery& q, const OuParams& ou, Rng& rng,
                                                         double t_limit = std::numeric_limits<double>::infinity());

/// Cheap upper bound on crossing_probability from the first bounding line.
[[nodiscard]] double crossing_upper_bound(const BridgeQuery& q, const OuParams& ou);

/// Single-chord Brownian-bridge formula after the space-time transform,
/// exp(-(b - x0)(b - x1) / (sigma^2 sinh(theta dt))). Kept as a reference:
/// it is accurate only for theta*dt well below 1.
[[nodiscard]] double chord_crossing_probability(const BridgeQuery& q, const OuParams& ou);

/// Value of the bridge at `t` in (0, dt) drawn from its Gaussian law.
[[nodiscard]] double sample_bridge_value(double x0, double x1, double dt, double t, const OuParams& ou, Rng& rng);

struct OracleResult {
    double crossing_fraction = 0.0;
    std::vector<double> fpt_samples; ///< seconds from the interval start
};

/// Euler-Maruyama brute force on free paths started at x0 with `substeps`
/// substeps over dt. A Brownian-bridge check inside each substep removes the
/// discrete-monitoring bias. Requires substeps >= 100.
[[nodiscard]] OracleResult oracle_fine_step(const OuParams& ou, double x0, double dt, double barrier, int substeps,
                                            int n_paths, std::uint64_t seed);

/// Same as oracle_fine_step but with paths pinned at x1 by sampling the exact
/// OU bridge substep by substep.
[[nodiscard]] OracleResult oracle_bridge_fine_step(const OuParams& ou, double x0, double x1, double dt,
                                                   double barrier, int substeps, int n_paths, std::uint64_t seed);

} // namespace dvssim
