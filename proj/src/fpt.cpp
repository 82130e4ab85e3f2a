#include "dvssim/fpt.hpp"

#include "dvssim/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace dvssim {

namespace {

// Crossing times are reported in (0, dt]; an endpoint already at the barrier
// maps to this fraction of dt.
constexpr double kImmediateFraction = 0x1p-30;

// Longest normalized interval handled in one piece by the line sampler.
constexpr double kMaxSamplerSpan = 32.0;

// Gap to the barrier, in units of sigma, at which the line sampler stops.
constexpr double kHitTolerance = 1e-9;

constexpr int kMaxLineIterations = 200;

double upper_tail(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

void check_query(const BridgeQuery& q, const OuParams& ou) {
    if (!(q.dt > 0.0) || !std::isfinite(q.dt)) {
        throw ParameterError("bridge interval must be positive");
    }
    if (!(ou.sigma >= 0.0) || !(ou.f_c > 0.0)) {
        throw ParameterError("OU parameters need sigma >= 0 and f_c > 0");
    }
}

/// Query scaled to sigma = 1 and theta = 1.
struct Normalized {
    double x0;
    double x1;
    double b;
    double L;
};

Normalized normalize(const BridgeQuery& q, const OuParams& ou) {
    return {q.x0 / ou.sigma, q.x1 / ou.sigma, q.barrier / ou.sigma, ou.theta() * q.dt};
}

// Noise-free bridge: the conditional mean path between the endpoints.
double mean_path(const BridgeQuery& q, double theta, double t) {
    const double L = theta * q.dt;
    return (q.x0 * std::sinh(L - theta * t) + q.x1 * std::sinh(theta * t)) / std::sinh(L);
}

std::optional<double> deterministic_crossing(const BridgeQuery& q, const OuParams& ou) {
    if (q.x0 >= q.barrier) {
        return q.dt * kImmediateFraction;
    }
    constexpr int kScan = 1024;
    const double theta = ou.theta();
    double prev = 0.0;
    for (int i = 1; i <= kScan; ++i) {
        const double t = q.dt * i / kScan;
        const double m = i == kScan ? q.x1 : mean_path(q, theta, t);
        if (m >= q.barrier) {
            double lo = prev;
            double hi = t;
            while (hi - lo > q.dt * 0x1p-40) {
                const double mid = 0.5 * (lo + hi);
                (mean_path(q, theta, mid) >= q.barrier ? hi : lo) = mid;
            }
            return hi;
        }
        prev = t;
    }
    return std::nullopt;
}

double log_transition(double x, double dt, double y) {
    const double v = -std::expm1(-2.0 * dt);
    const double d = x - y * std::exp(-dt);
    return -0.5 * d * d / v - 0.5 * std::log(2.0 * std::numbers::pi * v);
}

// Inverse Gaussian draw (Michael, Schucany and Haas); mu may be infinite,
// which gives the Levy distribution.
double inverse_gaussian(double mu, double lambda, Rng& rng) {
    const double z = rng.normal();
    const double y = z * z;
    if (!std::isfinite(mu)) {
        return lambda / y;
    }
    const double r = mu * y / (2.0 * lambda);
    const double x = mu / (1.0 + r + std::sqrt(r * r + 2.0 * r));
    return rng.uniform() * (mu + x) <= mu ? x : mu * mu / x;
}

// Line sampler on a normalized bridge; returns the normalized crossing time.
std::optional<double> sample_lines(double x0, double x1, double b, double L, double limit, Rng& rng) {
    if (x0 >= b) {
        return L * kImmediateFraction;
    }
    if (L > kMaxSamplerSpan) {
        // Split at the midpoint so that e^L stays well inside double range.
        const double h = 0.5 * L;
        const double mean = (x0 * std::sinh(L - h) + x1 * std::sinh(h)) / std::sinh(L);
        const double var = 2.0 * std::sinh(h) * std::sinh(L - h) / std::sinh(L);
        const double xm = mean + std::sqrt(var) * rng.normal();
        if (auto t = sample_lines(x0, xm, b, h, limit, rng)) {
            return t;
        }
        if (limit <= h) {
            return std::nullopt;
        }
        if (auto t = sample_lines(xm, x1, b, L - h, limit - h, rng)) {
            return h + *t;
        }
        return std::nullopt;
    }

    double ta = 0.0;
    double xa = x0;
    for (int it = 0; it < kMaxLineIterations; ++it) {
        const double D = L - ta;
        if (D <= 0.0) {
            return L;
        }
        // Time-changed frame: Y(tau) = X e^t, tau = (e^{2t} - 1)/2, a Wiener
        // process with variance rate 2 and barrier b sqrt(1 + 2 tau).
        const double em1 = std::expm1(D);
        const double E = em1 + 1.0;
        const double T = 0.5 * em1 * (E + 1.0);
        const double A = b - xa;
        double B;
        double slope;
        if (b >= 0.0) {
            // Chord of the concave barrier.
            B = (b - x1) * E;
            slope = b * em1 / T;
        } else {
            // Tangent at the start of the convex barrier.
            B = b * (1.0 + T) - x1 * E;
            slope = b;
        }
        if (B > 0.0) {
            const double p = std::exp(-A * B / T);
            if (rng.uniform() >= p) {
                return std::nullopt;
            }
        }
        const double mu = B != 0.0 ? A * T / std::abs(B) : std::numeric_limits<double>::infinity();
        const double R = inverse_gaussian(mu, 0.5 * A * A, rng);
        const double u = std::isfinite(R) ? T * R / (T + R) : T;
        const double tc = 0.5 * std::log1p(2.0 * u);
        const double line = b + slope * u;
        ta += tc;
        if (ta > limit) {
            // The crossing cannot come before `limit`.
            return std::nullopt;
        }
        xa = line * std::exp(-tc);
        if (b - xa < kHitTolerance) {
            return std::min(ta, L);
        }
    }
    return std::min(ta, L);
}

} // namespace

CrossingTimeDistribution::CrossingTimeDistribution(const BridgeQuery& q, const OuParams& ou, int bins) : dt_(q.dt) {
    check_query(q, ou);
    if (bins < 8) {
        throw ParameterError("crossing-time grid needs at least 8 bins");
    }
    if (q.x0 >= q.barrier) {
        probability_ = 1.0;
        nodes_ = {0.0, dt_ * kImmediateFraction, dt_};
        cum_ = {0.0, 1.0, 1.0};
        return;
    }
    if (ou.sigma == 0.0) {
        const auto tc = deterministic_crossing(q, ou);
        if (!tc) {
            return;
        }
        probability_ = 1.0;
        const double before = std::nextafter(*tc, 0.0);
        nodes_ = {0.0, before, *tc, dt_};
        cum_ = {0.0, 0.0, 1.0, 1.0};
        if (*tc >= dt_) {
            nodes_ = {0.0, before, dt_};
            cum_ = {0.0, 0.0, 1.0};
        }
        return;
    }

    const auto [x0, x1, b, L] = normalize(q, ou);
    const auto n = static_cast<std::size_t>(bins);
    std::vector<double> t(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        t[i] = 0.5 * L * (1.0 - std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(n)));
    }
    std::vector<double> mid(n);
    for (std::size_t k = 0; k < n; ++k) {
        mid[k] = 0.5 * (t[k] + t[k + 1]);
    }
    // P(X_d >= b | X_0 = b)
    const auto kernel = [b](double d) { return upper_tail(b * std::sqrt(std::tanh(0.5 * d))); };

    std::vector<double> g(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double tk = t[k + 1];
        double rhs = upper_tail((b - x0 * std::exp(-tk)) / std::sqrt(-std::expm1(-2.0 * tk)));
        for (std::size_t j = 0; j < k; ++j) {
            rhs -= g[j] * kernel(tk - mid[j]);
        }
        g[k] = rhs / kernel(tk - mid[k]);
    }

    std::vector<double> w(n);
    double total = 0.0;
    const double log_norm = log_transition(x1, L, x0);
    for (std::size_t k = 0; k < n; ++k) {
        w[k] = std::max(g[k], 0.0) * std::exp(log_transition(x1, L - mid[k], b) - log_norm);
        total += w[k];
    }
    probability_ = q.x1 >= q.barrier ? 1.0 : std::clamp(total, 0.0, 1.0);
    if (!(total > 0.0)) {
        probability_ = 0.0;
        return;
    }
    nodes_.resize(n + 1);
    cum_.resize(n + 1);
    double acc = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        nodes_[i] = dt_ * t[i] / L;
        cum_[i] = acc / total;
        if (i < n) {
            acc += w[i];
        }
    }
    nodes_.back() = dt_;
    cum_.back() = 1.0;
}

double CrossingTimeDistribution::cdf(double t) const {
    if (nodes_.empty() || t <= 0.0) {
        return 0.0;
    }
    if (t >= dt_) {
        return 1.0;
    }
    const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
    const auto i = static_cast<std::size_t>(it - nodes_.begin());
    const double t0 = nodes_[i - 1];
    const double t1 = nodes_[i];
    const double f = t1 > t0 ? (t - t0) / (t1 - t0) : 1.0;
    return cum_[i - 1] + f * (cum_[i] - cum_[i - 1]);
}

double CrossingTimeDistribution::quantile(double u) const {
    if (!(probability_ > 0.0)) {
        throw ParameterError("crossing time requested for a bridge that cannot cross");
    }
    if (!(u > 0.0 && u < 1.0)) {
        throw ParameterError("quantile level must lie in (0, 1)");
    }
    double lo = 0.0;
    double hi = dt_;
    const double tol = dt_ * 0x1p-24;
    while (hi - lo > tol) {
        const double m = 0.5 * (lo + hi);
        (cdf(m) >= u ? hi : lo) = m;
    }
    return std::max(hi, dt_ * kImmediateFraction);
}

double crossing_probability(const BridgeQuery& q, const OuParams& ou) {
    check_query(q, ou);
    if (q.x0 >= q.barrier || q.x1 >= q.barrier) {
        return 1.0;
    }
    if (ou.sigma == 0.0) {
        return deterministic_crossing(q, ou) ? 1.0 : 0.0;
    }
    return CrossingTimeDistribution(q, ou).probability();
}

double sample_crossing_time(const BridgeQuery& q, const OuParams& ou, double u) {
    return CrossingTimeDistribution(q, ou).quantile(u);
}

std::optional<double> sample_first_passage(const BridgeQuery& q, const OuParams& ou, Rng& rng, double t_limit) {
    check_query(q, ou);
    if (ou.sigma == 0.0) {
        const auto t = deterministic_crossing(q, ou);
        return t && *t <= t_limit ? t : std::nullopt;
    }
    const auto [x0, x1, b, L] = normalize(q, ou);
    const double limit = std::isfinite(t_limit) ? t_limit / q.dt * L : std::numeric_limits<double>::infinity();
    const auto t = sample_lines(x0, x1, b, L, limit, rng);
    if (!t) {
        return std::nullopt;
    }
    return std::clamp(*t / L, kImmediateFraction, 1.0) * q.dt;
}

double crossing_upper_bound(const BridgeQuery& q, const OuParams& ou) {
    check_query(q, ou);
    if (q.x0 >= q.barrier || q.x1 >= q.barrier) {
        return 1.0;
    }
    if (ou.sigma == 0.0) {
        return deterministic_crossing(q, ou) ? 1.0 : 0.0;
    }
    const auto [x0, x1, b, L] = normalize(q, ou);
    if (L > kMaxSamplerSpan) {
        return 1.0;
    }
    const double em1 = std::expm1(L);
    const double E = em1 + 1.0;
    const double T = 0.5 * em1 * (E + 1.0);
    const double B = b >= 0.0 ? (b - x1) * E : b * (1.0 + T) - x1 * E;
    return B > 0.0 ? std::exp(-(b - x0) * B / T) : 1.0;
}

double chord_crossing_probability(const BridgeQuery& q, const OuParams& ou) {
    check_query(q, ou);
    if (q.x0 >= q.barrier || q.x1 >= q.barrier) {
        return 1.0;
    }
    if (ou.sigma == 0.0) {
        return 0.0;
    }
    const double s2 = ou.sigma * ou.sigma;
    return std::exp(-(q.barrier - q.x0) * (q.barrier - q.x1) / (s2 * std::sinh(ou.theta() * q.dt)));
}

double sample_bridge_value(double x0, double x1, double dt, double t, const OuParams& ou, Rng& rng) {
    if (!(t > 0.0 && t < dt)) {
        throw ParameterError("bridge sample time must lie strictly inside the interval");
    }
    const double th = ou.theta();
    const double L = th * dt;
    const double h = th * t;
    double mean;
    double var;
    if (L > 300.0) {
        // Endpoints decorrelate; use exponential forms to avoid overflow.
        mean = x0 * std::exp(-h) + x1 * std::exp(h - L);
        var = (-std::expm1(-2.0 * h)) * (-std::expm1(-2.0 * (L - h)));
    } else {
        const double sL = std::sinh(L);
        mean = (x0 * std::sinh(L - h) + x1 * std::sinh(h)) / sL;
        var = 2.0 * std::sinh(h) * std::sinh(L - h) / sL;
    }
    return mean + ou.sigma * std::sqrt(std::max(var, 0.0)) * rng.normal();
}

OracleResult oracle_fine_step(const OuParams& ou, double x0, double dt, double barrier, int substeps, int n_paths,
                              std::uint64_t seed) {
    if (substeps < 100 || n_paths < 1) {
        throw ParameterError("oracle needs at least 100 substeps and one path");
    }
    check_query({x0, x0, dt, barrier}, ou);
    OracleResult out;
    if (x0 >= barrier) {
        out.crossing_fraction = 1.0;
        out.fpt_samples.assign(static_cast<std::size_t>(n_paths), 0.0);
        return out;
    }
    Rng rng(seed);
    const double th = ou.theta();
    const double h = dt / substeps;
    const double s2h = 2.0 * th * ou.sigma * ou.sigma * h;
    const double sd = std::sqrt(s2h);
    std::size_t hits = 0;
    for (int p = 0; p < n_paths; ++p) {
        double x = x0;
        for (int k = 0; k < substeps; ++k) {
            const double xn = x - th * x * h + sd * rng.normal();
            bool crossed = xn >= barrier;
            if (!crossed) {
                const double e = 2.0 * (barrier - x) * (barrier - xn) / s2h;
                crossed = e < 40.0 && rng.uniform() < std::exp(-e);
            }
            if (crossed) {
                ++hits;
                out.fpt_samples.push_back((k + rng.uniform()) * h);
                break;
            }
            x = xn;
        }
    }
    out.crossing_fraction = static_cast<double>(hits) / n_paths;
    return out;
}

OracleResult oracle_bridge_fine_step(const OuParams& ou, double x0, double x1, double dt, double barrier,
                                     int substeps, int n_paths, std::uint64_t seed) {
    if (substeps < 100 || n_paths < 1) {
        throw ParameterError("oracle needs at least 100 substeps and one path");
    }
    check_query({x0, x1, dt, barrier}, ou);
    OracleResult out;
    if (x0 >= barrier) {
        out.crossing_fraction = 1.0;
        out.fpt_samples.assign(static_cast<std::size_t>(n_paths), 0.0);
        return out;
    }
    const double th = ou.theta();
    const double h = dt / substeps;
    const auto n = static_cast<std::size_t>(substeps);
    // Per-substep bridge coefficients: X_next = a X + c x1 + sd Z.
    std::vector<double> a(n);
    std::vector<double> c(n);
    std::vector<double> sd(n);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double R = th * (dt - static_cast<double>(k) * h);
        const double sR = std::sinh(R);
        a[k] = std::sinh(R - th * h) / sR;
        c[k] = std::sinh(th * h) / sR;
        sd[k] = ou.sigma * std::sqrt(2.0 * std::sinh(th * h) * std::sinh(R - th * h) / sR);
    }
    const double chord_scale = ou.sigma * ou.sigma * std::sinh(th * h);

    Rng rng(seed);
    std::size_t hits = 0;
    for (int p = 0; p < n_paths; ++p) {
        double x = x0;
        for (std::size_t k = 0; k < n; ++k) {
            const double xn = k + 1 < n ? a[k] * x + c[k] * x1 + sd[k] * rng.normal() : x1;
            bool crossed = xn >= barrier;
            if (!crossed) {
                const double e = (barrier - x) * (barrier - xn) / chord_scale;
                crossed = e < 40.0 && rng.uniform() < std::exp(-e);
            }
            if (crossed) {
                ++hits;
                out.fpt_samples.push_back((static_cast<double>(k) + rng.uniform()) * h);
                break;
            }
            x = xn;
        }
    }
    out.crossing_fraction = static_cast<double>(hits) / n_paths;
    return out;
}

} // namespace dvssim
