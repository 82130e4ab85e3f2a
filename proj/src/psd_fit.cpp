#include "dvssim/psd_fit.hpp"

#include "dvssim/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace dvssim {

namespace {

constexpr std::size_t kParamCount = static_cast<std::size_t>(FitParam::Count);

constexpr std::array<const char*, kParamCount> kNames{
    "C_pd", "C_fb", "C_pr", "C_sf", "kappa_fb", "kappa_amp_n", "kappa_sf", "V_A_amp_n", "V_A_amp_p"};

struct Range {
    double lo;
    double hi;
};

// Physical box for each parameter.
constexpr std::array<Range, kParamCount> kBox{
    Range{1e-17, 1e-12}, Range{1e-17, 1e-12}, Range{1e-17, 1e-12}, Range{1e-17, 1e-12},
    Range{0.3, 1.0},     Range{0.3, 1.0},     Range{0.3, 1.0},     Range{0.5, 500.0},
    Range{0.5, 500.0}};

std::vector<double> residuals(std::span<const MeasuredPsd> measured, const PixelParams& p,
                              std::optional<double> flicker) {
    std::vector<double> r;
    for (const auto& curve : measured) {
        const auto model = model_psd(p, curve, flicker);
        for (std::size_t i = 0; i < model.size(); ++i) {
            r.push_back(std::log10(model[i]) - std::log10(curve.samples[i].psd));
        }
    }
    return r;
}

double cost_of(const std::vector<double>& r) {
    double c = 0.0;
    for (double v : r) {
        c += v * v;
    }
    return 0.5 * c;
}

void check_inputs(std::span<const MeasuredPsd> measured) {
    std::size_t n = 0;
    double f_lo = std::numeric_limits<double>::infinity();
    double f_hi = 0.0;
    for (const auto& curve : measured) {
        for (const auto& s : curve.samples) {
            if (!(s.f_hz > 0.0) || !(s.psd > 0.0)) {
                throw ParameterError("measured PSD samples need positive frequency and PSD");
            }
            f_lo = std::min(f_lo, s.f_hz);
            f_hi = std::max(f_hi, s.f_hz);
            ++n;
        }
    }
    if (n < 10) {
        throw ParameterError("PSD fit needs at least 10 samples");
    }
    if (f_hi / f_lo < 100.0) {
        throw ParameterError("PSD fit needs samples spanning at least two decades");
    }
}

} // namespace

FitMask make_fit_mask(std::initializer_list<FitParam> params) {
    FitMask m;
    for (auto p : params) {
        m.set(static_cast<std::size_t>(p));
    }
    return m;
}

FitMask parse_fit_mask(const std::string& spec) {
    FitMask m;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (item.empty()) {
            continue;
        }
        const auto it = std::find_if(kNames.begin(), kNames.end(), [&](const char* n) { return item == n; });
        if (it == kNames.end()) {
            throw ParameterError("unknown fit parameter '" + item + "'");
        }
        m.set(static_cast<std::size_t>(it - kNames.begin()));
    }
    return m;
}

double get_param(const PixelParams& p, FitParam which) {
    switch (which) {
    case FitParam::C_pd: return p.C_pd;
    case FitParam::C_fb: return p.C_fb;
    case FitParam::C_pr: return p.C_pr;
    case FitParam::C_sf: return p.C_sf;
    case FitParam::kappa_fb: return p.kappa_fb;
    case FitParam::kappa_amp_n: return p.kappa_amp_n;
    case FitParam::kappa_sf: return p.kappa_sf;
    case FitParam::V_A_amp_n: return p.V_A_amp_n;
    case FitParam::V_A_amp_p: return p.V_A_amp_p;
    case FitParam::Count: break;
    }
    throw ParameterError("invalid fit parameter");
}

void set_param(PixelParams& p, FitParam which, double value) {
    switch (which) {
    case FitParam::C_pd: p.C_pd = value; return;
    case FitParam::C_fb: p.C_fb = value; return;
    case FitParam::C_pr: p.C_pr = value; return;
    case FitParam::C_sf: p.C_sf = value; return;
    case FitParam::kappa_fb: p.kappa_fb = value; return;
    case FitParam::kappa_amp_n: p.kappa_amp_n = value; return;
    case FitParam::kappa_sf: p.kappa_sf = value; return;
    case FitParam::V_A_amp_n: p.V_A_amp_n = value; return;
    case FitParam::V_A_amp_p: p.V_A_amp_p = value; return;
    case FitParam::Count: break;
    }
    throw ParameterError("invalid fit parameter");
}

std::vector<double> model_psd(const PixelParams& params, const MeasuredPsd& curve, std::optional<double> flicker) {
    const auto op = compute_operating_point(params, curve.bias);
    std::vector<double> out;
    out.reserve(curve.samples.size());
    for (const auto& s : curve.samples) {
        out.push_back(eval_noise_psd(op, curve.bias, s.f_hz, flicker).total());
    }
    return out;
}

FitResult fit_psd_params(std::span<const MeasuredPsd> measured, const PixelParams& initial, const FitMask& free,
                         const FitOptions& options) {
    check_inputs(measured);
    initial.validate();

    std::vector<FitParam> active;
    for (std::size_t i = 0; i < kParamCount; ++i) {
        if (free.test(i)) {
            const auto which = static_cast<FitParam>(i);
            const double v = get_param(initial, which);
            if (v < kBox[i].lo || v > kBox[i].hi) {
                throw ParameterError(std::string("initial ") + kNames[i] + " outside its physical range");
            }
            active.push_back(which);
        }
    }

    FitResult result;
    result.params = initial;
    auto r = residuals(measured, initial, options.flicker_coeff);
    double cost = cost_of(r);
    result.cost_history.push_back(cost);
    const auto finish = [&](FitResult& res, const std::vector<double>& res_r) {
        res.rms_log10_residual = std::sqrt(2.0 * cost_of(res_r) / static_cast<double>(res_r.size()));
    };
    if (active.empty()) {
        finish(result, r);
        return result;
    }

    const auto n = static_cast<Eigen::Index>(active.size());
    const auto m = static_cast<Eigen::Index>(r.size());

    // Unknowns are natural logs of the freed parameters.
    Eigen::VectorXd u(n);
    Eigen::VectorXd u_lo(n);
    Eigen::VectorXd u_hi(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto idx = static_cast<std::size_t>(active[static_cast<std::size_t>(k)]);
        u[k] = std::log(get_param(initial, active[static_cast<std::size_t>(k)]));
        u_lo[k] = std::log(kBox[idx].lo);
        u_hi[k] = std::log(kBox[idx].hi);
    }
    const auto params_at = [&](const Eigen::VectorXd& x) {
        PixelParams p = initial;
        for (Eigen::Index k = 0; k < n; ++k) {
            set_param(p, active[static_cast<std::size_t>(k)], std::exp(x[k]));
        }
        return p;
    };

    double lambda = 1e-3;
    constexpr double kDiffStep = 1e-5;
    bool converged = false;
    for (int it = 0; it < options.max_iterations; ++it) {
        result.iterations = it + 1;

        Eigen::MatrixXd J(m, n);
        for (Eigen::Index k = 0; k < n; ++k) {
            Eigen::VectorXd up = u;
            Eigen::VectorXd dn = u;
            up[k] += kDiffStep;
            dn[k] -= kDiffStep;
            const auto rp = residuals(measured, params_at(up), options.flicker_coeff);
            const auto rm = residuals(measured, params_at(dn), options.flicker_coeff);
            for (Eigen::Index j = 0; j < m; ++j) {
                J(j, k) = (rp[static_cast<std::size_t>(j)] - rm[static_cast<std::size_t>(j)]) / (2.0 * kDiffStep);
            }
        }
        const Eigen::Map<const Eigen::VectorXd> rv(r.data(), m);
        const Eigen::MatrixXd JtJ = J.transpose() * J;
        const Eigen::VectorXd g = J.transpose() * rv;

        bool accepted = false;
        for (int tries = 0; tries < 30; ++tries) {
            Eigen::MatrixXd A = JtJ;
            for (Eigen::Index k = 0; k < n; ++k) {
                A(k, k) += lambda * std::max(JtJ(k, k), 1e-12);
            }
            Eigen::VectorXd step = A.ldlt().solve(-g);
            Eigen::VectorXd trial = (u + step).cwiseMax(u_lo).cwiseMin(u_hi);
            auto r_trial = residuals(measured, params_at(trial), options.flicker_coeff);
            const double c_trial = cost_of(r_trial);
            if (std::isfinite(c_trial) && c_trial < cost) {
                const double rel = (cost - c_trial) / std::max(cost, 1e-300);
                const double step_norm = (trial - u).norm();
                u = trial;
                r = std::move(r_trial);
                cost = c_trial;
                result.cost_history.push_back(cost);
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                if (rel < options.tolerance || step_norm < 1e-10) {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if (!accepted || cost < 1e-30) {
            // No descent direction left: a local minimum within the box.
            converged = true;
        }
        if (converged) {
            break;
        }
    }

    result.params = params_at(u);
    finish(result, r);
    if (!converged) {
        throw FitError("PSD fit did not converge within the iteration cap", result);
    }
    return result;
}

} // namespace dvssim
