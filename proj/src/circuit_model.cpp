#include "dvssim/circuit_model.hpp"

#include "dvssim/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace dvssim {

namespace {

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ParameterError(std::string(name) + " must be positive and finite");
    }
}

} // namespace

std::size_t ContinuousTf::order() const {
    if (num[2] != 0.0 || den[2] != 0.0) {
        return 2;
    }
    if (num[1] != 0.0 || den[1] != 0.0) {
        return 1;
    }
    return 0;
}

std::complex<double> ContinuousTf::evaluate(std::complex<double> s) const {
    const auto n = num[0] + s * (num[1] + s * num[2]);
    const auto d = den[0] + s * (den[1] + s * den[2]);
    return n / d;
}

std::complex<double> ContinuousTf::at_frequency(double f_hz) const {
    return evaluate({0.0, 2.0 * std::numbers::pi * f_hz});
}

bool ContinuousTf::is_stable() const {
    // Routh-Hurwitz for degree <= 2: all denominator coefficients share a sign.
    if (den[0] == 0.0) {
        return false;
    }
    const double sign = den[0] > 0.0 ? 1.0 : -1.0;
    if (den[2] != 0.0) {
        return sign * den[1] > 0.0 && sign * den[2] > 0.0;
    }
    if (den[1] != 0.0) {
        return sign * den[1] > 0.0;
    }
    return true;
}

void PixelParams::validate() const {
    require_positive(C_pd, "C_pd");
    require_positive(C_fb, "C_fb");
    require_positive(C_pr, "C_pr");
    require_positive(C_sf, "C_sf");
    for (auto [k, name] : {std::pair{kappa_fb, "kappa_fb"}, std::pair{kappa_amp_n, "kappa_amp_n"},
                           std::pair{kappa_sf, "kappa_sf"}}) {
        if (!(k > 0.0 && k <= 1.0)) {
            throw ParameterError(std::string(name) + " must lie in (0, 1]");
        }
    }
    require_positive(V_A_amp_n, "V_A_amp_n");
    require_positive(V_A_amp_p, "V_A_amp_p");
    require_positive(U_T, "U_T");
    require_positive(q_e, "q_e");
}

std::array<double, 2> OperatingPoint::pr_pole_magnitudes() const {
    const double disc = two_zeta_over_w0 * two_zeta_over_w0 - 4.0 * inv_w0_sq;
    if (disc < 0.0) {
        return {w0, w0};
    }
    // Product of the roots is 1/inv_w0_sq; the smaller one is computed without cancellation.
    const double slow = 2.0 / (two_zeta_over_w0 + std::sqrt(disc));
    const double fast = 1.0 / (inv_w0_sq * slow);
    return {slow, fast};
}

std::array<double, 3> OperatingPoint::pole_time_constants() const {
    const auto poles = pr_pole_magnitudes();
    std::array<double, 3> taus{1.0 / poles[0], 1.0 / poles[1], tau_sf};
    std::sort(taus.begin(), taus.end(), std::greater<>());
    return taus;
}

double OperatingPoint::highest_pole_hz() const {
    return 1.0 / (2.0 * std::numbers::pi * pole_time_constants()[2]);
}

OperatingPoint compute_operating_point(const PixelParams& p, const BiasPoint& bias) {
    p.validate();
    require_positive(bias.i_pd, "I_pd");
    require_positive(bias.i_pr, "I_pr");
    require_positive(bias.i_sf, "I_sf");

    OperatingPoint op;
    op.gm_fb = p.kappa_fb * bias.i_pd / p.U_T;
    op.gs_fb = bias.i_pd / p.U_T;
    op.gm_amp_n = p.kappa_amp_n * bias.i_pr / p.U_T;
    op.gs_sf = bias.i_sf / p.U_T;
    op.R_out = p.V_A_amp_n * p.V_A_amp_p / (bias.i_pr * (p.V_A_amp_n + p.V_A_amp_p));
    op.A_loop = op.gm_amp_n * op.R_out * op.gm_fb / op.gs_fb;

    const double loop = op.A_loop + 1.0;
    op.Zm_dc = (1.0 / op.gm_fb) * op.A_loop / loop;
    op.Zout_dc = op.R_out / loop;
    op.w_z_Zm = -op.gm_amp_n / p.C_fb;
    op.w_z_Zout = -op.gs_fb / (p.C_pd + p.C_fb);

    op.tau_pd = (p.C_pd + (1.0 + op.gm_amp_n * op.R_out) * p.C_fb) / op.gs_fb;
    // The capital-G transconductance in the tau_pr expression is gm_fb.
    op.tau_pr = op.R_out * (p.C_pr + (1.0 - op.gm_fb / op.gs_fb) * p.C_fb);
    op.tau_sf = p.C_sf / op.gs_sf;

    const double cap_sum = p.C_pd * p.C_fb + p.C_pr * p.C_fb + p.C_pr * p.C_pd;
    op.inv_w0_sq = cap_sum * (op.R_out / op.gs_fb) / loop;
    op.two_zeta_over_w0 = (op.tau_pd + op.tau_pr) / loop;
    op.w0 = 1.0 / std::sqrt(op.inv_w0_sq);
    op.zeta = 0.5 * op.two_zeta_over_w0 * op.w0;
    op.kappa_sf = p.kappa_sf;
    return op;
}

std::string_view to_string(TfKind kind) {
    switch (kind) {
    case TfKind::Zm: return "Zm";
    case TfKind::Zout: return "Zout";
    case TfKind::Asf: return "Asf";
    case TfKind::ZoutSf: return "ZoutSf";
    }
    return "?";
}

ContinuousTf transfer_function(const OperatingPoint& op, TfKind kind) {
    ContinuousTf tf;
    switch (kind) {
    case TfKind::Zm:
    case TfKind::Zout: {
        const double dc = kind == TfKind::Zm ? op.Zm_dc : op.Zout_dc;
        const double wz = kind == TfKind::Zm ? op.w_z_Zm : op.w_z_Zout;
        tf.num = {dc, dc / wz, 0.0};
        tf.den = {1.0, op.two_zeta_over_w0, op.inv_w0_sq};
        break;
    }
    case TfKind::Asf:
        tf.num = {op.kappa_sf, 0.0, 0.0};
        tf.den = {1.0, op.tau_sf, 0.0};
        break;
    case TfKind::ZoutSf:
        tf.num = {1.0 / op.gs_sf, 0.0, 0.0};
        tf.den = {1.0, op.tau_sf, 0.0};
        break;
    }
    return tf;
}

std::complex<double> eval_tf(const OperatingPoint& op, TfKind kind, double f_hz) {
    if (!(f_hz >= 0.0)) {
        throw ParameterError("frequency must be nonnegative");
    }
    if (f_hz == 0.0) {
        return transfer_function(op, kind).dc_gain();
    }
    return transfer_function(op, kind).at_frequency(f_hz);
}

NoisePsd eval_noise_psd(const OperatingPoint& op, const BiasPoint& bias, double f_hz,
                        std::optional<double> flicker_coeff) {
    if (!(f_hz >= 0.0)) {
        throw ParameterError("frequency must be nonnegative");
    }
    const double q = kElectronCharge;
    const double zm = std::norm(eval_tf(op, TfKind::Zm, f_hz));
    const double zout = std::norm(eval_tf(op, TfKind::Zout, f_hz));
    const double asf = std::norm(eval_tf(op, TfKind::Asf, f_hz));
    const double zsf = std::norm(eval_tf(op, TfKind::ZoutSf, f_hz));

    NoisePsd out;
    out.pd = 4.0 * q * bias.i_pd * zm * asf;
    out.pr = 4.0 * q * bias.i_pr * zout * asf;
    out.sf = 4.0 * q * bias.i_sf * zsf;
    if (flicker_coeff && f_hz > 0.0) {
        out.flicker = *flicker_coeff / f_hz;
    }
    return out;
}

double integrate_psd(const std::function<double(double)>& psd, double f_lo, double f_hi, int points_per_decade) {
    if (!(f_lo > 0.0 && f_hi > f_lo) || points_per_decade < 1) {
        throw ParameterError("invalid PSD integration range");
    }
    const double decades = std::log10(f_hi / f_lo);
    const auto n = static_cast<std::size_t>(std::ceil(decades * points_per_decade)) + 1;
    const double step = decades / static_cast<double>(n - 1);
    double sum = 0.0;
    double f_prev = f_lo;
    double s_prev = psd(f_lo);
    for (std::size_t i = 1; i < n; ++i) {
        const double f = f_lo * std::pow(10.0, step * static_cast<double>(i));
        const double s = psd(f);
        sum += 0.5 * (s + s_prev) * (f - f_prev);
        f_prev = f;
        s_prev = s;
    }
    return sum;
}

OuReduction reduce_to_ou(const std::function<double(double)>& psd, std::span<const double> time_constants,
                         const PsdIntegration& grid) {
    if (time_constants.empty()) {
        throw ParameterError("reduce_to_ou needs at least one time constant");
    }
    std::vector<double> taus(time_constants.begin(), time_constants.end());
    for (double t : taus) {
        require_positive(t, "time constant");
    }
    std::sort(taus.begin(), taus.end(), std::greater<>());

    const double f_hi = grid.upper_factor / (2.0 * std::numbers::pi * taus.back());
    const double variance = integrate_psd(psd, grid.f_min, std::max(f_hi, 10.0 * grid.f_min), grid.points_per_decade);

    OuReduction r;
    r.sigma = std::sqrt(std::max(variance, 0.0));
    r.f_c = 1.0 / (2.0 * std::numbers::pi * taus.front());
    r.pole_separation = taus.size() > 1 ? taus[0] / taus[1] : std::numeric_limits<double>::infinity();
    r.ou_valid = r.pole_separation >= kDominantPoleRatio;
    return r;
}

OuReduction reduce_to_ou(const OperatingPoint& op, const BiasPoint& bias, std::optional<double> flicker_coeff,
                         const PsdIntegration& grid) {
    const auto taus = op.pole_time_constants();
    return reduce_to_ou([&](double f) { return eval_noise_psd(op, bias, f, flicker_coeff).total(); }, taus, grid);
}

NoiseModel make_noise_model(const PixelParams& params, const BiasPoint& bias, std::optional<double> flicker_coeff) {
    NoiseModel m;
    m.op = compute_operating_point(params, bias);
    m.bias = bias;
    m.flicker_coeff = flicker_coeff;
    m.ou = reduce_to_ou(m.op, bias, flicker_coeff);
    return m;
}

} // namespace dvssim
