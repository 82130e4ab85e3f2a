#include "dvssim/event_gen.hpp"

#include "dvssim/error.hpp"
#include "dvssim/fpt.hpp"

#include <cmath>
#include <string>

namespace dvssim {

std::string_view to_string(EventMode mode) { return mode == EventMode::Naive ? "naive" : "fpt"; }

EventMode parse_event_mode(std::string_view text) {
    if (text == "naive") {
        return EventMode::Naive;
    }
    if (text == "fpt") {
        return EventMode::Fpt;
    }
    throw ParameterError("unknown event mode '" + std::string(text) + "' (expected naive or fpt)");
}

void ComparatorConfig::validate() const {
    if (!(theta_on > 0.0) || !(theta_off > 0.0)) {
        throw ParameterError("thresholds must be positive");
    }
    if (!(theta_on + theta_offset > 0.0) || !(theta_off + theta_offset > 0.0)) {
        throw ParameterError("threshold offset leaves a non-positive threshold");
    }
    if (!(a_diff > 0.0)) {
        throw ParameterError("a_diff must be positive");
    }
    if (!(refractory >= 0.0)) {
        throw ParameterError("refractory period must be nonnegative");
    }
    if (max_depth < 1) {
        throw ParameterError("max_depth must be at least 1");
    }
    if (mode == EventMode::Fpt && !reset_includes_noise && refractory == 0.0) {
        // The stored reference would sit exactly one threshold below the
        // current value, so a diffusion re-crosses immediately and forever.
        throw ParameterError("a noise-free reset reference needs a positive refractory period in fpt mode");
    }
}

double efold_to_volts(double efolds, double a_diff, double kappa_sf, double kappa_fb, double U_T) {
    return efolds * a_diff * kappa_sf * U_T / kappa_fb;
}

Comparator::Comparator(const ComparatorConfig& config, double v_ref)
    : config_(config), v_ref_(v_ref), on_step_((config.theta_on + config.theta_offset) / config.a_diff),
      off_step_((config.theta_off + config.theta_offset) / config.a_diff) {
    config_.validate();
}

bool Comparator::in_refractory(double t) const {
    return have_event_ && config_.refractory > 0.0 && t < last_event_ + config_.refractory;
}

void Comparator::emit(double t, Polarity p, std::vector<EventRecord>& out) {
    out.push_back({t, p});
    (p == Polarity::On ? stats_.on : stats_.off) += 1;
    last_event_ = t;
    have_event_ = true;
}

void Comparator::check_naive(const IntervalSample& s, std::vector<EventRecord>& out) {
    if (in_refractory(s.t_now)) {
        return;
    }
    const double v = s.signal_now + s.noise_now;
    const double up = (v - v_ref_) / on_step_;
    const double down = (v_ref_ - v) / off_step_;
    const double steps = up >= 1.0 ? up : (down >= 1.0 ? down : 0.0);
    if (steps < 1.0) {
        return;
    }
    const Polarity p = up >= 1.0 ? Polarity::On : Polarity::Off;
    // A refractory pixel cannot fire twice at the same instant.
    const auto count = config_.refractory > 0.0 ? 1 : static_cast<long>(std::floor(steps));
    for (long i = 0; i < count; ++i) {
        emit(s.t_now, p, out);
    }
    v_ref_ = config_.reset_includes_noise ? v : s.signal_now;
}

void Comparator::check_fpt(const IntervalSample& s, const OuParams& ou, Rng& rng, std::vector<EventRecord>& out) {
    if (ou.sigma == 0.0) {
        check_naive(s, out);
        return;
    }
    process({s.t_prev, s.signal_prev + s.noise_prev, s.signal_prev}, {s.t_now, s.signal_now + s.noise_now, s.signal_now},
            ou, rng, out, 0);
}

bool Comparator::process(Point a, Point b, const OuParams& ou, Rng& rng, std::vector<EventRecord>& out, int splits) {
    int depth = 0; // events in this sub-interval
    const auto signal_at = [&](double t) {
        const double f = (t - a.t) / (b.t - a.t);
        return a.signal + f * (b.signal - a.signal);
    };
    while (a.t < b.t) {
        if (in_refractory(b.t)) {
            return false;
        }
        if (in_refractory(a.t)) {
            const double t_r = last_event_ + config_.refractory;
            const double sig = signal_at(t_r);
            const double n = sample_bridge_value(a.v - a.signal, b.v - b.signal, b.t - a.t, t_r - a.t, ou, rng);
            a = {t_r, sig + n, sig};
            continue;
        }

        const double dt = b.t - a.t;
        const double s_mid = 0.5 * (a.signal + b.signal);
        const double on_level = v_ref_ + on_step_;
        const double off_level = v_ref_ - off_step_;
        const BridgeQuery q_on{a.v - s_mid, b.v - s_mid, dt, on_level - s_mid};
        const BridgeQuery q_off{s_mid - a.v, s_mid - b.v, dt, s_mid - off_level};

        if (splits < config_.max_splits &&
            crossing_upper_bound(q_on, ou) * crossing_upper_bound(q_off, ou) > config_.split_probability) {
            const double tm = a.t + 0.5 * dt;
            const double sig = signal_at(tm);
            const double n = sample_bridge_value(a.v - a.signal, b.v - b.signal, dt, 0.5 * dt, ou, rng);
            const Point m{tm, sig + n, sig};
            ++stats_.splits;
            return process(a, m, ou, rng, out, splits + 1) || process(m, b, ou, rng, out, splits + 1);
        }

        const auto t_on = sample_first_passage(q_on, ou, rng);
        const auto t_off = sample_first_passage(q_off, ou, rng, t_on ? *t_on : dt);
        if (!t_on && !t_off) {
            return false;
        }
        const bool on_first = t_on && (!t_off || *t_on <= *t_off);
        const Polarity p = on_first ? Polarity::On : Polarity::Off;
        double t_star = a.t + (on_first ? *t_on : *t_off);
        t_star = std::min(std::max(t_star, std::nextafter(a.t, b.t)), b.t);
        emit(t_star, p, out);

        const double level = on_first ? on_level : off_level;
        const double sig = signal_at(t_star);
        v_ref_ = config_.reset_includes_noise ? level : sig;
        if (++depth >= config_.max_depth) {
            // Drop the rest of this interval; the caller stops as well.
            stats_.saturated = true;
            return true;
        }
        a = {t_star, level, sig};
    }
    return false;
}

} // namespace dvssim
