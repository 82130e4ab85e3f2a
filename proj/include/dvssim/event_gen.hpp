#pragma once

// Comparator stage: v_diff = a_diff (v_sf - v_ref) against ON/OFF thresholds,
// either checked at timestep ends or placed inside steps by first passage.

#include "dvssim/ou.hpp"
#include "dvssim/random.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace dvssim {

enum class Polarity : std::int8_t { Off = -1, On = 1 };

struct EventRecord {
    double t = 0.0; ///< seconds
    Polarity polarity = Polarity::On;

    friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

enum class EventMode { Naive, Fpt };

[[nodiscard]] std::string_view to_string(EventMode mode);
[[nodiscard]] EventMode parse_event_mode(std::string_view text);

struct ComparatorConfig {
    double theta_on = 0.15;  ///< volt at v_diff (about 0.3 e-folds at the defaults)
    double theta_off = 0.15; ///< volt at v_diff
    double a_diff = 20.0;
    double refractory = 0.0; ///< seconds
    EventMode mode = EventMode::Fpt;
    /// When true the reset reference is the full v_sf (signal plus noise) at
    /// the event; when false only the noise-free signal is stored.
    bool reset_includes_noise = true;
    int max_depth = 16;         ///< events per (sub-)interval before saturating
    double theta_offset = 0.0;  ///< fixed per-pixel threshold mismatch (volt), added to both thresholds
    /// Split an interval at a sampled midpoint when the first-line bounds of
    /// both polarities exceed this value, so ON and OFF never compete over a
    /// long stretch.
    double split_probability = 0.05;
    int max_splits = 8;

    /// Throws ParameterError when an invariant is violated.
    void validate() const;
};

/// Converts a log-intensity contrast (e-folds) to a v_diff threshold in volts.
[[nodiscard]] double efold_to_volts(double efolds, double a_diff, double kappa_sf, double kappa_fb, double U_T);

/// One interval of the v_sf trajectory split into its noise-free signal
/// (linear between the ends) and noise.
struct IntervalSample {
    double t_prev = 0.0;
    double t_now = 0.0;
    double signal_prev = 0.0;
    double signal_now = 0.0;
    double noise_prev = 0.0;
    double noise_now = 0.0;
};

struct ComparatorStats {
    std::uint64_t on = 0;
    std::uint64_t off = 0;
    std::uint64_t splits = 0;
    bool saturated = false;
};

class Comparator {
public:
    /// `v_ref` is the initial reset level (usually v_sf at t = 0).
    Comparator(const ComparatorConfig& config, double v_ref);

    /// Checks the interval end only; emits floor(overshoot / threshold)
    /// events at t_now when v_diff crosses a threshold.
    void check_naive(const IntervalSample& s, std::vector<EventRecord>& out);

    /// Places events inside the interval from the first passage of the OU
    /// bridge between the two noise values, with the signal absorbed as a
    /// linear trend. sigma = 0 falls back to check_naive.
    void check_fpt(const IntervalSample& s, const OuParams& ou, Rng& rng, std::vector<EventRecord>& out);

    void check(const IntervalSample& s, const OuParams& ou, Rng& rng, std::vector<EventRecord>& out) {
        if (config_.mode == EventMode::Naive) {
            check_naive(s, out);
        } else {
            check_fpt(s, ou, rng, out);
        }
    }

    [[nodiscard]] double v_ref() const { return v_ref_; }
    [[nodiscard]] double v_diff(double v_sf) const { return config_.a_diff * (v_sf - v_ref_); }
    [[nodiscard]] const ComparatorStats& stats() const { return stats_; }
    [[nodiscard]] const ComparatorConfig& config() const { return config_; }

private:
    struct Point {
        double t;
        double v;      ///< total v_sf
        double signal; ///< noise-free v_sf
    };

    void emit(double t, Polarity p, std::vector<EventRecord>& out);
    bool in_refractory(double t) const;
    /// Returns true when the depth cap stopped event generation.
    bool process(Point a, Point b, const OuParams& ou, Rng& rng, std::vector<EventRecord>& out, int splits);

    ComparatorConfig config_;
    double v_ref_;
    double on_step_;
    double off_step_;
    double last_event_ = -1.0;
    bool have_event_ = false;
    ComparatorStats stats_;
};

} // namespace dvssim
