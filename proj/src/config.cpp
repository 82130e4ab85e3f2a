#include "dvssim/config.hpp"

#include "dvssim/error.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace dvssim {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) {
        return {};
    }
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
        throw ParameterError("'" + key + "': expected a number, got '" + v + "'");
    }
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
        throw ParameterError("'" + key + "': expected a nonnegative integer, got '" + v + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "on" || v == "1" || v == "yes") {
        return true;
    }
    if (v == "false" || v == "off" || v == "0" || v == "no") {
        return false;
    }
    throw ParameterError("'" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& item : split_list(v)) {
        out.push_back(parse_double(key, item));
    }
    return out;
}

WaveformKind parse_waveform(const std::string& v) {
    static const std::map<std::string, WaveformKind> kinds{{"constant", WaveformKind::Constant},
                                                           {"step", WaveformKind::Step},
                                                           {"pulse", WaveformKind::Pulse},
                                                           {"sine", WaveformKind::Sine},
                                                           {"csv", WaveformKind::Csv}};
    const auto it = kinds.find(v);
    if (it == kinds.end()) {
        throw ParameterError("'waveform': unknown kind '" + v + "'");
    }
    return it->second;
}

using Setter = std::function<void(SimConfig&, const std::string& key, const std::string& value)>;

Setter number(double SimConfig::*field) {
    return [field](SimConfig& c, const std::string& k, const std::string& v) { c.*field = parse_double(k, v); };
}

Setter param(double PixelParams::*field) {
    return [field](SimConfig& c, const std::string& k, const std::string& v) { c.params.*field = parse_double(k, v); };
}

Setter bias(double BiasPoint::*field) {
    return [field](SimConfig& c, const std::string& k, const std::string& v) { c.bias.*field = parse_double(k, v); };
}

Setter comparator(double ComparatorConfig::*field) {
    return [field](SimConfig& c, const std::string& k, const std::string& v) {
        c.comparator.*field = parse_double(k, v);
    };
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table{
        {"C_pd", param(&PixelParams::C_pd)},
        {"C_fb", param(&PixelParams::C_fb)},
        {"C_pr", param(&PixelParams::C_pr)},
        {"C_sf", param(&PixelParams::C_sf)},
        {"kappa_fb", param(&PixelParams::kappa_fb)},
        {"kappa_amp_n", param(&PixelParams::kappa_amp_n)},
        {"kappa_sf", param(&PixelParams::kappa_sf)},
        {"V_A_amp_n", param(&PixelParams::V_A_amp_n)},
        {"V_A_amp_p", param(&PixelParams::V_A_amp_p)},
        {"U_T", param(&PixelParams::U_T)},
        {"q_e", param(&PixelParams::q_e)},
        {"I_pr", bias(&BiasPoint::i_pr)},
        {"I_sf", bias(&BiasPoint::i_sf)},
        {"flicker_coeff",
         [](SimConfig& c, const std::string& k, const std::string& v) { c.flicker_coeff = parse_double(k, v); }},
        {"T_s", number(&SimConfig::T_s)},
        {"duration", number(&SimConfig::duration)},
        {"relin_threshold", number(&SimConfig::relin_threshold)},
        {"waveform", [](SimConfig& c, const std::string&, const std::string& v) { c.waveform = parse_waveform(v); }},
        {"i_low", number(&SimConfig::i_low)},
        {"i_high", number(&SimConfig::i_high)},
        {"t_start", number(&SimConfig::t_start)},
        {"pulse_width", number(&SimConfig::pulse_width)},
        {"sine_freq", number(&SimConfig::sine_freq)},
        {"sine_depth", number(&SimConfig::sine_depth)},
        {"waveform_csv", [](SimConfig& c, const std::string&, const std::string& v) { c.waveform_csv = v; }},
        {"noise", [](SimConfig& c, const std::string& k, const std::string& v) { c.noise = parse_bool(k, v); }},
        {"mode",
         [](SimConfig& c, const std::string&, const std::string& v) { c.comparator.mode = parse_event_mode(v); }},
        {"theta_on", comparator(&ComparatorConfig::theta_on)},
        {"theta_off", comparator(&ComparatorConfig::theta_off)},
        {"theta_offset", comparator(&ComparatorConfig::theta_offset)},
        {"a_diff", comparator(&ComparatorConfig::a_diff)},
        {"refractory", comparator(&ComparatorConfig::refractory)},
        {"reset_includes_noise",
         [](SimConfig& c, const std::string& k, const std::string& v) {
             c.comparator.reset_includes_noise = parse_bool(k, v);
         }},
        {"max_depth",
         [](SimConfig& c, const std::string& k, const std::string& v) {
             c.comparator.max_depth = static_cast<int>(parse_u64(k, v));
         }},
        {"seed", [](SimConfig& c, const std::string& k, const std::string& v) { c.seed = parse_u64(k, v); }},
        {"pixels",
         [](SimConfig& c, const std::string& k, const std::string& v) { c.pixels = static_cast<int>(parse_u64(k, v)); }},
        {"ou_sigma", [](SimConfig& c, const std::string& k, const std::string& v) { c.ou_sigma = parse_double(k, v); }},
        {"ou_fc", [](SimConfig& c, const std::string& k, const std::string& v) { c.ou_fc = parse_double(k, v); }},
        {"sweep_duration", number(&SimConfig::sweep_duration)},
        {"theta_grid",
         [](SimConfig& c, const std::string& k, const std::string& v) { c.theta_grid = parse_list(k, v); }},
        {"ts_grid", [](SimConfig& c, const std::string& k, const std::string& v) { c.ts_grid = parse_list(k, v); }},
        {"sweep_theta", number(&SimConfig::sweep_theta)},
        {"bench_seconds", number(&SimConfig::bench_seconds)},
        {"psd_segment",
         [](SimConfig& c, const std::string& k, const std::string& v) { c.psd_segment = parse_u64(k, v); }},
        {"fit_free", [](SimConfig& c, const std::string&, const std::string& v) { c.fit_free = v; }},
        {"psd_files", [](SimConfig& c, const std::string&, const std::string& v) { c.psd_files = split_list(v); }},
        {"psd_i_pd", [](SimConfig& c, const std::string& k, const std::string& v) { c.psd_i_pd = parse_list(k, v); }},
        {"out_dir", [](SimConfig& c, const std::string&, const std::string& v) { c.out_dir = v; }},
    };
    return table;
}

void apply_text(SimConfig& cfg, const std::string& text, const std::string& origin,
                const std::filesystem::path& base, int depth) {
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParameterError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        try {
            if (key == "params_file") {
                if (depth > 4) {
                    throw ParameterError("params_file nesting too deep");
                }
                const auto path = base / value;
                std::ifstream f(path);
                if (!f) {
                    throw IoError("cannot open '" + path.string() + "'");
                }
                std::stringstream buf;
                buf << f.rdbuf();
                apply_text(cfg, buf.str(), path.string(), path.parent_path(), depth + 1);
                continue;
            }
            const auto it = setters().find(key);
            if (it == setters().end()) {
                throw ParameterError("unknown key '" + key + "'");
            }
            it->second(cfg, key, value);
        } catch (const ParameterError& e) {
            throw ParameterError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

} // namespace

void apply_setting(SimConfig& cfg, const std::string& key, const std::string& value) {
    const auto it = setters().find(key);
    if (it == setters().end()) {
        throw ParameterError("unknown key '" + key + "'");
    }
    it->second(cfg, key, value);
}

void apply_config_text(SimConfig& cfg, const std::string& text, const std::string& origin) {
    apply_text(cfg, text, origin, std::filesystem::current_path(), 0);
}

SimConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) {
        throw IoError("cannot open config '" + path.string() + "'");
    }
    std::stringstream buf;
    buf << f.rdbuf();
    SimConfig cfg;
    apply_text(cfg, buf.str(), path.string(), path.parent_path(), 0);
    // File references are relative to the config file.
    const auto rel = [&](std::string& p) {
        if (!p.empty() && std::filesystem::path(p).is_relative()) {
            p = (path.parent_path() / p).string();
        }
    };
    rel(cfg.waveform_csv);
    for (auto& p : cfg.psd_files) {
        rel(p);
    }
    return cfg;
}

void apply_env_overrides(SimConfig& cfg) {
    if (const char* s = std::getenv("DVSSIM_SEED"); s != nullptr && *s != '\0') {
        cfg.seed = parse_u64("DVSSIM_SEED", s);
    }
}

void validate(const SimConfig& c) {
    c.params.validate();
    if (!(c.bias.i_pr > 0.0) || !(c.bias.i_sf > 0.0)) {
        throw ParameterError("bias currents must be positive");
    }
    if (!(c.T_s > 0.0)) {
        throw ParameterError("T_s must be positive");
    }
    if (!(c.duration >= c.T_s)) {
        throw ParameterError("duration must be at least one timestep");
    }
    if (!(c.i_low > 0.0) || !(c.i_high > 0.0)) {
        throw ParameterError("photocurrents must be positive");
    }
    if (c.waveform == WaveformKind::Csv) {
        if (c.waveform_csv.empty()) {
            throw ParameterError("waveform = csv needs waveform_csv");
        }
        if (!std::filesystem::exists(c.waveform_csv)) {
            throw IoError("waveform file '" + c.waveform_csv + "' does not exist");
        }
    }
    for (const auto& p : c.psd_files) {
        if (!std::filesystem::exists(p)) {
            throw IoError("PSD file '" + p + "' does not exist");
        }
    }
    if (c.pixels < 1) {
        throw ParameterError("pixels must be at least 1");
    }
    if (c.ou_sigma.has_value() != c.ou_fc.has_value()) {
        throw ParameterError("ou_sigma and ou_fc must be given together");
    }
    c.comparator.validate();
}

std::string to_string(WaveformKind kind) {
    switch (kind) {
    case WaveformKind::Constant: return "constant";
    case WaveformKind::Step: return "step";
    case WaveformKind::Pulse: return "pulse";
    case WaveformKind::Sine: return "sine";
    case WaveformKind::Csv: return "csv";
    }
    return "?";
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& [k, _] : setters()) {
        keys.push_back(k);
    }
    keys.push_back("params_file");
    return keys;
}

} // namespace dvssim
