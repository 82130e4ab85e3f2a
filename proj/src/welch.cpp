#include "dvssim/welch.hpp"

#include "dvssim/error.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <numbers>

namespace dvssim {

namespace {

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};

} // namespace

std::vector<PsdSample> welch_psd(std::span<const double> samples, double T_s, std::size_t segment_len,
                                 double overlap) {
    if (!(T_s > 0.0)) {
        throw ParameterError("sample period must be positive");
    }
    if (segment_len < 2 || segment_len > samples.size()) {
        throw ParameterError("Welch segment length must lie in [2, sample count]");
    }
    if (!(overlap >= 0.0 && overlap < 1.0)) {
        throw ParameterError("Welch overlap must lie in [0, 1)");
    }
    const std::size_t n = segment_len;
    const std::size_t bins = n / 2 + 1;
    auto hop = static_cast<std::size_t>(std::floor(static_cast<double>(n) * (1.0 - overlap)));
    hop = hop == 0 ? 1 : hop;

    std::vector<double> window(n);
    double wsum2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        // Periodic Hann window.
        window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
        wsum2 += window[i] * window[i];
    }

    std::unique_ptr<double, FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
    std::unique_ptr<fftw_complex, FftwFree> out(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)));
    std::unique_ptr<fftw_plan_s, PlanDeleter> plan(
        fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));

    std::vector<double> acc(bins, 0.0);
    std::size_t segments = 0;
    for (std::size_t start = 0; start + n <= samples.size(); start += hop) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mean += samples[start + i];
        }
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            in.get()[i] = (samples[start + i] - mean) * window[i];
        }
        fftw_execute(plan.get());
        for (std::size_t k = 0; k < bins; ++k) {
            const double re = out.get()[k][0];
            const double im = out.get()[k][1];
            acc[k] += re * re + im * im;
        }
        ++segments;
    }

    std::vector<PsdSample> psd(bins);
    const double scale = T_s / (wsum2 * static_cast<double>(segments));
    for (std::size_t k = 0; k < bins; ++k) {
        const bool edge = k == 0 || (n % 2 == 0 && k == bins - 1);
        psd[k].f_hz = static_cast<double>(k) / (static_cast<double>(n) * T_s);
        psd[k].psd = acc[k] * scale * (edge ? 1.0 : 2.0);
    }
    return psd;
}

} // namespace dvssim
