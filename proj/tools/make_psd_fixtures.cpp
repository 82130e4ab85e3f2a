// Writes the synthetic measured-PSD fixtures used by the tests. The curves
// come from the model itself at a perturbed "device" parameter set, with 1/f
// noise and multiplicative scatter added, so they stand in for measurements
// without being identical to the default model.

#include "dvssim/circuit_model.hpp"
#include "dvssim/io.hpp"
#include "dvssim/random.hpp"

#include <cmath>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_psd_fixtures <output-dir>\n";
        return 2;
    }
    const std::filesystem::path dir = argv[1];

    dvssim::PixelParams device;
    device.C_pd = 24e-15;
    device.C_fb = 1.2e-15;
    device.C_pr = 4.5e-15;
    device.C_sf = 11e-15;
    device.kappa_fb = 0.72;
    device.kappa_amp_n = 0.68;
    device.kappa_sf = 0.74;
    device.V_A_amp_n = 18.0;
    device.V_A_amp_p = 24.0;
    constexpr double kFlicker = 2e-11; // V^2
    constexpr double kScatter = 0.05;  // relative, log-normal

    struct Set {
        const char* tag;
        double i_pr;
    };
    dvssim::Rng rng(20240101);
    for (const Set set : {Set{"ipr6p", 6e-12}, Set{"ipr3n", 3e-9}}) {
        for (double i_pd : {10e-15, 100e-15, 1e-12, 10e-12}) {
            dvssim::BiasPoint bias{i_pd, set.i_pr, 100e-12};
            const auto op = dvssim::compute_operating_point(device, bias);
            std::vector<dvssim::PsdSample> out;
            for (int k = 0; k <= 100; ++k) {
                const double f = std::pow(10.0, k / 20.0); // 1 Hz .. 100 kHz
                const double s = dvssim::eval_noise_psd(op, bias, f, kFlicker).total();
                out.push_back({f, s * std::exp(kScatter * rng.normal())});
            }
            const auto name = std::string("psd_") + set.tag + "_ipd" + std::to_string(static_cast<int>(std::lround(i_pd * 1e15))) + "f.csv";
            dvssim::write_psd_csv(dir / name, out);
            std::cout << (dir / name).string() << "\n";
        }
    }
    return 0;
}
