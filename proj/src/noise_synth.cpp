#include "dvssim/noise_synth.hpp"

#include "dvssim/error.hpp"

#include <cmath>

namespace dvssim {

NoiseSynth::NoiseSynth(const OperatingPoint& op, const NoiseCurrents& currents, double T_s, std::uint64_t seed,
                       std::uint64_t pixel)
    : T_s_(T_s),
      pd_{StreamId::Ipd, bilinear(transfer_function(op, TfKind::Zm), T_s), 0.0, Rng(seed, pixel, StreamId::Ipd)},
      pr_{StreamId::Ipr, bilinear(transfer_function(op, TfKind::Zout), T_s), 0.0, Rng(seed, pixel, StreamId::Ipr)},
      sf_{StreamId::Isf, bilinear(transfer_function(op, TfKind::ZoutSf), T_s), 0.0, Rng(seed, pixel, StreamId::Isf)},
      asf_(bilinear(transfer_function(op, TfKind::Asf), T_s)) {
    set_scales(currents);
}

void NoiseSynth::set_scales(const NoiseCurrents& c) {
    if (!(c.i_pd >= 0.0 && c.i_pr >= 0.0 && c.i_sf >= 0.0)) {
        throw ParameterError("noise currents must be nonnegative");
    }
    pd_.scale = std::sqrt(2.0 * kElectronCharge * c.i_pd / T_s_);
    pr_.scale = std::sqrt(2.0 * kElectronCharge * c.i_pr / T_s_);
    sf_.scale = std::sqrt(2.0 * kElectronCharge * c.i_sf / T_s_);
}

void NoiseSynth::refresh(const OperatingPoint& op, const NoiseCurrents& currents) {
    pd_.filter.refresh(transfer_function(op, TfKind::Zm));
    pr_.filter.refresh(transfer_function(op, TfKind::Zout));
    sf_.filter.refresh(transfer_function(op, TfKind::ZoutSf));
    asf_.refresh(transfer_function(op, TfKind::Asf));
    set_scales(currents);
}

NoiseSample NoiseSynth::next() {
    const double w_pd = pd_.scale * pd_.rng.normal();
    const double w_pr = pr_.scale * pr_.rng.normal();
    const double w_sf = sf_.scale * sf_.rng.normal();
    NoiseSample s;
    s.n_pr = pd_.filter.process(w_pd) + pr_.filter.process(w_pr);
    s.n_sf = asf_.process(s.n_pr) + sf_.filter.process(w_sf);
    return s;
}

void NoiseSynth::warmup(std::size_t steps) {
    for (std::size_t i = 0; i < steps; ++i) {
        (void)next();
    }
}

const NoiseStreamState& NoiseSynth::stream(StreamId id) const {
    switch (id) {
    case StreamId::Ipd: return pd_;
    case StreamId::Ipr: return pr_;
    case StreamId::Isf: return sf_;
    default: break;
    }
    throw ParameterError("not a noise source stream");
}

} // namespace dvssim
