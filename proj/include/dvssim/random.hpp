#pragma once

#include <cstdint>
#include <random>

namespace dvssim {

/// Noise sources that own an independent random stream.
enum class StreamId : std::uint32_t { Ipd = 1, Ipr = 2, Isf = 3, Comparator = 4, Harness = 5 };

/// Seeded random stream. Each (seed, pixel, stream) triple maps to an
/// independent engine state through std::seed_seq, so results do not depend
/// on the order in which pixels are scheduled.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t pixel = 0, StreamId stream = StreamId::Harness) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(pixel), static_cast<std::uint32_t>(pixel >> 32),
                          static_cast<std::uint32_t>(stream)};
        engine_.seed(seq);
    }

    /// Uniform on [0, 1).
    double uniform() { return uniform_(engine_); }

    /// Uniform on (0, 1).
    double uniform_open() {
        double u;
        do {
            u = uniform_(engine_);
        } while (u == 0.0);
        return u;
    }

    double normal() { return normal_(engine_); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace dvssim
