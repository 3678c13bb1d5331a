#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>

namespace barker {

/// Deterministic RNG stream (xoshiro256**) with cheap substream derivation.
///
/// All stochastic routines in the library take an explicit Rng& so that
/// runs are reproducible and concurrent updates can use disjoint streams.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
    }

    /// Derive an independent-for-practical-purposes stream from a seed and a
    /// tuple of tags (e.g. {iteration, sweep, interval}).
    static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
        std::uint64_t x = seed;
        std::uint64_t h = splitmix64(x);
        for (std::uint64_t tag : tags) {
            x ^= tag + 0x9e3779b97f4a7c15ULL + (x << 6) + (x >> 2);
            h ^= splitmix64(x);
        }
        return Rng(h);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform on (0,1); never returns an exact 0 or 1.
    double uniform01() {
        const double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
        return u > 0.0 ? u : 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer on [lo, hi] inclusive.
    long uniform_int(long lo, long hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo + 1);
        return lo + static_cast<long>(next() % span);
    }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Standard normal via the Marsaglia polar method (second value discarded
    /// so that the stream state does not depend on call history).
    double normal() {
        for (;;) {
            const double a = 2.0 * uniform01() - 1.0;
            const double b = 2.0 * uniform01() - 1.0;
            const double s = a * a + b * b;
            if (s > 0.0 && s < 1.0) return a * std::sqrt(-2.0 * std::log(s) / s);
        }
    }

    /// Gamma(shape, rate) via Marsaglia-Tsang squeeze.
    double gamma(double shape, double rate) {
        if (!(shape > 0.0) || !(rate > 0.0)) throw std::invalid_argument("gamma: shape and rate must be positive");
        if (shape < 1.0) {
            const double boost = std::pow(uniform01(), 1.0 / shape);
            return boost * gamma(shape + 1.0, rate);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
        }
    }

    /// Poisson(lambda) by exponential inter-arrival accumulation in log space.
    long poisson(double lambda) {
        if (lambda < 0.0) throw std::invalid_argument("poisson: negative mean");
        if (lambda == 0.0) return 0;
        long k = 0;
        double acc = 0.0;
        for (;;) {
            acc += -std::log(uniform01());
            if (acc >= lambda) return k;
            ++k;
        }
    }

  private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    std::array<std::uint64_t, 4> state_{};
};

}  // namespace barker
