#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "barker/rng.hpp"

namespace barker {

/// A lazily sampleable Bernoulli event of unknown probability. Each call must
/// produce an independent draw with the same fixed success probability.
using Coin = std::function<bool(Rng&)>;

/// One unnormalised term c * p of a Barker ratio: the weight is carried in
/// log space because the c's arising from Girsanov exponents overflow doubles.
struct WeightedCoin {
    double log_weight = 0.0;  // log c, c > 0
    Coin coin;
};

struct TwoCoinOutcome {
    bool bit = false;
    std::uint64_t loops = 0;  // passes through step 1; >= 1 for a completed run
};

/// Raised when a diagnostic loop cap fires. Exactness of the simulated event
/// is void once this happens; it signals that the bound constants feeding the
/// weights are too loose for the problem at hand.
struct LoopCapExceeded : std::runtime_error {
    LoopCapExceeded(std::uint64_t cap_, double log_w1, double log_w2)
        : std::runtime_error("two_coin: loop cap " + std::to_string(cap_) +
                             " exceeded (log weights " + std::to_string(log_w1) + ", " +
                             std::to_string(log_w2) + ")"),
          cap(cap_) {}
    std::uint64_t cap;
};

/// The 2-coin algorithm: emits 1 with probability c1*p1 / (c1*p1 + c2*p2)
/// without ever evaluating p1 or p2. The number of loops is geometric with
/// success probability (c1*p1 + c2*p2) / (c1 + c2).
inline TwoCoinOutcome two_coin(const WeightedCoin& a, const WeightedCoin& b, Rng& rng,
                               std::optional<std::uint64_t> loop_cap = std::nullopt) {
    if (!std::isfinite(a.log_weight) || !std::isfinite(b.log_weight))
        throw std::invalid_argument("two_coin: log weights must be finite");
    // P(first coin) = c1/(c1+c2), computed stably in log space.
    const double p_first = 1.0 / (1.0 + std::exp(b.log_weight - a.log_weight));
    std::uint64_t loops = 0;
    for (;;) {
        ++loops;
        if (loop_cap && loops > *loop_cap) throw LoopCapExceeded(*loop_cap, a.log_weight, b.log_weight);
        if (rng.uniform01() < p_first) {
            if (a.coin(rng)) return {true, loops};
        } else {
            if (b.coin(rng)) return {false, loops};
        }
    }
}

/// Product coin: success probability is the product of the factors'.
/// A flip samples the factors in order and short-circuits on the first 0.
inline Coin and_coin(std::vector<Coin> coins) {
    if (coins.empty()) throw std::invalid_argument("and_coin: empty factor list");
    return [factors = std::move(coins)](Rng& rng) {
        for (const auto& c : factors)
            if (!c(rng)) return false;
        return true;
    };
}

/// Coin with a known constant success probability.
inline Coin const_coin(double p) {
    return [p](Rng& rng) { return rng.uniform01() < p; };
}

}  // namespace barker
