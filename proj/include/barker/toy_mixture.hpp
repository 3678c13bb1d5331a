#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "barker/chain.hpp"
#include "barker/coin.hpp"
#include "barker/rng.hpp"

namespace barker::toy {

/// Poisson-mixture posterior: theta | eta ~ Poisson(eta), eta ~ Gamma(shape, rate).
/// The marginal pi(theta) is Negative Binomial; the chain never evaluates it.
struct ToyConfig {
    double gamma_shape = 100.0;
    double gamma_rate = 5.0;
    long rw_halfwidth = 10;
    std::size_t iterations = 200000;
    std::uint64_t seed = 1;
    std::size_t burn_in = 1000;
    long init = 20;
};

/// log d(theta) with d(theta) = e^{-theta} theta^theta / theta!, d(0) = 1.
inline double log_envelope_d(long theta) {
    if (theta < 0) return kNegInf;
    if (theta == 0) return 0.0;
    const double t = static_cast<double>(theta);
    return -t + t * std::log(t) - std::lgamma(t + 1.0);
}

/// Coin for p(theta) = pi(theta)/d(theta): one flip draws eta ~ Gamma and a
/// uniform U, succeeding iff log U <= log pi(theta|eta) - log d(theta).
inline Coin toy_p_coin(long theta, const ToyConfig& cfg) {
    return [theta, shape = cfg.gamma_shape, rate = cfg.gamma_rate](Rng& rng) {
        const double eta = rng.gamma(shape, rate);
        const double t = static_cast<double>(theta);
        // log[pi(theta|eta)/d(theta)] = theta*log(eta/theta) - (eta - theta)
        const double log_ratio = theta == 0 ? -eta : t * std::log(eta / t) - (eta - t);
        return std::log(rng.uniform01()) <= log_ratio;
    };
}

/// Exact marginal pmf: Gamma(100,5)-mixed Poisson = NB(r=100, p=5/6),
/// mean 20 and variance 24. Validation oracle only.
inline double nb_exact_pmf(long theta, double shape = 100.0, double rate = 5.0) {
    if (theta < 0) return 0.0;
    const double t = static_cast<double>(theta);
    const double p = rate / (rate + 1.0);
    return std::exp(std::lgamma(t + shape) - std::lgamma(shape) - std::lgamma(t + 1.0) + shape * std::log(p) +
                    t * std::log(1.0 - p));
}

inline double nb_log_pmf(long theta, double shape = 100.0, double rate = 5.0) {
    if (theta < 0) return kNegInf;
    const double t = static_cast<double>(theta);
    const double p = rate / (rate + 1.0);
    return std::lgamma(t + shape) - std::lgamma(shape) - std::lgamma(t + 1.0) + shape * std::log(p) +
           t * std::log(1.0 - p);
}

/// Uniform proposal on {theta-h,...,theta-1, theta+1,...,theta+h}.
inline ProposalKernel<long> toy_kernel(long halfwidth) {
    return symmetric_kernel<long>([halfwidth](const long& theta, Rng& rng) {
        long off = rng.uniform_int(1, halfwidth);
        if (rng.uniform01() < 0.5) off = -off;
        return theta + off;
    });
}

inline FactorTarget<long> toy_target(const ToyConfig& cfg) {
    return {[](const long& theta) { return log_envelope_d(theta); },
            [cfg](const long& theta) { return toy_p_coin(theta, cfg); }};
}

struct ToySummary {
    double mean = 0.0;
    double variance = 0.0;
    double acceptance_rate = 0.0;
    double mean_loops = 0.0;
    double tv_distance = 0.0;  // empirical pmf vs. the NB oracle, post burn-in
};

struct ToyResult {
    ChainTrace<long> trace;
    ToySummary summary;
};

inline ToyResult run_toy(const ToyConfig& cfg) {
    const auto target = toy_target(cfg);
    const auto kernel = toy_kernel(cfg.rw_halfwidth);
    auto step = [&](const long& cur, Rng& rng) -> std::pair<long, StepMeta> {
        auto [next, out] = barker_step_factory(cur, kernel, target, rng);
        return {next, StepMeta{out.bit, out.loops, 0.0}};
    };
    ToyResult res;
    res.trace = run_chain<long>(step, cfg.init, cfg.iterations, cfg.seed);

    const std::size_t from = std::min(cfg.burn_in, res.trace.states.size() - 1);
    double s1 = 0.0, s2 = 0.0;
    std::map<long, std::size_t> counts;
    std::size_t n = 0;
    for (std::size_t i = from; i < res.trace.states.size(); ++i) {
        const double x = static_cast<double>(res.trace.states[i]);
        s1 += x;
        s2 += x * x;
        ++counts[res.trace.states[i]];
        ++n;
    }
    res.summary.mean = s1 / static_cast<double>(n);
    res.summary.variance = s2 / static_cast<double>(n) - res.summary.mean * res.summary.mean;
    res.summary.acceptance_rate = res.trace.acceptance_rate();
    res.summary.mean_loops = res.trace.mean_loops();

    // Total-variation distance to the NB oracle over the union of supports.
    double tv = 0.0;
    long max_theta = 0;
    for (const auto& [k, c] : counts) max_theta = std::max(max_theta, k);
    for (long k = 0; k <= std::max<long>(max_theta, 200); ++k) {
        const auto it = counts.find(k);
        const double emp = it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(n);
        tv += std::abs(emp - nb_exact_pmf(k, cfg.gamma_shape, cfg.gamma_rate));
    }
    res.summary.tv_distance = 0.5 * tv;
    return res;
}

}  // namespace barker::toy
