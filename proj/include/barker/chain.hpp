#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "barker/coin.hpp"
#include "barker/rng.hpp"

namespace barker {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Proposal kernel q. log_density_ratio(from, to) = log[q(to,from)/q(from,to)];
/// identically zero for symmetric kernels.
template <class State>
struct ProposalKernel {
    std::function<State(const State&, Rng&)> sample;
    std::function<double(const State&, const State&)> log_density_ratio;
};

template <class State>
ProposalKernel<State> symmetric_kernel(std::function<State(const State&, Rng&)> sample) {
    return {std::move(sample), [](const State&, const State&) { return 0.0; }};
}

/// Factorised intractable target pi(x) = d(x) * p(x) with d evaluable and p
/// only simulable. log_envelope returns -inf outside the support.
template <class State>
struct FactorTarget {
    std::function<double(const State&)> log_envelope;
    std::function<Coin(const State&)> p_coin;
};

struct StepMeta {
    bool accepted = false;
    std::uint64_t loops = 0;  // 0 for exact kernels and short-circuit rejections
    double seconds = 0.0;
};

template <class State>
struct ChainTrace {
    std::vector<State> states;   // length = iterations + 1
    std::vector<StepMeta> meta;  // length = iterations

    double acceptance_rate() const {
        if (meta.empty()) return 0.0;
        std::size_t acc = 0;
        for (const auto& m : meta) acc += m.accepted ? 1 : 0;
        return static_cast<double>(acc) / static_cast<double>(meta.size());
    }

    double mean_loops() const {
        if (meta.empty()) return 0.0;
        double s = 0.0;
        for (const auto& m : meta) s += static_cast<double>(m.loops);
        return s / static_cast<double>(meta.size());
    }
};

/// Barker step for a factorised target: accept/reject realised by the 2-coin
/// algorithm with weights c1 = d(phi) q(phi,theta), c2 = d(theta) q(theta,phi).
template <class State>
std::pair<State, TwoCoinOutcome> barker_step_factory(const State& current, const ProposalKernel<State>& kernel,
                                                     const FactorTarget<State>& target, Rng& rng,
                                                     std::optional<std::uint64_t> loop_cap = std::nullopt) {
    State proposed = kernel.sample(current, rng);
    const double log_d_prop = target.log_envelope(proposed);
    if (!std::isfinite(log_d_prop)) return {current, {false, 0}};  // out of support: short-circuit reject
    const double log_d_cur = target.log_envelope(current);
    WeightedCoin a{log_d_prop + kernel.log_density_ratio(current, proposed), target.p_coin(proposed)};
    WeightedCoin b{log_d_cur, target.p_coin(current)};
    TwoCoinOutcome out = two_coin(a, b, rng, loop_cap);
    return {out.bit ? proposed : current, out};
}

/// Closed-form Barker step for tractable targets (validation reference).
template <class State>
State barker_step_exact(const State& current, const ProposalKernel<State>& kernel,
                        const std::function<double(const State&)>& log_target, Rng& rng, bool* accepted = nullptr) {
    State proposed = kernel.sample(current, rng);
    const double lt_prop = log_target(proposed);
    bool acc = false;
    if (std::isfinite(lt_prop)) {
        const double delta = lt_prop - log_target(current) + kernel.log_density_ratio(current, proposed);
        const double alpha = 1.0 / (1.0 + std::exp(-delta));
        acc = rng.uniform01() < alpha;
    }
    if (accepted) *accepted = acc;
    return acc ? proposed : current;
}

/// Standard Metropolis-Hastings step (1 ^ ratio).
template <class State>
State mh_step(const State& current, const ProposalKernel<State>& kernel,
              const std::function<double(const State&)>& log_target, Rng& rng, bool* accepted = nullptr) {
    State proposed = kernel.sample(current, rng);
    const double lt_prop = log_target(proposed);
    bool acc = false;
    if (std::isfinite(lt_prop)) {
        const double delta = lt_prop - log_target(current) + kernel.log_density_ratio(current, proposed);
        acc = delta >= 0.0 || std::log(rng.uniform01()) < delta;
    }
    if (accepted) *accepted = acc;
    return acc ? proposed : current;
}

/// Closed-form Barker acceptance probability from a log target ratio and a
/// log proposal-density ratio; used for the pointwise Peskun checks.
inline double barker_alpha(double log_target_ratio, double log_q_ratio) {
    const double delta = log_target_ratio + log_q_ratio;
    if (delta >= 0.0) return 1.0 / (1.0 + std::exp(-delta));
    // For delta < 0 evaluate as t / (1 + t) with t = exp(delta): the same
    // exponential the MH rule uses, so alpha_B <= alpha_MH holds exactly in
    // floating point as well as on paper.
    const double t = std::exp(delta);
    return t / (1.0 + t);
}

inline double mh_alpha(double log_target_ratio, double log_q_ratio) {
    return std::min(1.0, std::exp(log_target_ratio + log_q_ratio));
}

/// Generic driver: applies `step` n times, recording states and metadata.
/// Deterministic given the seed.
template <class State>
ChainTrace<State> run_chain(const std::function<std::pair<State, StepMeta>(const State&, Rng&)>& step,
                            const State& init, std::size_t n, std::uint64_t seed) {
    ChainTrace<State> trace;
    trace.states.reserve(n + 1);
    trace.meta.reserve(n);
    trace.states.push_back(init);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        auto [next, meta] = step(trace.states.back(), rng);
        meta.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        trace.states.push_back(std::move(next));
        trace.meta.push_back(meta);
    }
    return trace;
}

struct DegenerateTrace : std::runtime_error {
    DegenerateTrace() : std::runtime_error("chain_stats: f is constant over the trace") {}
};

struct ChainStats {
    double mean = 0.0;
    double variance = 0.0;  // plug-in Var_pi(f) estimate from the trace
    double ess = 0.0;
    double batch_means_asymptotic_variance = 0.0;
    double batch_means_standard_error = 0.0;  // standard error of the asymptotic-variance estimate
    double acceptance_rate = 0.0;
    double mean_loops = 0.0;
};

/// Batch-means estimate of the CLT asymptotic variance and derived ESS.
template <class State>
ChainStats chain_stats(const ChainTrace<State>& trace, const std::function<double(const State&)>& f,
                       std::size_t n_batches) {
    const std::size_t n = trace.states.size();
    if (n_batches < 2 || n < 2 * n_batches) throw std::invalid_argument("chain_stats: trace too short for batches");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = f(trace.states[i]);
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(n);
    if (var == 0.0) throw DegenerateTrace();

    const std::size_t m = n / n_batches;  // batch length; trailing remainder dropped
    std::vector<double> bm(n_batches);
    for (std::size_t b = 0; b < n_batches; ++b) {
        double s = 0.0;
        for (std::size_t i = b * m; i < (b + 1) * m; ++i) s += v[i];
        bm[b] = s / static_cast<double>(m);
    }
    const double bmean = std::accumulate(bm.begin(), bm.end(), 0.0) / static_cast<double>(n_batches);
    double bvar = 0.0;
    for (double x : bm) bvar += (x - bmean) * (x - bmean);
    bvar /= static_cast<double>(n_batches - 1);
    const double sigma2 = static_cast<double>(m) * bvar;

    ChainStats out;
    out.mean = mean;
    out.variance = var;
    out.batch_means_asymptotic_variance = sigma2;
    // Chi-squared sampling error of the batch-means estimator.
    out.batch_means_standard_error = sigma2 * std::sqrt(2.0 / static_cast<double>(n_batches - 1));
    out.ess = static_cast<double>(n) * var / sigma2;
    out.acceptance_rate = trace.acceptance_rate();
    out.mean_loops = trace.mean_loops();
    return out;
}

/// Trace serialisation: one CSV row per iteration.
/// Columns: iteration, state components..., accepted, loops.
template <class State>
void write_trace_csv(const std::string& path, const ChainTrace<State>& trace,
                     const std::vector<std::string>& state_columns,
                     const std::function<std::vector<double>(const State&)>& to_columns) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_trace_csv: cannot open " + path);
    out << "iteration";
    for (const auto& c : state_columns) out << ',' << c;
    out << ",accepted,loops\n";
    out.precision(17);
    for (std::size_t i = 0; i < trace.states.size(); ++i) {
        out << i;
        for (double x : to_columns(trace.states[i])) out << ',' << x;
        const bool has_meta = i > 0;
        out << ',' << (has_meta && trace.meta[i - 1].accepted ? 1 : 0) << ','
            << (has_meta ? trace.meta[i - 1].loops : 0) << '\n';
    }
}

}  // namespace barker
