#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "barker/bridge.hpp"
#include "barker/chain.hpp"
#include "barker/coin.hpp"
#include "barker/rng.hpp"

namespace barker::diffusion {

struct DomainError : std::invalid_argument {
    explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

struct DomainExcursion : std::runtime_error {
    explicit DomainExcursion(const std::string& what) : std::runtime_error(what) {}
};

/// Unit-diffusion-coefficient SDE model on an open interval, after the
/// variance-stabilising transform. g = (alpha^2 + alpha')/2 is the Girsanov
/// potential; A is an antiderivative of alpha (reference point arbitrary:
/// only differences A(x_n) - A(x_0) ever enter an acceptance weight).
/// g_bounds(band, theta) must return certified (inf g, sup g) over the band.
template <class Theta>
struct DiffusionModel {
    Band domain;
    std::function<double(double, const Theta&)> alpha;
    std::function<double(double, const Theta&)> g;
    std::function<double(double, const Theta&)> A;
    std::function<Band(const Band&, const Theta&)> g_bounds;
    std::function<double(double)> lamperti;
    std::function<double(double)> lamperti_inv;
    std::function<double(const Theta&)> prior_log_density;
    std::function<bool(const Theta&)> in_theta_domain;
};

/// One observation interval: endpoints in observation and transformed space,
/// plus the detrended bridge skeleton (pinned at 0 on both ends) and the
/// cached certified potential bounds for the current layer and parameter.
struct IntervalSkeleton {
    int index = 0;
    double y0 = 0.0, y1 = 0.0;  // observations
    double x0 = 0.0, x1 = 0.0;  // transformed endpoints
    double t0 = 0.0, t1 = 0.0;
    RevealedPath path;  // detrended bridge: starts and ends at 0
    double a = 0.0;     // certified inf of g over the retrended band
    double r = 0.0;     // certified range: sup g - inf g >= 0

    double dt() const { return t1 - t0; }
    double line(double s) const { return x0 + (s - t0) / dt() * (x1 - x0); }
    Band retrended_band() const {
        return {path.outer.lo + std::min(x0, x1), path.outer.hi + std::max(x0, x1)};
    }
};

inline double detrend(double x_path_value, double s, const IntervalSkeleton& skel) {
    return x_path_value - skel.line(s);
}

inline double retrend(double detrended_value, double s, const IntervalSkeleton& skel) {
    return detrended_value + skel.line(s);
}

/// Resolves whether the skeleton's retrended band can be certified inside the
/// model domain (refining the layer as needed) or the detrended path is
/// certified to leave the conservative domain band. The certified target is
/// shrunk by a small margin: containment resolutions can tighten the band to
/// the target edge exactly, and the potential g typically diverges at the
/// domain boundary, so certified bands must stay strictly inside it. The
/// margin adapts to the endpoints so it never excludes the pinned value 0.
template <class Theta>
DomainCheck fit_into_domain(IntervalSkeleton& skel, const DiffusionModel<Theta>& model, Rng& rng) {
    const double lo_gap = std::min(skel.x0, skel.x1) - model.domain.lo;
    const double hi_gap = model.domain.hi - std::max(skel.x0, skel.x1);
    if (!(lo_gap > 0.0 && hi_gap > 0.0))
        throw DomainExcursion("fit_into_domain: transformed endpoints outside the model domain");
    const double margin = std::min({5e-2 * (model.domain.hi - model.domain.lo),
                                    0.5 * lo_gap, 0.5 * hi_gap});
    const Band target{model.domain.lo - std::min(skel.x0, skel.x1) + margin,
                      model.domain.hi - std::max(skel.x0, skel.x1) - margin};
    return ensure_within(skel.path, target, rng);
}

/// Draws a detrended-bridge skeleton certified inside the domain. Paths whose
/// excursion past the domain band is certified are resampled, so the proposal
/// law is the Brownian bridge conditioned to the domain band; the condition
/// is theta-free, hence common to both sides of every acceptance ratio.
template <class Theta>
IntervalSkeleton fresh_skeleton(const IntervalSkeleton& like, const Theta& theta,
                                const DiffusionModel<Theta>& model, double delta, Rng& rng) {
    constexpr int kBudget = 1000;
    for (int i = 0; i < kBudget; ++i) {
        IntervalSkeleton skel = like;
        skel.path = sample_layer(BridgeSpec{0.0, 0.0, like.dt(), like.t0}, delta, rng);
        if (fit_into_domain(skel, model, rng) == DomainCheck::Contained) {
            refine_for_bounds(skel, theta, model, rng);
            return skel;
        }
    }
    throw NonConvergence("fresh_skeleton: could not certify a proposal inside the domain");
}

/// Certified constant-in-time bounds for g over all paths consistent with the
/// layer: a_i = inf g, r_i = sup g - inf g over the retrended band.
template <class Theta>
std::pair<double, double> interval_bounds(IntervalSkeleton& skel, const Theta& theta,
                                          const DiffusionModel<Theta>& model);

/// Tightens the certified band by retrospective layer refinement until the
/// dominating Poisson mass dt * r is moderate. Refinement only reveals more
/// of the already-sampled path, so the path law (and hence exactness) is
/// untouched; the budget merely controls two-coin efficiency.
template <class Theta>
std::pair<double, double> refine_for_bounds(IntervalSkeleton& skel, const Theta& theta,
                                            const DiffusionModel<Theta>& model, Rng& rng,
                                            double mass_budget = 1.0) {
    auto bounds = interval_bounds(skel, theta, model);
    for (int i = 0; i < 64 && skel.r * skel.dt() > mass_budget; ++i) {
        const double width_before = skel.path.outer.width();
        refine_layer(skel.path, rng);
        if (!(skel.path.outer.width() < width_before - 1e-12)) break;  // pins block refinement
        bounds = interval_bounds(skel, theta, model);
    }
    return bounds;
}

template <class Theta>
std::pair<double, double> interval_bounds(IntervalSkeleton& skel, const Theta& theta,
                                          const DiffusionModel<Theta>& model) {
    const Band band = skel.retrended_band();
    if (!(band.lo > model.domain.lo && band.hi < model.domain.hi))
        throw DomainExcursion("interval_bounds: retrended band leaves the model domain");
    const Band gb = model.g_bounds(band, theta);
    skel.a = gb.lo;
    skel.r = gb.hi - gb.lo;
    return {skel.a, skel.r};
}

/// Poisson coin with explicit bounds: heads with probability
/// exp(-integral of (g - a) over the interval), by thinning a rate-r Poisson
/// field of marks and revealing the bridge at each mark time. Revealed points
/// persist in the skeleton; the bit law is unchanged by short-circuiting.
template <class Theta>
bool poisson_coin_with_bounds(IntervalSkeleton& skel, const Theta& theta, double a, double r,
                              const DiffusionModel<Theta>& model, Rng& rng) {
    if (r <= 0.0) return true;
    const std::uint64_t kappa = rng.poisson(skel.dt() * r);
    for (std::uint64_t k = 0; k < kappa; ++k) {
        const double phi = rng.uniform(skel.t0, skel.t1);
        const double chi = rng.uniform01();
        double xd;
        const auto it = std::find_if(skel.path.points.begin(), skel.path.points.end(),
                                     [&](const TimeValue& p) { return p.t == phi; });
        if (it != skel.path.points.end()) {
            xd = it->v;  // measure-zero collision with an already revealed time
        } else {
            xd = reveal_point(skel.path, phi, rng);
        }
        const double x = retrend(xd, phi, skel);
        const double gv = model.g(x, theta);
        if (chi <= (gv - a) / r) return false;
    }
    return true;
}

template <class Theta>
bool poisson_coin(IntervalSkeleton& skel, const Theta& theta, const DiffusionModel<Theta>& model,
                  Rng& rng) {
    return poisson_coin_with_bounds(skel, theta, skel.a, skel.r, model, rng);
}

struct UpdateMeta {
    bool accepted = false;
    std::uint64_t loops = 0;
};

/// Barker path update against an explicitly supplied proposal skeleton
/// (exposed so degenerate-proposal laws can be exercised directly).
template <class Theta>
UpdateMeta path_update_with_proposal(IntervalSkeleton& skel, IntervalSkeleton& proposal,
                                     const Theta& theta, const DiffusionModel<Theta>& model,
                                     Rng& rng, std::optional<std::uint64_t> loop_cap = {}) {
    refine_for_bounds(skel, theta, model, rng);
    refine_for_bounds(proposal, theta, model, rng);
    // Endpoints are pinned, so the A terms cancel: weights are
    // s = exp(-dt * a) with the constant-in-time certified lower bounds.
    WeightedCoin prop_coin{-proposal.dt() * proposal.a,
                           [&](Rng& r) { return poisson_coin(proposal, theta, model, r); }};
    WeightedCoin cur_coin{-skel.dt() * skel.a,
                          [&](Rng& r) { return poisson_coin(skel, theta, model, r); }};
    const TwoCoinOutcome out = two_coin(prop_coin, cur_coin, rng, loop_cap);
    if (out.bit) skel = proposal;
    return {out.bit, out.loops};
}

/// Barker path update: proposes a fresh Brownian-bridge skeleton (new layer,
/// refined into the domain) and resolves acceptance with the two-coin factory.
/// On reject the current skeleton keeps every point its coin flips revealed.
template <class Theta>
UpdateMeta path_update(IntervalSkeleton& skel, const Theta& theta,
                       const DiffusionModel<Theta>& model, Rng& rng, double delta = 1.0,
                       std::optional<std::uint64_t> loop_cap = {}) {
    IntervalSkeleton proposal = fresh_skeleton(skel, theta, model, delta, rng);
    return path_update_with_proposal(skel, proposal, theta, model, rng, loop_cap);
}

template <class Theta>
struct GibbsState {
    Theta theta{};
    std::vector<IntervalSkeleton> skeletons;
};

/// Barker parameter update. The acceptance weight for theta is
/// exp(A(x_n) - A(x_0) - sum_i dt_i a_i(theta)) * prior(theta), with the
/// p-coin the conjunction of per-interval Poisson coins; both are realised
/// for proposal and current value and fed to the two-coin factory.
template <class Theta>
UpdateMeta param_update(GibbsState<Theta>& state, const ProposalKernel<Theta>& kernel,
                        const DiffusionModel<Theta>& model, Rng& rng,
                        std::optional<std::uint64_t> loop_cap = {}) {
    const Theta proposal = kernel.sample(state.theta, rng);
    if (!model.in_theta_domain(proposal)) return {false, 0};
    const double lp_new = model.prior_log_density(proposal);
    const double lp_cur = model.prior_log_density(state.theta);
    if (!(lp_new > -HUGE_VAL)) return {false, 0};

    const double x_first = state.skeletons.front().x0;
    const double x_last = state.skeletons.back().x1;
    double log_s_new = model.A(x_last, proposal) - model.A(x_first, proposal) + lp_new;
    double log_s_cur = model.A(x_last, state.theta) - model.A(x_first, state.theta) + lp_cur;
    std::vector<std::pair<double, double>> bounds_new(state.skeletons.size());
    for (std::size_t i = 0; i < state.skeletons.size(); ++i) {
        auto& skel = state.skeletons[i];
        bounds_new[i] = refine_for_bounds(skel, proposal, model, rng);
        log_s_new -= skel.dt() * bounds_new[i].first;
        const auto bc = refine_for_bounds(skel, state.theta, model, rng);
        log_s_cur -= skel.dt() * bc.first;
    }
    log_s_new += kernel.log_density_ratio(state.theta, proposal);

    WeightedCoin new_coin{log_s_new, [&](Rng& r) {
                              for (std::size_t i = 0; i < state.skeletons.size(); ++i) {
                                  auto& skel = state.skeletons[i];
                                  if (!poisson_coin_with_bounds(skel, proposal, bounds_new[i].first,
                                                                bounds_new[i].second, model, r))
                                      return false;
                              }
                              return true;
                          }};
    WeightedCoin cur_coin{log_s_cur, [&](Rng& r) {
                              for (auto& skel : state.skeletons)
                                  if (!poisson_coin(skel, state.theta, model, r)) return false;
                              return true;
                          }};
    const TwoCoinOutcome out = two_coin(new_coin, cur_coin, rng, loop_cap);
    if (out.bit) {
        state.theta = proposal;
        for (std::size_t i = 0; i < state.skeletons.size(); ++i) {
            state.skeletons[i].a = bounds_new[i].first;
            state.skeletons[i].r = bounds_new[i].second;
        }
    }
    return {out.bit, out.loops};
}

template <class Theta>
struct GibbsConfig {
    std::vector<double> times;   // strictly increasing observation times
    std::vector<double> values;  // observations, in the model's y-space
    Theta init{};
    ProposalKernel<Theta> kernel;
    long iterations = 1000;
    int sweeps_per_iteration = 2;
    std::uint64_t seed = 1;
    bool parallel = false;
    double delta = 1.0;
    std::optional<std::uint64_t> loop_cap{};
};

template <class Theta>
struct GibbsResult {
    std::vector<Theta> theta_trace;  // length iterations + 1, starting at init
    std::vector<UpdateMeta> param_meta;
    double path_acceptance_rate = 0.0;
    double path_mean_loops = 0.0;
    double param_acceptance_rate = 0.0;
    double param_mean_loops = 0.0;
};

namespace detail {

// Deterministic substream tags so parallel and serial sweeps agree exactly.
inline constexpr std::uint64_t kTagInit = 0x696e6974;    // "init"
inline constexpr std::uint64_t kTagPath = 0x70617468;    // "path"
inline constexpr std::uint64_t kTagParam = 0x7061726d;   // "parm"

}  // namespace detail

template <class Theta>
void validate_config(const GibbsConfig<Theta>& cfg, const DiffusionModel<Theta>& model) {
    if (cfg.times.size() < 2) throw std::invalid_argument("gibbs_run: need at least two observations");
    if (cfg.times.size() != cfg.values.size())
        throw std::invalid_argument("gibbs_run: times/values length mismatch");
    for (std::size_t i = 0; i + 1 < cfg.times.size(); ++i)
        if (!(cfg.times[i] < cfg.times[i + 1]))
            throw std::invalid_argument("gibbs_run: observation times must be strictly increasing");
    if (cfg.iterations < 0) throw std::invalid_argument("gibbs_run: negative iteration count");
    if (cfg.sweeps_per_iteration < 1) throw std::invalid_argument("gibbs_run: need at least one path sweep");
    if (!(cfg.delta > 0.0)) throw std::invalid_argument("gibbs_run: delta must be positive");
    if (!model.in_theta_domain(cfg.init)) throw std::invalid_argument("gibbs_run: init outside theta domain");
}

template <class Theta>
GibbsState<Theta> init_gibbs_state(const GibbsConfig<Theta>& cfg, const DiffusionModel<Theta>& model) {
    GibbsState<Theta> state;
    state.theta = cfg.init;
    const std::size_t n = cfg.times.size() - 1;
    state.skeletons.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        IntervalSkeleton& skel = state.skeletons[i];
        skel.index = static_cast<int>(i);
        skel.y0 = cfg.values[i];
        skel.y1 = cfg.values[i + 1];
        skel.x0 = model.lamperti(skel.y0);
        skel.x1 = model.lamperti(skel.y1);
        skel.t0 = cfg.times[i];
        skel.t1 = cfg.times[i + 1];
        Rng rng = Rng::substream(cfg.seed, {detail::kTagInit, static_cast<std::uint64_t>(i)});
        skel = fresh_skeleton(skel, cfg.init, model, cfg.delta, rng);
    }
    return state;
}

/// Gibbs sampler: k path sweeps then one parameter step per iteration. Path
/// updates within a sweep are conditionally independent given theta and run
/// concurrently when requested; per-(iteration, sweep, interval) substreams
/// make parallel and serial traces identical.
template <class Theta>
GibbsResult<Theta> gibbs_run(const GibbsConfig<Theta>& cfg, const DiffusionModel<Theta>& model) {
    validate_config(cfg, model);
    GibbsState<Theta> state = init_gibbs_state(cfg, model);
    GibbsResult<Theta> result;
    result.theta_trace.reserve(static_cast<std::size_t>(cfg.iterations) + 1);
    result.theta_trace.push_back(state.theta);

    const std::size_t n = state.skeletons.size();
    std::uint64_t path_updates = 0, path_accepts = 0, path_loops = 0;
    std::vector<UpdateMeta> sweep_meta(n);

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    for (long iter = 0; iter < cfg.iterations; ++iter) {
        for (int sweep = 0; sweep < cfg.sweeps_per_iteration; ++sweep) {
            auto work = [&](std::size_t i) {
                Rng rng = Rng::substream(cfg.seed, {detail::kTagPath, static_cast<std::uint64_t>(iter),
                                                    static_cast<std::uint64_t>(sweep),
                                                    static_cast<std::uint64_t>(i)});
                sweep_meta[i] =
                    path_update(state.skeletons[i], state.theta, model, rng, cfg.delta, cfg.loop_cap);
            };
            if (cfg.parallel && n > 1) {
                const unsigned workers = std::min<unsigned>(hw, static_cast<unsigned>(n));
                std::vector<std::thread> pool;
                pool.reserve(workers);
                for (unsigned w = 0; w < workers; ++w)
                    pool.emplace_back([&, w] {
                        for (std::size_t i = w; i < n; i += workers) work(i);
                    });
                for (auto& t : pool) t.join();
            } else {
                for (std::size_t i = 0; i < n; ++i) work(i);
            }
            for (const auto& m : sweep_meta) {
                ++path_updates;
                path_accepts += m.accepted ? 1 : 0;
                path_loops += m.loops;
            }
        }
        Rng rng = Rng::substream(cfg.seed, {detail::kTagParam, static_cast<std::uint64_t>(iter)});
        const UpdateMeta pm = param_update(state, cfg.kernel, model, rng, cfg.loop_cap);
        result.param_meta.push_back(pm);
        result.theta_trace.push_back(state.theta);
    }

    if (path_updates > 0) {
        result.path_acceptance_rate = static_cast<double>(path_accepts) / static_cast<double>(path_updates);
        result.path_mean_loops = static_cast<double>(path_loops) / static_cast<double>(path_updates);
    }
    if (!result.param_meta.empty()) {
        std::uint64_t acc = 0, loops = 0;
        for (const auto& m : result.param_meta) {
            acc += m.accepted ? 1 : 0;
            loops += m.loops;
        }
        result.param_acceptance_rate = static_cast<double>(acc) / static_cast<double>(result.param_meta.size());
        result.param_mean_loops = static_cast<double>(loops) / static_cast<double>(result.param_meta.size());
    }
    return result;
}

}  // namespace barker::diffusion
