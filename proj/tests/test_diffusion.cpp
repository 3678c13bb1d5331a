#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <vector>

#include "barker/chain.hpp"
#include "barker/diffusion.hpp"
#include "barker/rng.hpp"
#include "barker/wright_fisher.hpp"
#include "doctest.h"

using namespace barker;
using namespace barker::diffusion;

namespace {

// Two-sample KS statistic.
double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
    }
    return d;
}

// Hand-built skeleton: endpoints pinned at zero with a manually chosen layer
// band, so coin laws can be computed in closed form.
IntervalSkeleton manual_skeleton(double dt, const Band& outer) {
    IntervalSkeleton skel;
    skel.y0 = skel.y1 = 0.0;
    skel.x0 = skel.x1 = 0.0;
    skel.t0 = 0.0;
    skel.t1 = dt;
    skel.path.spec = {0.0, 0.0, dt, 0.0};
    skel.path.layer_index = 1;
    skel.path.outer = outer;
    skel.path.kind = ExcursionKind::None;
    skel.path.points = {{0.0, 0.0}, {dt, 0.0}};
    return skel;
}

// Scalar-parameter model with a potential that is constant in space:
// g(x, th) = th^2 / 2, A = 0, standard normal prior, identity transform.
// The exact conditional for th given any path skeleton is then
// pi(th) ~ exp(-th^2/2 - T th^2/2), with T the total observation span.
DiffusionModel<double> constant_g_model() {
    DiffusionModel<double> m;
    m.domain = Band{-100.0, 100.0};
    m.alpha = [](double, const double&) { return 0.0; };
    m.g = [](double, const double& th) { return 0.5 * th * th; };
    m.A = [](double, const double&) { return 0.0; };
    m.g_bounds = [](const Band&, const double& th) {
        return Band{0.5 * th * th, 0.5 * th * th};
    };
    m.lamperti = [](double y) { return y; };
    m.lamperti_inv = [](double u) { return u; };
    m.prior_log_density = [](const double& th) { return -0.5 * th * th; };
    m.in_theta_domain = [](const double&) { return true; };
    return m;
}

// Zero-drift model on a wide domain: g = 0 identically, so every coin is
// deterministic and path updates reduce to pure Barker proposals.
DiffusionModel<double> zero_drift_model() {
    DiffusionModel<double> m = constant_g_model();
    m.g = [](double, const double&) { return 0.0; };
    m.g_bounds = [](const Band&, const double&) { return Band{0.0, 0.0}; };
    m.prior_log_density = [](const double&) { return 0.0; };
    return m;
}

// Wright-Fisher model with the flat prior truncated to a compact box.
// Keeping gamma1 away from zero bounds the drift potential over the bands the
// sampler actually visits, so the test run-time stays moderate.
diffusion::DiffusionModel<wf::ThetaState> boxed_wf_model() {
    auto m = wf::wf_model();
    const auto inside = [](const wf::ThetaState& th) {
        return th.gamma1 > 0.75 && th.gamma1 < 4.0 && th.gamma2 > 0.25 && th.gamma2 < 0.75;
    };
    m.in_theta_domain = inside;
    m.prior_log_density = [inside](const wf::ThetaState& th) {
        return inside(th) ? 0.0 : -HUGE_VAL;
    };
    return m;
}

}  // namespace

TEST_CASE("detrend/retrend: round trip and endpoint interpolation") {
    IntervalSkeleton skel;
    skel.x0 = 1.3;
    skel.x1 = 2.1;
    skel.t0 = 4.0;
    skel.t1 = 6.0;
    CHECK(skel.line(4.0) == doctest::Approx(1.3));
    CHECK(skel.line(6.0) == doctest::Approx(2.1));
    CHECK(skel.line(5.0) == doctest::Approx(1.7));
    for (double s : {4.0, 4.7, 5.5, 6.0})
        for (double v : {-0.4, 0.0, 0.9})
            CHECK(detrend(retrend(v, s, skel), s, skel) == doctest::Approx(v).epsilon(1e-14));
}

TEST_CASE("interval_bounds: constant potential and certified WF band bounds") {
    auto stub = constant_g_model();
    IntervalSkeleton skel = manual_skeleton(1.0, {-2.0, 2.0});
    const auto [a, r] = interval_bounds(skel, 3.0, stub);
    CHECK(a == doctest::Approx(4.5));
    CHECK(r == doctest::Approx(0.0));
    CHECK(skel.a == a);
    CHECK(skel.r == r);

    // Against the WF model: the cached bounds must dominate a fine grid scan.
    const auto model = wf::wf_model();
    const wf::ThetaState th{2.5, 0.35};
    IntervalSkeleton wf_skel = manual_skeleton(1.0, {-0.6, 0.7});
    wf_skel.x0 = wf::wf_lamperti(0.4);
    wf_skel.x1 = wf::wf_lamperti(0.55);
    const auto [wa, wr] = interval_bounds(wf_skel, th, model);
    const Band band = wf_skel.retrended_band();
    for (int i = 0; i <= 20000; ++i) {
        const double u = band.lo + (band.hi - band.lo) * i / 20000.0;
        const double g = wf::wf_g(u, th);
        CHECK(g >= wa);
        CHECK(g <= wa + wr);
    }
}

TEST_CASE("interval_bounds: retrended band outside the domain throws") {
    const auto model = wf::wf_model();
    IntervalSkeleton skel = manual_skeleton(1.0, {-5.0, 5.0});
    skel.x0 = skel.x1 = 0.5 * wf::kPi;
    CHECK_THROWS_AS(interval_bounds(skel, wf::ThetaState{}, model), DomainExcursion);
}

TEST_CASE("fit_into_domain: endpoints outside the domain throw") {
    const auto model = wf::wf_model();
    Rng rng(11);
    IntervalSkeleton skel = manual_skeleton(1.0, {-0.1, 0.1});
    skel.x0 = -1.0;  // below the (0, pi) domain
    skel.x1 = 1.0;
    CHECK_THROWS_AS(fit_into_domain(skel, model, rng), DomainExcursion);
}

TEST_CASE("fresh_skeleton: certified containment in the model domain") {
    const auto model = wf::wf_model();
    const wf::ThetaState th{1.5, 0.5};
    IntervalSkeleton like = manual_skeleton(1.0, {-1.0, 1.0});
    like.x0 = wf::wf_lamperti(0.45);
    like.x1 = wf::wf_lamperti(0.6);
    Rng rng(17);
    for (int rep = 0; rep < 50; ++rep) {
        IntervalSkeleton skel = fresh_skeleton(like, th, model, 1.0, rng);
        const Band band = skel.retrended_band();
        CHECK(band.lo > model.domain.lo);
        CHECK(band.hi < model.domain.hi);
        CHECK(skel.r >= 0.0);
        for (const auto& p : skel.path.points) {
            CHECK(retrend(p.v, p.t, skel) > model.domain.lo);
            CHECK(retrend(p.v, p.t, skel) < model.domain.hi);
        }
    }
}

TEST_CASE("poisson_coin: zero range is a sure heads, no randomness consumed") {
    auto stub = constant_g_model();
    IntervalSkeleton skel = manual_skeleton(1.0, {-2.0, 2.0});
    Rng rng(5);
    const std::uint64_t before = rng.next();
    Rng replay(5);
    CHECK(poisson_coin_with_bounds(skel, 1.0, 0.5, 0.0, stub, replay));
    CHECK(replay.next() == before);
}

TEST_CASE("poisson_coin: exact heads law under deterministic thinning") {
    // g = c everywhere with bounds (a=0, r=2c): each mark survives with
    // probability 1/2, so heads probability is exp(-dt * 2c * 1/2) = e^{-dt c}.
    auto stub = constant_g_model();
    const double th = 1.2;  // g = 0.72
    const double c = 0.5 * th * th;
    const double dt = 1.4;
    const int n = 40000;
    Rng rng(23);
    int heads = 0;
    for (int rep = 0; rep < n; ++rep) {
        IntervalSkeleton skel = manual_skeleton(dt, {-3.0, 3.0});
        if (poisson_coin_with_bounds(skel, th, 0.0, 2.0 * c, stub, rng)) ++heads;
    }
    const double p = std::exp(-dt * c);
    const double se = std::sqrt(p * (1.0 - p) / n);
    CHECK(std::fabs(static_cast<double>(heads) / n - p) < 4.0 * se);
}

TEST_CASE("poisson_coin: heads law invariant under over-thinning") {
    // A genuinely path-dependent potential: the heads probability is
    // E[exp(-integral of (g - a))], identical for any dominating rate r.
    auto stub = constant_g_model();
    stub.g = [](double x, const double&) { return x * x; };
    stub.g_bounds = [](const Band& b, const double&) {
        const double m = std::max(b.lo * b.lo, b.hi * b.hi);
        const double lo = (b.lo <= 0.0 && 0.0 <= b.hi) ? 0.0 : std::min(b.lo * b.lo, b.hi * b.hi);
        return Band{lo, m};
    };
    const Band outer{-2.0, 2.0};
    const int n = 20000;
    auto frequency = [&](double r, std::uint64_t seed) {
        Rng rng(seed);
        int heads = 0;
        for (int rep = 0; rep < n; ++rep) {
            IntervalSkeleton skel = manual_skeleton(1.0, outer);
            if (poisson_coin_with_bounds(skel, 0.0, 0.0, r, stub, rng)) ++heads;
        }
        return static_cast<double>(heads) / n;
    };
    const double f1 = frequency(4.0, 31);
    const double f2 = frequency(8.0, 37);
    // Conservative binomial error bound for the difference of two frequencies.
    const double se = std::sqrt(2.0 * 0.25 / n);
    CHECK(std::fabs(f1 - f2) < 4.0 * se);
}

TEST_CASE("path_update: a duplicated proposal is accepted with probability 1/2") {
    const auto model = wf::wf_model();
    const wf::ThetaState th{2.0, 0.4};
    IntervalSkeleton like = manual_skeleton(0.8, {-1.0, 1.0});
    like.x0 = wf::wf_lamperti(0.4);
    like.x1 = wf::wf_lamperti(0.5);
    Rng rng(41);
    const int n = 2000;
    int accepted = 0;
    std::uint64_t loops = 0;
    for (int rep = 0; rep < n; ++rep) {
        IntervalSkeleton skel = fresh_skeleton(like, th, model, 1.0, rng);
        IntervalSkeleton proposal = skel;  // identical weights and coin law
        const UpdateMeta m = path_update_with_proposal(skel, proposal, th, model, rng);
        accepted += m.accepted ? 1 : 0;
        loops += m.loops;
        CHECK(m.loops >= 1);
    }
    const double se = std::sqrt(0.25 / n);
    CHECK(std::fabs(static_cast<double>(accepted) / n - 0.5) < 4.0 * se);
    CHECK(loops >= static_cast<std::uint64_t>(n));
}

TEST_CASE("path_update: zero-drift acceptance is exactly a fair coin") {
    // With g = 0 both coins are sure heads and both weights vanish, so the
    // two-coin factory accepts with probability exactly 1/2 in one loop.
    auto stub = zero_drift_model();
    IntervalSkeleton like = manual_skeleton(1.0, {-1.0, 1.0});
    Rng rng(43);
    const int n = 20000;
    int accepted = 0;
    for (int rep = 0; rep < n; ++rep) {
        IntervalSkeleton skel = fresh_skeleton(like, 0.0, stub, 1.0, rng);
        const UpdateMeta m = path_update(skel, 0.0, stub, rng, 1.0);
        accepted += m.accepted ? 1 : 0;
        CHECK(m.loops == 1);
    }
    const double se = std::sqrt(0.25 / n);
    CHECK(std::fabs(static_cast<double>(accepted) / n - 0.5) < 4.0 * se);
}

TEST_CASE("param_update: a self-proposal is accepted with probability 1/2") {
    const auto model = wf::wf_model();
    ProposalKernel<wf::ThetaState> self;
    self.sample = [](const wf::ThetaState& th, Rng&) { return th; };
    self.log_density_ratio = [](const wf::ThetaState&, const wf::ThetaState&) { return 0.0; };

    const wf::ThetaState th{1.8, 0.45};
    IntervalSkeleton like = manual_skeleton(0.8, {-1.0, 1.0});
    like.x0 = wf::wf_lamperti(0.45);
    like.x1 = wf::wf_lamperti(0.55);
    Rng rng(47);
    const int n = 2000;
    int accepted = 0;
    for (int rep = 0; rep < n; ++rep) {
        GibbsState<wf::ThetaState> state;
        state.theta = th;
        state.skeletons.push_back(fresh_skeleton(like, th, model, 1.0, rng));
        const UpdateMeta m = param_update(state, self, model, rng);
        accepted += m.accepted ? 1 : 0;
        CHECK(m.loops >= 1);
    }
    const double se = std::sqrt(0.25 / n);
    CHECK(std::fabs(static_cast<double>(accepted) / n - 0.5) < 4.0 * se);
}

TEST_CASE("param_update: proposals outside the parameter domain short-circuit") {
    const auto model = wf::wf_model();
    ProposalKernel<wf::ThetaState> bad;
    bad.sample = [](const wf::ThetaState&, Rng&) { return wf::ThetaState{-1.0, 0.5}; };
    bad.log_density_ratio = [](const wf::ThetaState&, const wf::ThetaState&) { return 0.0; };
    GibbsState<wf::ThetaState> state;
    state.theta = wf::ThetaState{1.0, 0.5};
    Rng rng(53);
    const UpdateMeta m = param_update(state, bad, model, rng);
    CHECK_FALSE(m.accepted);
    CHECK(m.loops == 0);
    CHECK(state.theta.gamma1 == 1.0);
}

TEST_CASE("gibbs_run: constant-potential marginal matches an exact Barker chain") {
    // With g constant in space the theta-conditional is available in closed
    // form, so the full Gibbs sampler must reproduce the law of a plain
    // Barker chain on log pi(th) = -th^2/2 - T th^2/2.
    auto stub = constant_g_model();
    GibbsConfig<double> cfg;
    cfg.times = {0.0, 1.0, 2.0, 3.0};
    cfg.values = {0.1, -0.2, 0.3, 0.0};
    cfg.init = 0.0;
    cfg.iterations = 30000;
    cfg.sweeps_per_iteration = 1;
    cfg.seed = 61;
    ProposalKernel<double> kernel;
    kernel.sample = [](const double& th, Rng& rng) { return th + rng.uniform(-1.0, 1.0); };
    kernel.log_density_ratio = [](const double&, const double&) { return 0.0; };
    cfg.kernel = kernel;
    const GibbsResult<double> res = gibbs_run(cfg, stub);
    REQUIRE(res.theta_trace.size() == static_cast<std::size_t>(cfg.iterations) + 1);

    const double total_time = 3.0;
    const auto log_target = [&](const double& th) { return -0.5 * th * th * (1.0 + total_time); };
    const auto step = [&](const double& cur, Rng& rng) {
        bool acc = false;
        const double next = barker_step_exact<double>(cur, kernel, log_target, rng, &acc);
        return std::pair<double, StepMeta>{next, StepMeta{acc, 1, 0.0}};
    };
    const ChainTrace<double> ref = run_chain<double>(step, 0.0, cfg.iterations, 62);

    std::vector<double> a, b;
    for (std::size_t i = 2000; i < res.theta_trace.size(); i += 10) a.push_back(res.theta_trace[i]);
    for (std::size_t i = 2000; i < ref.states.size(); i += 10) b.push_back(ref.states[i]);
    const double d = ks_two_sample(a, b);
    const double thresh = 1.63 * std::sqrt((a.size() + b.size()) / static_cast<double>(a.size() * b.size()));
    CHECK(d < thresh);

    // Exact-variance sanity: Var(th | data) = 1 / (1 + T).
    double mean = 0.0, var = 0.0;
    for (double x : a) mean += x;
    mean /= static_cast<double>(a.size());
    for (double x : a) var += (x - mean) * (x - mean);
    var /= static_cast<double>(a.size() - 1);
    CHECK(mean == doctest::Approx(0.0).epsilon(0.05).scale(1.0));
    CHECK(var == doctest::Approx(1.0 / (1.0 + total_time)).epsilon(0.12));
}

TEST_CASE("gibbs_run: small Wright-Fisher problem mixes and stays in domain") {
    const auto model = boxed_wf_model();
    const std::vector<double> times = {0.0, 0.5, 1.0, 1.5, 2.0};
    // Interior observations keep the latent bridges away from {0, 1}, where
    // the drift potential diverges and certified bounds become enormous.
    const std::vector<double> values = {0.45, 0.60, 0.52, 0.38, 0.55};

    GibbsConfig<wf::ThetaState> cfg;
    cfg.times = times;
    cfg.values = values;
    cfg.init = wf::ThetaState{1.5, 0.5};
    cfg.kernel = wf::wf_box_kernel(0.3, 0.05);
    cfg.iterations = 150;
    cfg.sweeps_per_iteration = 2;
    cfg.seed = 73;
    cfg.loop_cap = 200000;
    const auto res = gibbs_run(cfg, model);
    REQUIRE(res.theta_trace.size() == 151);
    for (const auto& th : res.theta_trace) CHECK(wf::wf_theta_domain(th));
    CHECK(res.path_acceptance_rate > 0.0);
    CHECK(res.path_acceptance_rate < 1.0);
    CHECK(res.param_acceptance_rate > 0.0);
    CHECK(res.path_mean_loops >= 1.0);
    CHECK(res.param_mean_loops >= 1.0);
    bool theta_moved = false;
    for (const auto& th : res.theta_trace)
        if (th.gamma1 != cfg.init.gamma1) theta_moved = true;
    CHECK(theta_moved);
}

TEST_CASE("gibbs_run: parallel sweeps reproduce the serial trace exactly") {
    const auto model = boxed_wf_model();
    const std::vector<double> times = {0.0, 0.5, 1.0, 1.5};
    const std::vector<double> values = {0.50, 0.42, 0.58, 0.47};

    GibbsConfig<wf::ThetaState> cfg;
    cfg.times = times;
    cfg.values = values;
    cfg.init = wf::ThetaState{1.5, 0.5};
    cfg.kernel = wf::wf_box_kernel(0.3, 0.05);
    cfg.iterations = 40;
    cfg.seed = 83;
    cfg.loop_cap = 200000;
    cfg.parallel = false;
    const auto serial = gibbs_run(cfg, model);
    cfg.parallel = true;
    const auto parallel = gibbs_run(cfg, model);
    REQUIRE(serial.theta_trace.size() == parallel.theta_trace.size());
    for (std::size_t i = 0; i < serial.theta_trace.size(); ++i) {
        CHECK(serial.theta_trace[i].gamma1 == parallel.theta_trace[i].gamma1);
        CHECK(serial.theta_trace[i].gamma2 == parallel.theta_trace[i].gamma2);
    }
    CHECK(serial.path_acceptance_rate == parallel.path_acceptance_rate);
    CHECK(serial.param_mean_loops == parallel.param_mean_loops);
}

TEST_CASE("gibbs_run: configuration validation and empty runs") {
    const auto model = wf::wf_model();
    GibbsConfig<wf::ThetaState> cfg;
    cfg.times = {0.0, 1.0};
    cfg.values = {0.4, 0.6};
    cfg.init = wf::ThetaState{1.0, 0.5};
    cfg.kernel = wf::wf_box_kernel(0.4, 0.05);
    cfg.iterations = 0;
    cfg.seed = 89;
    const auto res = gibbs_run(cfg, model);
    CHECK(res.theta_trace.size() == 1);
    CHECK(res.param_meta.empty());

    auto bad = cfg;
    bad.times = {0.0};
    bad.values = {0.4};
    CHECK_THROWS_AS(gibbs_run(bad, model), std::invalid_argument);
    bad = cfg;
    bad.values = {0.4};
    CHECK_THROWS_AS(gibbs_run(bad, model), std::invalid_argument);
    bad = cfg;
    bad.times = {1.0, 1.0};
    CHECK_THROWS_AS(gibbs_run(bad, model), std::invalid_argument);
    bad = cfg;
    bad.iterations = -1;
    CHECK_THROWS_AS(gibbs_run(bad, model), std::invalid_argument);
    bad = cfg;
    bad.sweeps_per_iteration = 0;
    CHECK_THROWS_AS(gibbs_run(bad, model), std::invalid_argument);
    bad = cfg;
    bad.delta = 0.0;
    CHECK_THROWS_AS(gibbs_run(bad, model), std::invalid_argument);
    bad = cfg;
    bad.init = wf::ThetaState{-1.0, 0.5};
    CHECK_THROWS_AS(gibbs_run(bad, model), std::invalid_argument);
}
