#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "barker/wright_fisher.hpp"
#include "doctest.h"

using namespace barker;
using namespace barker::wf;

namespace {

// Simpson quadrature of f over [a, b].
template <class F>
double simpson(F f, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        s += w * f(a + i * h);
    }
    return s * h / 3.0;
}

}  // namespace

TEST_CASE("lamperti transform: anchors, round-trip, quadrature oracle") {
    CHECK(wf_lamperti(0.5) == doctest::Approx(kPi / 2).epsilon(1e-14));
    CHECK(wf_lamperti(1e-12) == doctest::Approx(0.0).epsilon(1e-5));
    CHECK(wf_lamperti(1.0 - 1e-12) == doctest::Approx(kPi).epsilon(1e-5));
    for (double y = 0.02; y < 1.0; y += 0.02) {
        CHECK(wf_lamperti_inv(wf_lamperti(y)) == doctest::Approx(y).epsilon(1e-14));
    }
    // Independent oracle away from the endpoint singularities: increments of
    // the transform equal the integral of 1/sqrt(u(1-u)).
    for (double y = 0.1; y < 0.95; y += 0.05) {
        const double quad =
            simpson([](double u) { return 1.0 / std::sqrt(u * (1.0 - u)); }, 0.05, y, 200000);
        CHECK(wf_lamperti(y) - wf_lamperti(0.05) == doctest::Approx(quad).epsilon(1e-8));
    }
    CHECK_THROWS_AS(wf_lamperti(0.0), diffusion::DomainError);
    CHECK_THROWS_AS(wf_lamperti(1.0), diffusion::DomainError);
    CHECK_THROWS_AS(wf_lamperti(-0.3), diffusion::DomainError);
}

TEST_CASE("drift terms at the symmetric anchor") {
    const ThetaState th{8.0, 0.5};
    CHECK(wf_alpha(kPi / 2, th) == doctest::Approx(0.0));
    CHECK(wf_g(kPi / 2, th) == doctest::Approx(-(th.gamma1 - 1.0) / 4.0));  // = -7/4 at gamma1 = 8
    CHECK(wf_A(kPi / 2, th) == doctest::Approx(0.0));
    CHECK_THROWS_AS(wf_alpha(0.0, th), diffusion::DomainError);
    CHECK_THROWS_AS(wf_g(kPi, th), diffusion::DomainError);
}

TEST_CASE("g matches the finite-difference derivative of alpha") {
    const double h = 1e-5;
    for (const ThetaState th : {ThetaState{8.0, 0.5}, ThetaState{2.0, 0.3}, ThetaState{0.7, 0.8}}) {
        for (double u = 0.15; u < kPi - 0.15; u += 0.05) {
            const double a = wf_alpha(u, th);
            const double da = (wf_alpha(u + h, th) - wf_alpha(u - h, th)) / (2.0 * h);
            CHECK(wf_g(u, th) == doctest::Approx(0.5 * (a * a + da)).epsilon(1e-6));
        }
    }
}

TEST_CASE("A matches adaptive quadrature of alpha from pi/2") {
    for (const ThetaState th : {ThetaState{8.0, 0.5}, ThetaState{3.0, 0.65}, ThetaState{1.2, 0.2}}) {
        for (double u : {0.3, 0.9, 1.4, 2.0, 2.7}) {
            const double quad = simpson([&](double v) { return wf_alpha(v, th); }, kPi / 2, u, 200000);
            CHECK(wf_A(u, th) == doctest::Approx(quad).epsilon(1e-9));
        }
    }
}

TEST_CASE("g_bounds certify g over dense grids") {
    const std::vector<Band> bands = {{kPi / 2 - 0.1, kPi / 2 + 0.1},
                                     {0.2, 1.0},
                                     {0.4, 2.9},
                                     {2.0, 3.0},
                                     {0.05, kPi - 0.05}};
    for (const ThetaState th :
         {ThetaState{8.0, 0.5}, ThetaState{2.0, 0.3}, ThetaState{0.7, 0.8}, ThetaState{1.0, 0.5},
          ThetaState{3.0, 0.5}, ThetaState{15.0, 0.9}}) {
        for (const Band& band : bands) {
            const Band gb = wf_g_bounds(band, th);
            for (int i = 0; i <= 10000; ++i) {
                const double u = band.lo + (band.hi - band.lo) * i / 10000.0;
                const double g = wf_g(u, th);
                CHECK(g >= gb.lo);
                CHECK(g <= gb.hi);
            }
        }
    }
    CHECK_THROWS_AS(wf_g_bounds(Band{-0.1, 1.0}, ThetaState{2.0, 0.5}), diffusion::DomainError);
}

TEST_CASE("g_bounds are monotone under band shrinkage") {
    const ThetaState th{8.0, 0.5};
    const Band wide = wf_g_bounds(Band{0.3, 2.9}, th);
    const Band narrow = wf_g_bounds(Band{0.8, 2.2}, th);
    CHECK(narrow.lo >= wide.lo - 1e-9);
    CHECK(narrow.hi <= wide.hi + 1e-9);
}

TEST_CASE("simulated data stay in (0,1) and match the stationary mean") {
    const ThetaState th{8.0, 0.5};  // theta1 = theta2 = 4: stationary mean 1/2
    std::vector<double> times;
    for (int i = 0; i <= 2000; ++i) times.push_back(static_cast<double>(i));
    Rng rng(7);
    const auto obs = simulate_wf_data(th, times, 0.01, rng);
    REQUIRE(obs.size() == times.size());
    double mean = 0.0;
    for (double y : obs) {
        CHECK(y > 0.0);
        CHECK(y < 1.0);
        mean += y;
    }
    mean /= static_cast<double>(obs.size());
    // Stationary sd of the mean over 2001 correlated draws; loose 0.03 band.
    CHECK(std::fabs(mean - 0.5) < 0.03);
}

TEST_CASE("halving the Euler step barely moves the observation moments") {
    const ThetaState th{5.0, 0.3};
    std::vector<double> times;
    for (int i = 0; i <= 3000; ++i) times.push_back(static_cast<double>(i));
    const auto moments = [&](double step, std::uint64_t seed) {
        Rng rng(seed);
        const auto obs = simulate_wf_data(th, times, step, rng);
        double m = 0.0, v = 0.0;
        for (double y : obs) m += y;
        m /= static_cast<double>(obs.size());
        for (double y : obs) v += (y - m) * (y - m);
        return std::pair{m, v / static_cast<double>(obs.size())};
    };
    const auto [m1, v1] = moments(0.02, 11);
    const auto [m2, v2] = moments(0.01, 13);
    CHECK(std::fabs(m1 - m2) < 0.02);
    CHECK(std::fabs(v1 - v2) < 0.01);
}
