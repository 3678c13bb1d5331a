#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "barker/diffusion.hpp"
#include "barker/rng.hpp"

namespace barker::wf {

/// Wright-Fisher parametrisation: gamma1 = theta1 + theta2 (drift force),
/// gamma2 = theta1 / (theta1 + theta2) (reversible mean).
struct ThetaState {
    double gamma1 = 1.0;
    double gamma2 = 0.5;
};

inline constexpr double kPi = 3.14159265358979323846;

/// Variance-stabilising transform of the Wright-Fisher diffusion:
/// u = 2 arcsin(sqrt(y)), mapping (0,1) onto (0, pi).
inline double wf_lamperti(double y) {
    if (!(y > 0.0 && y < 1.0)) throw diffusion::DomainError("wf_lamperti: y must lie in (0,1)");
    return 2.0 * std::asin(std::sqrt(y));
}

inline double wf_lamperti_inv(double u) {
    const double s = std::sin(0.5 * u);
    return s * s;
}

namespace detail {

// Transformed drift alpha(u) = (A0 + A1 cos u) / (2 sin u) with
// A0 = gamma1 (2 gamma2 - 1), A1 = gamma1 - 1.
inline double coeff_a0(const ThetaState& th) { return th.gamma1 * (2.0 * th.gamma2 - 1.0); }
inline double coeff_a1(const ThetaState& th) { return th.gamma1 - 1.0; }

inline void check_interior(double u) {
    if (!(u > 0.0 && u < kPi)) throw diffusion::DomainError("wright_fisher: u must lie in (0, pi)");
}

}  // namespace detail

inline double wf_alpha(double u, const ThetaState& th) {
    detail::check_interior(u);
    return (detail::coeff_a0(th) + detail::coeff_a1(th) * std::cos(u)) / (2.0 * std::sin(u));
}

/// Girsanov potential g = (alpha^2 + alpha')/2 in closed form:
/// g(u) = [(A0 + A1 c)^2 - 2 (A1 + A0 c)] / (8 (1 - c^2)), c = cos u.
inline double wf_g(double u, const ThetaState& th) {
    detail::check_interior(u);
    const double a0 = detail::coeff_a0(th);
    const double a1 = detail::coeff_a1(th);
    const double c = std::cos(u);
    const double lin = a0 + a1 * c;
    return (lin * lin - 2.0 * (a1 + a0 * c)) / (8.0 * (1.0 - c * c));
}

/// Antiderivative of alpha, A(u) = (A0/2) log tan(u/2) + (A1/2) log sin u,
/// normalised so A(pi/2) = 0. Only differences of A enter acceptance weights,
/// so the reference point is immaterial.
inline double wf_A(double u, const ThetaState& th) {
    detail::check_interior(u);
    return 0.5 * detail::coeff_a0(th) * std::log(std::tan(0.5 * u)) +
           0.5 * detail::coeff_a1(th) * std::log(std::sin(u));
}

struct WfTerms {
    double alpha = 0.0;
    double g = 0.0;
    double A = 0.0;
};

inline WfTerms wf_drift_terms(double u, const ThetaState& th) {
    return {wf_alpha(u, th), wf_g(u, th), wf_A(u, th)};
}

/// Certified (inf g, sup g) over a band strictly inside (0, pi). Interior
/// critical points of g solve the quadratic
///   A0 (A1 - 1) c^2 + (A0^2 + A1^2 - 2 A1) c + A0 (A1 - 1) = 0,   c = cos u
/// (the cubic terms of the quotient-rule numerator cancel). The extrema over
/// a closed sub-band are therefore attained at its endpoints or at these
/// roots; a small relative margin absorbs floating-point evaluation error.
inline Band wf_g_bounds(const Band& band, const ThetaState& th) {
    if (!(band.lo > 0.0 && band.hi < kPi && band.lo < band.hi))
        throw diffusion::DomainError("wf_g_bounds: band must sit strictly inside (0, pi)");
    const double a0 = detail::coeff_a0(th);
    const double a1 = detail::coeff_a1(th);
    std::vector<double> where = {band.lo, band.hi};
    const double qa = a0 * (a1 - 1.0);
    const double qb = a0 * a0 + a1 * a1 - 2.0 * a1;
    if (qa != 0.0) {
        const double disc = qb * qb - 4.0 * qa * qa;
        if (disc >= 0.0) {
            const double rt = std::sqrt(disc);
            for (const double c : {(-qb + rt) / (2.0 * qa), (-qb - rt) / (2.0 * qa)}) {
                if (c > -1.0 && c < 1.0) {
                    const double u = std::acos(c);
                    if (u > band.lo && u < band.hi) where.push_back(u);
                }
            }
        }
    } else if (qb != 0.0) {
        if (band.lo < 0.5 * kPi && 0.5 * kPi < band.hi) where.push_back(0.5 * kPi);  // root c = 0
    }
    double lo = HUGE_VAL, hi = -HUGE_VAL;
    for (const double u : where) {
        const double v = wf_g(u, th);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double margin = 1e-12 * std::max({1.0, std::fabs(lo), std::fabs(hi)});
    return {lo - margin, hi + margin};
}

inline bool wf_theta_domain(const ThetaState& th) {
    return th.gamma1 > 0.0 && th.gamma2 > 0.0 && th.gamma2 < 1.0;
}

/// Flat prior over {gamma1 > 0, 0 < gamma2 < 1}.
inline diffusion::DiffusionModel<ThetaState> wf_model() {
    diffusion::DiffusionModel<ThetaState> m;
    m.domain = Band{0.0, kPi};
    m.alpha = [](double u, const ThetaState& th) { return wf_alpha(u, th); };
    m.g = [](double u, const ThetaState& th) { return wf_g(u, th); };
    m.A = [](double u, const ThetaState& th) { return wf_A(u, th); };
    m.g_bounds = [](const Band& b, const ThetaState& th) { return wf_g_bounds(b, th); };
    m.lamperti = [](double y) { return wf_lamperti(y); };
    m.lamperti_inv = [](double u) { return wf_lamperti_inv(u); };
    m.prior_log_density = [](const ThetaState& th) { return wf_theta_domain(th) ? 0.0 : -HUGE_VAL; };
    m.in_theta_domain = [](const ThetaState& th) { return wf_theta_domain(th); };
    return m;
}

/// Box proposal kernel: independent uniform moves of the two components.
inline ProposalKernel<ThetaState> wf_box_kernel(double half_g1, double half_g2) {
    ProposalKernel<ThetaState> k;
    k.sample = [half_g1, half_g2](const ThetaState& th, Rng& rng) {
        return ThetaState{th.gamma1 + rng.uniform(-half_g1, half_g1),
                          th.gamma2 + rng.uniform(-half_g2, half_g2)};
    };
    k.log_density_ratio = [](const ThetaState&, const ThetaState&) { return 0.0; };
    return k;
}

/// Euler-Maruyama simulation of dY = (theta1 (1-Y) - theta2 Y)/2 ds
/// + sqrt(Y(1-Y)) dW, clamped into (eps, 1-eps). Synthetic data only; never
/// used inside inference. Starts from a stationary Beta(theta1, theta2) draw.
inline std::vector<double> simulate_wf_data(const ThetaState& th, const std::vector<double>& times,
                                            double step, Rng& rng) {
    if (times.size() < 1) throw std::invalid_argument("simulate_wf_data: need at least one time");
    if (!(step > 0.0)) throw std::invalid_argument("simulate_wf_data: step must be positive");
    const double theta1 = th.gamma1 * th.gamma2;
    const double theta2 = th.gamma1 * (1.0 - th.gamma2);
    constexpr double eps = 1e-6;
    const auto clamp = [&](double y) { return std::min(1.0 - eps, std::max(eps, y)); };
    const double g1 = rng.gamma(theta1, 1.0);
    const double g2 = rng.gamma(theta2, 1.0);
    double y = clamp(g1 / (g1 + g2));
    std::vector<double> out;
    out.reserve(times.size());
    out.push_back(y);
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        const double gap = times[i + 1] - times[i];
        if (!(gap > 0.0)) throw std::invalid_argument("simulate_wf_data: times must increase");
        const long n = std::max(1L, static_cast<long>(std::ceil(gap / step)));
        const double h = gap / static_cast<double>(n);
        for (long k = 0; k < n; ++k) {
            const double drift = 0.5 * (theta1 * (1.0 - y) - theta2 * y);
            y = clamp(y + drift * h + std::sqrt(y * (1.0 - y) * h) * rng.normal());
        }
        out.push_back(y);
    }
    return out;
}

}  // namespace barker::wf
