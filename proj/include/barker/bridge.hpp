#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "barker/rng.hpp"

namespace barker {

struct NonConvergence : std::runtime_error {
    explicit NonConvergence(const std::string& what) : std::runtime_error(what) {}
};

/// Open band (lo, hi).
struct Band {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
    bool strictly_inside(double x) const { return x > lo && x < hi; }
    bool contains(const Band& other) const { return lo <= other.lo && other.hi <= hi; }
};

/// Brownian bridge over [t_offset, t_offset + duration] pinned at x_start, x_end.
struct BridgeSpec {
    double x_start = 0.0;
    double x_end = 0.0;
    double duration = 1.0;
    double t_offset = 0.0;
};

/// Certified two-sided bracket for a probability (or a signed weight).
struct Bracket {
    double lo = 0.0;
    double hi = 1.0;

    Bracket clamp01() const { return {std::max(0.0, lo), std::min(1.0, hi)}; }

    friend Bracket operator*(const Bracket& a, const Bracket& b) {  // nonnegative operands
        return {a.lo * b.lo, a.hi * b.hi};
    }
    friend Bracket operator-(const Bracket& a, const Bracket& b) { return {a.lo - b.hi, a.hi - b.lo}; }
    friend Bracket operator+(const Bracket& a, const Bracket& b) { return {a.lo + b.lo, a.hi + b.hi}; }
};

/// Bracket of a ratio num/den of probabilities, clamped to [0,1].
inline Bracket bracket_ratio(const Bracket& num, const Bracket& den) {
    Bracket out;
    out.lo = den.hi > 0.0 ? std::max(0.0, num.lo) / den.hi : 0.0;
    out.hi = den.lo > 0.0 ? std::min(1.0, std::max(0.0, num.hi) / den.lo) : 1.0;
    return out;
}

namespace detail {

inline constexpr int kMaxRefineLevel = 15;
inline int series_terms(int level) { return 4 << level; }

}  // namespace detail

/// Partial-sum bracket for the probability that a Brownian bridge from x to y
/// over duration t remains strictly inside the band. Classical alternating
/// series of Gaussian exponentials; the tail of the symmetric sum is bounded
/// by a geometric series so that [lo, hi] certifiably contains the limit.
inline Bracket stay_prob_bracket(double x, double y, double t, const Band& band, int n_terms) {
    if (!(t > 0.0)) throw std::invalid_argument("stay_prob_bracket: duration must be positive");
    if (!band.strictly_inside(x) || !band.strictly_inside(y)) return {0.0, 0.0};
    const double d = band.width();
    const double xp = x - band.lo;
    const double yp = y - band.lo;
    double s = 0.0;
    for (int n = -n_terms; n <= n_terms; ++n) {
        const double nd = static_cast<double>(n) * d;
        s += std::exp(-2.0 * nd * (nd + yp - xp) / t) - std::exp(-2.0 * (nd + xp) * (nd + yp) / t);
    }
    // |term| <= exp(-2 (m-1)^2 d^2 / t) for |n| = m; four exponentials per m.
    const double m = static_cast<double>(n_terms + 1);
    const double q = std::exp(-2.0 * (2.0 * m - 1.0) * d * d / t);
    double tail = HUGE_VAL;
    if (q < 1.0) tail = 4.0 * std::exp(-2.0 * (m - 1.0) * (m - 1.0) * d * d / t) / (1.0 - q);
    return Bracket{s - tail, s + tail}.clamp01();
}

/// Probability that the bridge stays in (lower, upper), to certified error
/// < tol. Returns 0 exactly when an endpoint lies outside the open band.
inline double crossing_prob(const BridgeSpec& spec, double lower, double upper, double tol = 1e-12) {
    if (!(tol > 0.0)) throw std::invalid_argument("crossing_prob: tol must be positive");
    const Band band{lower, upper};
    if (!band.strictly_inside(spec.x_start) || !band.strictly_inside(spec.x_end)) return 0.0;
    for (int level = 0; level <= detail::kMaxRefineLevel; ++level) {
        const Bracket b = stay_prob_bracket(spec.x_start, spec.x_end, spec.duration, band, detail::series_terms(level));
        if (b.lo > b.hi) throw std::logic_error("crossing_prob: bracket inverted");
        if (b.hi - b.lo < tol) return 0.5 * (b.lo + b.hi);
    }
    throw NonConvergence("crossing_prob: series did not certify tol within the iteration budget");
}

/// Retrospective comparison of a uniform draw against a series-valued
/// probability: refine the sandwich until the draw falls outside it.
template <class BracketFn>
bool decide_event(double u, BracketFn&& bracket_at_level) {
    for (int level = 0; level <= detail::kMaxRefineLevel; ++level) {
        const Bracket b = bracket_at_level(level);
        if (u < b.lo) return true;
        if (u >= b.hi) return false;
        if (b.hi - b.lo < 1e-14) return u < 0.5 * (b.lo + b.hi);  // floating-point floor
    }
    throw NonConvergence("decide_event: bracket refinement exhausted");
}

struct TimeValue {
    double t = 0.0;
    double v = 0.0;
};

/// Path-excursion information beyond the certified outer band.
///   Disjunction: the path leaves `inner` (side unknown), inner inside outer.
///   ExitLow:     inf of the path is below exit_lo.
///   ExitHigh:    sup of the path is above exit_hi.
///   ExitBoth:    both one-sided excursions hold.
///   None:        containment in outer is all that is known (any excursion
///                constraint already implied by revealed points is dropped).
enum class ExcursionKind { None, Disjunction, ExitLow, ExitHigh, ExitBoth };

/// Compact summary of the simulated bound information for one bridge.
struct Layer {
    BridgeSpec spec;
    int index = 0;
    double lower = 0.0;
    double upper = 0.0;
};

/// A bridge together with its layer knowledge and the finite set of revealed
/// (time, value) points. A value type: concurrent use across distinct bridges
/// with disjoint RNG streams is safe.
struct RevealedPath {
    BridgeSpec spec;
    int layer_index = 0;
    Band outer;
    ExcursionKind kind = ExcursionKind::None;
    Band inner;           // Disjunction only
    double exit_lo = 0.0;  // ExitLow / ExitBoth
    double exit_hi = 0.0;  // ExitHigh / ExitBoth
    std::vector<TimeValue> points;  // time-sorted, includes both endpoints

    Layer layer() const { return {spec, layer_index, outer.lo, outer.hi}; }
    double t_end() const { return spec.t_offset + spec.duration; }

    double min_point() const {
        double m = points.front().v;
        for (const auto& p : points) m = std::min(m, p.v);
        return m;
    }
    double max_point() const {
        double m = points.front().v;
        for (const auto& p : points) m = std::max(m, p.v);
        return m;
    }
};

namespace detail {

/// Product over consecutive revealed pairs of the sub-bridge stay probability
/// in `band`; zero as soon as a revealed value leaves the band.
inline Bracket stay_all_bracket(const std::vector<TimeValue>& pts, const Band& band, int n_terms,
                                std::size_t skip_pair = static_cast<std::size_t>(-1)) {
    Bracket acc{1.0, 1.0};
    if (band.width() <= 0.0) return {0.0, 0.0};
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        if (i == skip_pair) continue;
        const Bracket f = stay_prob_bracket(pts[i].v, pts[i + 1].v, pts[i + 1].t - pts[i].t, band, n_terms);
        if (f.hi == 0.0) return {0.0, 0.0};
        acc = (acc * f).clamp01();
    }
    return acc;
}

/// Signed band decomposition of the excursion event: the knowledge
/// probability is sum_k sign_k * P(path within band_k | pins).
struct SignedBand {
    int sign;
    Band band;
};

inline std::vector<SignedBand> knowledge_bands(const RevealedPath& p) {
    switch (p.kind) {
        case ExcursionKind::None:
            return {{+1, p.outer}};
        case ExcursionKind::Disjunction:
            return {{+1, p.outer}, {-1, p.inner}};
        case ExcursionKind::ExitLow:
            return {{+1, p.outer}, {-1, Band{p.exit_lo, p.outer.hi}}};
        case ExcursionKind::ExitHigh:
            return {{+1, p.outer}, {-1, Band{p.outer.lo, p.exit_hi}}};
        case ExcursionKind::ExitBoth:
            return {{+1, p.outer},
                    {-1, Band{p.exit_lo, p.outer.hi}},
                    {-1, Band{p.outer.lo, p.exit_hi}},
                    {+1, Band{p.exit_lo, p.exit_hi}}};
    }
    return {};
}

/// P(layer knowledge | revealed points) as a certified bracket.
inline Bracket knowledge_bracket(const RevealedPath& p, int n_terms) {
    Bracket acc{0.0, 0.0};
    bool first = true;
    for (const auto& sb : knowledge_bands(p)) {
        const Bracket term = stay_all_bracket(p.points, sb.band, n_terms);
        if (first) {
            acc = term;
            first = false;
        } else {
            acc = sb.sign > 0 ? acc + term : acc - term;
        }
    }
    return acc.clamp01();
}

/// Drop excursion constraints that a newly revealed value implies.
inline void simplify_knowledge(RevealedPath& p, double v) {
    switch (p.kind) {
        case ExcursionKind::Disjunction:
            if (!p.inner.strictly_inside(v)) p.kind = ExcursionKind::None;
            break;
        case ExcursionKind::ExitLow:
            if (v < p.exit_lo) p.kind = ExcursionKind::None;
            break;
        case ExcursionKind::ExitHigh:
            if (v > p.exit_hi) p.kind = ExcursionKind::None;
            break;
        case ExcursionKind::ExitBoth:
            if (v < p.exit_lo && v > p.exit_hi) {  // impossible; kept for symmetry
                p.kind = ExcursionKind::None;
            } else if (v < p.exit_lo) {
                p.kind = ExcursionKind::ExitHigh;
            } else if (v > p.exit_hi) {
                p.kind = ExcursionKind::ExitLow;
            }
            break;
        case ExcursionKind::None:
            break;
    }
}

/// decide_event on the conditional probability P(candidate) / P(current).
inline bool resolve_conditional(const RevealedPath& candidate, const RevealedPath& current, Rng& rng) {
    const double u = rng.uniform01();
    return decide_event(u, [&](int level) {
        const int n = series_terms(level);
        return bracket_ratio(knowledge_bracket(candidate, n), knowledge_bracket(current, n));
    });
}

/// Resolves which side(s) a Disjunction excursion happened on, turning the
/// knowledge into ExitLow / ExitHigh / ExitBoth. The one-sided cases also
/// tighten the outer band to the corresponding inner edge.
inline void split_disjunction(RevealedPath& path, Rng& rng) {
    RevealedPath low_only = path;
    low_only.outer.hi = path.inner.hi;
    low_only.kind = ExcursionKind::ExitLow;
    low_only.exit_lo = path.inner.lo;
    RevealedPath high_only = path;
    high_only.outer.lo = path.inner.lo;
    high_only.kind = ExcursionKind::ExitHigh;
    high_only.exit_hi = path.inner.hi;
    const double u = rng.uniform01();
    const bool is_low = decide_event(u, [&](int level) {
        const int n = series_terms(level);
        return bracket_ratio(knowledge_bracket(low_only, n), knowledge_bracket(path, n));
    });
    if (is_low) {
        path = low_only;
        return;
    }
    const bool is_high = decide_event(u, [&](int level) {
        const int n = series_terms(level);
        const Bracket cum = knowledge_bracket(low_only, n) + knowledge_bracket(high_only, n);
        return bracket_ratio(cum, knowledge_bracket(path, n));
    });
    if (is_high) {
        path = high_only;
        return;
    }
    path.kind = ExcursionKind::ExitBoth;
    path.exit_lo = path.inner.lo;
    path.exit_hi = path.inner.hi;
}

}  // namespace detail

/// The probability that the whole layer event of `p` holds, marginal over the
/// unrevealed parts given the revealed points (series value to tol).
inline double layer_event_prob(const RevealedPath& p, double tol = 1e-12) {
    for (int level = 0; level <= detail::kMaxRefineLevel; ++level) {
        const Bracket b = detail::knowledge_bracket(p, detail::series_terms(level));
        if (b.hi - b.lo < tol) return 0.5 * (b.lo + b.hi);
    }
    throw NonConvergence("layer_event_prob: no certification within budget");
}

/// Samples the layer of a fresh bridge: P(layer = l) = gamma_l - gamma_{l-1}
/// where gamma_l is the stay probability of the l-th band. Bands grow
/// symmetrically around the endpoint hull in units of delta * sqrt(duration).
inline RevealedPath sample_layer(const BridgeSpec& spec, double delta, Rng& rng) {
    if (!(delta > 0.0)) throw std::invalid_argument("sample_layer: delta must be positive");
    const double m = std::min(spec.x_start, spec.x_end);
    const double big = std::max(spec.x_start, spec.x_end);
    const double unit = delta * std::sqrt(spec.duration);
    const double u = rng.uniform01();
    constexpr int kMaxLayer = 64;
    for (int l = 1; l <= kMaxLayer; ++l) {
        const Band band{m - l * unit, big + l * unit};
        const bool inside = decide_event(u, [&](int level) {
            return stay_prob_bracket(spec.x_start, spec.x_end, spec.duration, band, detail::series_terms(level));
        });
        if (inside) {
            RevealedPath path;
            path.spec = spec;
            path.layer_index = l;
            path.outer = band;
            path.kind = ExcursionKind::Disjunction;
            path.inner = Band{m - (l - 1) * unit, big + (l - 1) * unit};
            path.points = {{spec.t_offset, spec.x_start}, {spec.t_offset + spec.duration, spec.x_end}};
            return path;
        }
    }
    throw NonConvergence("sample_layer: layer index budget exhausted");
}

/// Reveals the bridge value at time s, drawn exactly from its conditional law
/// given all previously revealed points and the layer event. Rejection from
/// the free Gaussian bridge interpolation; the acceptance weight is the
/// conditional probability of the layer event given the candidate value,
/// decided retrospectively against the series sandwich.
inline double reveal_point(RevealedPath& path, double s, Rng& rng) {
    if (!(s > path.spec.t_offset && s < path.t_end()))
        throw std::invalid_argument("reveal_point: time outside the open interval");
    auto it = std::lower_bound(path.points.begin(), path.points.end(), s,
                               [](const TimeValue& p, double t) { return p.t < t; });
    if (it != path.points.end() && it->t == s) throw std::invalid_argument("reveal_point: time already revealed");
    const TimeValue right = *it;
    const TimeValue left = *(it - 1);
    const double dl = s - left.t;
    const double dr = right.t - s;
    const double span = right.t - left.t;
    const double mean = (dr * left.v + dl * right.v) / span;
    const double sd = std::sqrt(dl * dr / span);

    const auto bands = detail::knowledge_bands(path);
    // Factors over sub-bridges not adjacent to s are constant in the
    // candidate value; they enter only through per-band coefficients rho,
    // which are cached per precision level across rejection attempts.
    const std::size_t split_pair = static_cast<std::size_t>(it - path.points.begin()) - 1;
    std::vector<std::vector<Bracket>> rho_cache(bands.size());
    const auto rho_at = [&](std::size_t band_idx, int level) -> const Bracket& {
        auto& levels = rho_cache[band_idx];
        while (levels.size() <= static_cast<std::size_t>(level)) {
            const int n = detail::series_terms(static_cast<int>(levels.size()));
            const auto& band = bands[band_idx].band;
            if (band.lo == path.outer.lo && band.hi == path.outer.hi) {
                levels.push_back(Bracket{1.0, 1.0});
            } else {
                const Bracket outer_rest = detail::stay_all_bracket(path.points, path.outer, n, split_pair);
                const Bracket band_rest = detail::stay_all_bracket(path.points, band, n, split_pair);
                levels.push_back(bracket_ratio(band_rest, outer_rest));
            }
        }
        return levels[static_cast<std::size_t>(level)];
    };

    constexpr long kProposalBudget = 10000000;
    for (long attempt = 0; attempt < kProposalBudget; ++attempt) {
        const double v = mean + sd * rng.normal();
        if (!path.outer.strictly_inside(v)) continue;
        const double u = rng.uniform01();
        const bool accept = decide_event(u, [&](int level) {
            const int n = detail::series_terms(level);
            Bracket acc{0.0, 0.0};
            bool first = true;
            for (std::size_t bi = 0; bi < bands.size(); ++bi) {
                const auto& sb = bands[bi];
                const Bracket rho = rho_at(bi, level);
                const Bracket fl = stay_prob_bracket(left.v, v, dl, sb.band, n);
                const Bracket fr = stay_prob_bracket(v, right.v, dr, sb.band, n);
                const Bracket term = (rho * fl * fr).clamp01();
                if (first) {
                    acc = term;
                    first = false;
                } else {
                    acc = sb.sign > 0 ? acc + term : acc - term;
                }
            }
            return acc.clamp01();
        });
        if (accept) {
            if (!path.outer.strictly_inside(v)) throw std::logic_error("reveal_point: value escaped the layer band");
            path.points.insert(it, {s, v});
            detail::simplify_knowledge(path, v);
            return v;
        }
    }
    throw NonConvergence("reveal_point: rejection budget exhausted");
}

/// Simulates the finer layer the path occupies: the outer band becomes one
/// bisection step tighter on at least one side, drawn from the correct
/// conditional law given everything revealed so far.
inline void refine_layer(RevealedPath& path, Rng& rng) {
    constexpr int kBudget = 256;
    for (int round = 0; round < kBudget; ++round) {
        const double pmin = path.min_point();
        const double pmax = path.max_point();
        double lo_cap = pmin;
        double hi_cap = pmax;
        if (path.kind == ExcursionKind::Disjunction) {
            lo_cap = std::min(lo_cap, path.inner.lo);
            hi_cap = std::max(hi_cap, path.inner.hi);
        }
        if (path.kind == ExcursionKind::ExitLow || path.kind == ExcursionKind::ExitBoth)
            lo_cap = std::min(lo_cap, path.exit_lo);
        if (path.kind == ExcursionKind::ExitHigh || path.kind == ExcursionKind::ExitBoth)
            hi_cap = std::max(hi_cap, path.exit_hi);
        const double room_lo = lo_cap - path.outer.lo;
        const double room_hi = path.outer.hi - hi_cap;
        // Stop at a resolution proportional to the band width: squeezing exit
        // levels onto the band edge leaves knowledge of vanishing conditional
        // probability, which later point revelations can no longer satisfy.
        const double room_floor = std::max(1e-12, 1e-2 * path.outer.width());
        if (room_lo <= room_floor && room_hi <= room_floor) return;

        switch (path.kind) {
            case ExcursionKind::None:
            case ExcursionKind::Disjunction: {
                const Band mid{0.5 * (path.outer.lo + lo_cap), 0.5 * (path.outer.hi + hi_cap)};
                RevealedPath cand = path;
                cand.outer = mid;
                if (detail::resolve_conditional(cand, path, rng)) {
                    path.outer = mid;
                    return;
                }
                // Path leaves the mid band: resolve on which side(s), which
                // in the one-sided cases tightens the opposite outer edge.
                path.kind = ExcursionKind::Disjunction;
                path.inner = mid;
                detail::split_disjunction(path, rng);
                if (path.kind != ExcursionKind::ExitBoth) return;
                break;
            }
            case ExcursionKind::ExitLow:
            case ExcursionKind::ExitHigh:
            case ExcursionKind::ExitBoth: {
                const bool do_lo = room_lo >= room_hi;
                if (do_lo && (path.kind == ExcursionKind::ExitLow || path.kind == ExcursionKind::ExitBoth)) {
                    // Deepen or settle the lower exit level.
                    const double lp = 0.5 * (path.outer.lo + lo_cap);
                    RevealedPath cand = path;
                    cand.exit_lo = lp;
                    if (detail::resolve_conditional(cand, path, rng)) {
                        path.exit_lo = lp;  // exit is deeper; outer unchanged, keep resolving
                    } else {
                        path.outer.lo = lp;
                        return;
                    }
                } else if (do_lo) {  // ExitHigh, tightening the lower side
                    const double lp = 0.5 * (path.outer.lo + lo_cap);
                    RevealedPath cand = path;
                    cand.outer.lo = lp;
                    if (detail::resolve_conditional(cand, path, rng)) {
                        path.outer.lo = lp;
                        return;
                    }
                    path.kind = ExcursionKind::ExitBoth;
                    path.exit_lo = lp;
                } else if (path.kind == ExcursionKind::ExitHigh || path.kind == ExcursionKind::ExitBoth) {
                    const double hp = 0.5 * (path.outer.hi + hi_cap);
                    RevealedPath cand = path;
                    cand.exit_hi = hp;
                    if (detail::resolve_conditional(cand, path, rng)) {
                        path.exit_hi = hp;
                    } else {
                        path.outer.hi = hp;
                        return;
                    }
                } else {  // ExitLow, tightening the upper side
                    const double hp = 0.5 * (path.outer.hi + hi_cap);
                    RevealedPath cand = path;
                    cand.outer.hi = hp;
                    if (detail::resolve_conditional(cand, path, rng)) {
                        path.outer.hi = hp;
                        return;
                    }
                    path.kind = ExcursionKind::ExitBoth;
                    path.exit_hi = hp;
                }
                break;
            }
        }
    }
    throw NonConvergence("refine_layer: resolution budget exhausted");
}

enum class DomainCheck { Contained, Exits };

/// Resolves the path against a target band: either certifies that the outer
/// band fits inside `target` (tightening it as needed) or certifies that the
/// path leaves `target`. Terminates a.s.: each resolution settles one side.
inline DomainCheck ensure_within(RevealedPath& path, const Band& target, Rng& rng) {
    constexpr int kBudget = 256;
    for (int round = 0; round < kBudget; ++round) {
        for (const auto& p : path.points)
            if (!target.strictly_inside(p.v)) return DomainCheck::Exits;
        if ((path.kind == ExcursionKind::ExitLow || path.kind == ExcursionKind::ExitBoth) &&
            path.exit_lo <= target.lo)
            return DomainCheck::Exits;
        if ((path.kind == ExcursionKind::ExitHigh || path.kind == ExcursionKind::ExitBoth) &&
            path.exit_hi >= target.hi)
            return DomainCheck::Exits;
        if (target.contains(path.outer)) return DomainCheck::Contained;

        const bool lo_offends = path.outer.lo < target.lo;
        switch (path.kind) {
            case ExcursionKind::None: {
                RevealedPath cand = path;
                if (lo_offends)
                    cand.outer.lo = target.lo;
                else
                    cand.outer.hi = target.hi;
                if (detail::resolve_conditional(cand, path, rng)) {
                    path.outer = cand.outer;
                } else if (lo_offends) {
                    path.kind = ExcursionKind::ExitLow;
                    path.exit_lo = target.lo;
                } else {
                    path.kind = ExcursionKind::ExitHigh;
                    path.exit_hi = target.hi;
                }
                break;
            }
            case ExcursionKind::Disjunction: {
                const bool inner_fits = lo_offends ? path.inner.lo >= target.lo : path.inner.hi <= target.hi;
                if (inner_fits) {
                    RevealedPath cand = path;
                    if (lo_offends)
                        cand.outer.lo = target.lo;
                    else
                        cand.outer.hi = target.hi;
                    if (detail::resolve_conditional(cand, path, rng)) {
                        path.outer = cand.outer;
                    } else if (lo_offends) {
                        path.kind = ExcursionKind::ExitLow;
                        path.exit_lo = target.lo;
                    } else {
                        path.kind = ExcursionKind::ExitHigh;
                        path.exit_hi = target.hi;
                    }
                } else {
                    // Resolve which side the known excursion happened on.
                    detail::split_disjunction(path, rng);
                }
                break;
            }
            case ExcursionKind::ExitLow:
            case ExcursionKind::ExitHigh:
            case ExcursionKind::ExitBoth: {
                const bool exit_on_side = lo_offends
                                              ? path.kind != ExcursionKind::ExitHigh
                                              : path.kind != ExcursionKind::ExitLow;
                RevealedPath cand = path;
                if (exit_on_side) {
                    // Is the known one-sided excursion deep enough to leave the target?
                    if (lo_offends)
                        cand.exit_lo = target.lo;
                    else
                        cand.exit_hi = target.hi;
                    if (detail::resolve_conditional(cand, path, rng)) return DomainCheck::Exits;
                    if (lo_offends)
                        path.outer.lo = target.lo;
                    else
                        path.outer.hi = target.hi;
                } else {
                    // Excursion info concerns the other side; settle this one directly.
                    if (lo_offends)
                        cand.outer.lo = target.lo;
                    else
                        cand.outer.hi = target.hi;
                    if (detail::resolve_conditional(cand, path, rng)) {
                        path.outer = cand.outer;
                    } else {
                        // Forced excursion past the target on this side.
                        path.kind = ExcursionKind::ExitBoth;
                        if (lo_offends)
                            path.exit_lo = target.lo;
                        else
                            path.exit_hi = target.hi;
                        return DomainCheck::Exits;
                    }
                }
                break;
            }
        }
    }
    throw NonConvergence("ensure_within: resolution budget exhausted");
}

}  // namespace barker
