#pragma once

// Exact continuous piecewise-linear functions on an interval, conversion to
// and from one-hidden-layer ReLU nets, composition, and a segmentation DP that
// lower-bounds the number of breakpoints any continuous PWL needs to fit a
// sample set.

#include "xmodal/common.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

namespace xmodal {

inline constexpr double kSlopeTol = 1e-9;

/// Continuous PWL on [lo, hi] in canonical form: breakpoints strictly inside
/// (lo, hi), strictly increasing, and every stored breakpoint is a genuine
/// slope change (|Δslope| > kSlopeTol). Continuity is structural: values are
/// propagated from left_value along the slopes.
class PwlFunction {
public:
    PwlFunction() : PwlFunction(0.0, 1.0, {}, 0.0, {0.0}) {}

    PwlFunction(double lo, double hi, std::vector<double> breakpoints, double left_value,
                std::vector<double> slopes)
        : lo_(lo), hi_(hi), left_value_(left_value) {
        require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, codes::precondition,
                "pwl domain must satisfy lo < hi");
        require(slopes.size() == breakpoints.size() + 1, codes::dimension,
                "pwl needs exactly one slope per piece (breakpoints + 1)");
        for (std::size_t i = 0; i < breakpoints.size(); ++i) {
            require(breakpoints[i] > lo && breakpoints[i] < hi, codes::range,
                    "pwl breakpoint outside the open domain");
            require(i == 0 || breakpoints[i] > breakpoints[i - 1], codes::precondition,
                    "pwl breakpoints must be strictly increasing");
        }
        // canonical form: drop breakpoints without a slope change
        breakpoints_.reserve(breakpoints.size());
        slopes_.push_back(slopes[0]);
        for (std::size_t i = 0; i < breakpoints.size(); ++i) {
            if (std::abs(slopes[i + 1] - slopes_.back()) > kSlopeTol) {
                breakpoints_.push_back(breakpoints[i]);
                slopes_.push_back(slopes[i + 1]);
            }
        }
        knot_values_.reserve(breakpoints_.size());
        double x = lo_, y = left_value_;
        for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
            y += slopes_[i] * (breakpoints_[i] - x);
            x = breakpoints_[i];
            knot_values_.push_back(y);
        }
    }

    /// Linear interpolant through (xs[i], ys[i]); xs strictly increasing, the
    /// first and last entries define the domain.
    static PwlFunction through_points(const std::vector<double>& xs, const std::vector<double>& ys) {
        require(xs.size() == ys.size() && xs.size() >= 2, codes::dimension,
                "need at least two interpolation points");
        std::vector<double> bps(xs.begin() + 1, xs.end() - 1);
        std::vector<double> slopes;
        for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
            require(xs[i + 1] > xs[i], codes::precondition, "interpolation abscissae must increase");
            slopes.push_back((ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]));
        }
        return PwlFunction(xs.front(), xs.back(), std::move(bps), ys.front(), std::move(slopes));
    }

    static PwlFunction affine(double lo, double hi, double value_at_lo, double slope) {
        return PwlFunction(lo, hi, {}, value_at_lo, {slope});
    }

    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    double left_value() const noexcept { return left_value_; }
    const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
    const std::vector<double>& slopes() const noexcept { return slopes_; }
    int breakpoint_count() const noexcept { return static_cast<int>(breakpoints_.size()); }
    int piece_count() const noexcept { return breakpoint_count() + 1; }

    /// Piece index containing x (x clamped to the domain).
    std::size_t piece_of(double x) const {
        return static_cast<std::size_t>(
            std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x) - breakpoints_.begin());
    }

    /// Value at x, clamping x into [lo, hi].
    double value(double x) const {
        x = std::clamp(x, lo_, hi_);
        const std::size_t k = piece_of(x);
        const double x0 = k == 0 ? lo_ : breakpoints_[k - 1];
        const double y0 = k == 0 ? left_value_ : knot_values_[k - 1];
        return y0 + slopes_[k] * (x - x0);
    }

    double right_value() const { return value(hi_); }

    /// Knot abscissae including both domain ends.
    std::vector<double> knots() const {
        std::vector<double> k{lo_};
        k.insert(k.end(), breakpoints_.begin(), breakpoints_.end());
        k.push_back(hi_);
        return k;
    }

    /// Exact [min, max] of the function over its domain.
    std::pair<double, double> range() const {
        double mn = left_value_, mx = left_value_;
        for (double y : knot_values_) {
            mn = std::min(mn, y);
            mx = std::max(mx, y);
        }
        const double r = right_value();
        return {std::min(mn, r), std::max(mx, r)};
    }

    friend bool operator==(const PwlFunction&, const PwlFunction&) = default;

private:
    double lo_, hi_;
    double left_value_;
    std::vector<double> breakpoints_;
    std::vector<double> slopes_;
    std::vector<double> knot_values_;  // cached values at breakpoints
};

struct PwlEval {
    double value;
    bool clamped;  // x was outside the domain
};

inline PwlEval eval(const PwlFunction& f, double x) {
    return {f.value(x), x < f.lo() || x > f.hi()};
}

inline int breakpoint_count(const PwlFunction& f) { return f.breakpoint_count(); }

/// Exact h∘g. Breakpoints are g's breakpoints plus the preimages of h's
/// breakpoints under every affine piece of g, with non-slope-changes removed.
inline PwlFunction compose(const PwlFunction& h, const PwlFunction& g) {
    const auto [gmin, gmax] = g.range();
    const double slack = 1e-12 * (1.0 + std::max(std::abs(h.lo()), std::abs(h.hi())));
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.10g", v);
        return std::string(buf);
    };
    require(gmin >= h.lo() - slack && gmax <= h.hi() + slack, codes::range,
            "compose: range of inner function [" + num(gmin) + ", " + num(gmax) +
                "] is not inside the outer domain [" + num(h.lo()) + ", " + num(h.hi()) + "]");

    const std::vector<double> gk = g.knots();
    std::vector<double> cand;
    for (std::size_t k = 0; k + 1 < gk.size(); ++k) {
        const double x0 = gk[k], x1 = gk[k + 1];
        if (k > 0) cand.push_back(x0);
        const double s = g.slopes()[k];
        if (s == 0.0) continue;
        const double y0 = g.value(x0), y1 = g.value(x1);
        const double ylo = std::min(y0, y1), yhi = std::max(y0, y1);
        for (double beta : h.breakpoints()) {
            if (beta <= ylo || beta >= yhi) continue;
            const double x = x0 + (beta - y0) / s;
            if (x > x0 && x < x1) cand.push_back(x);
        }
    }
    std::sort(cand.begin(), cand.end());
    const double merge = 1e-12 * (g.hi() - g.lo());
    std::vector<double> bps;
    for (double x : cand) {
        if (x <= g.lo() || x >= g.hi()) continue;
        if (!bps.empty() && x - bps.back() <= merge) continue;
        bps.push_back(x);
    }

    auto h_slope_at = [&](double y) { return h.slopes()[h.piece_of(std::clamp(y, h.lo(), h.hi()))]; };
    std::vector<double> slopes;
    std::vector<double> ends{g.lo()};
    ends.insert(ends.end(), bps.begin(), bps.end());
    ends.push_back(g.hi());
    for (std::size_t k = 0; k + 1 < ends.size(); ++k) {
        const double mid = 0.5 * (ends[k] + ends[k + 1]);
        const double gs = g.slopes()[g.piece_of(mid)];
        slopes.push_back(h_slope_at(g.value(mid)) * gs);
    }
    return PwlFunction(g.lo(), g.hi(), std::move(bps), h.value(g.value(g.lo())), std::move(slopes));
}

// ---------------------------------------------------------------------------
// One-hidden-layer ReLU nets on the real line

struct ReluUnit {
    double a = 0.0;  // output weight
    double b = 0.0;  // input weight
    double c = 0.0;  // input bias
};

/// f(x) = Σ_j a_j max(b_j x + c_j, 0) + bias
struct ReluNet1D {
    std::vector<ReluUnit> units;
    double bias = 0.0;

    int width() const noexcept { return static_cast<int>(units.size()); }

    double operator()(double x) const {
        double y = bias;
        for (const auto& u : units) y += u.a * std::max(u.b * x + u.c, 0.0);
        return y;
    }
};

/// Exact PWL of a ReLU net restricted to [lo, hi].
inline PwlFunction relu_net_to_pwl(const ReluNet1D& net, double lo, double hi) {
    require(lo < hi, codes::precondition, "domain must satisfy lo < hi");
    for (const auto& u : net.units)
        require(std::isfinite(u.a) && std::isfinite(u.b) && std::isfinite(u.c), codes::precondition,
                "relu net parameters must be finite");
    std::vector<double> t;
    for (const auto& u : net.units) {
        if (u.b == 0.0) continue;
        const double x = -u.c / u.b;
        if (x > lo && x < hi) t.push_back(x);
    }
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());

    std::vector<double> ends{lo};
    ends.insert(ends.end(), t.begin(), t.end());
    ends.push_back(hi);
    std::vector<double> slopes;
    for (std::size_t k = 0; k + 1 < ends.size(); ++k) {
        const double mid = 0.5 * (ends[k] + ends[k + 1]);
        double s = 0.0;
        for (const auto& u : net.units)
            if (u.b * mid + u.c > 0.0) s += u.a * u.b;
        slopes.push_back(s);
    }
    return PwlFunction(lo, hi, std::move(t), net(lo), std::move(slopes));
}

/// Width-B (or B+1 when the leftmost slope exceeds kSlopeTol) realization of a
/// canonical PWL: one unit max(x - β_j, 0) per breakpoint carrying the slope
/// increment, plus max(x - lo, 0) for the leftmost slope.
inline ReluNet1D pwl_to_relu_net(const PwlFunction& f) {
    ReluNet1D net;
    net.bias = f.left_value();
    const auto& s = f.slopes();
    // a leftmost slope below the canonical tolerance is treated as flat
    if (std::abs(s[0]) > kSlopeTol) net.units.push_back({s[0], 1.0, -f.lo()});
    for (std::size_t j = 0; j < f.breakpoints().size(); ++j)
        net.units.push_back({s[j + 1] - s[j], 1.0, -f.breakpoints()[j]});
    return net;
}

// ---------------------------------------------------------------------------
// Minimal-breakpoint fitting

struct Sample1D {
    double x;
    double y;
};

struct BreakpointFit {
    /// Certified lower bound: no continuous PWL with fewer breakpoints reaches
    /// the tolerance (every such function induces a segmentation into at most
    /// breakpoints+1 least-squares lines, which the DP already minimizes over).
    int breakpoints = 0;
    /// Breakpoints of `fit`, an explicit continuous PWL meeting the tolerance.
    int upper_breakpoints = 0;
    PwlFunction fit;
    double fit_mse = 0.0;
    bool exact() const noexcept { return breakpoints == upper_breakpoints; }
};

namespace detail {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;  // value at x = 0
};

inline LineFit least_squares_line(const std::vector<Sample1D>& s, std::size_t i, std::size_t j) {
    double mx = 0.0, my = 0.0;
    const double n = static_cast<double>(j - i + 1);
    for (std::size_t k = i; k <= j; ++k) {
        mx += s[k].x;
        my += s[k].y;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = i; k <= j; ++k) {
        sxx += (s[k].x - mx) * (s[k].x - mx);
        sxy += (s[k].x - mx) * (s[k].y - my);
    }
    LineFit f;
    f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    return f;
}

/// Least-squares continuous PWL with fixed interior knots (hinge basis).
inline PwlFunction fit_with_knots(const std::vector<Sample1D>& s, double lo, double hi,
                                  const std::vector<double>& knots) {
    const Index m = static_cast<Index>(s.size());
    const Index k = static_cast<Index>(knots.size());
    Matrix a(m, k + 2);
    Vector y(m);
    for (Index r = 0; r < m; ++r) {
        const double x = s[static_cast<std::size_t>(r)].x;
        a(r, 0) = 1.0;
        a(r, 1) = x - lo;
        for (Index j = 0; j < k; ++j) a(r, j + 2) = std::max(x - knots[static_cast<std::size_t>(j)], 0.0);
        y(r) = s[static_cast<std::size_t>(r)].y;
    }
    const Vector beta = a.colPivHouseholderQr().solve(y);
    std::vector<double> slopes{beta(1)};
    for (Index j = 0; j < k; ++j) slopes.push_back(slopes.back() + beta(j + 2));
    return PwlFunction(lo, hi, knots, beta(0), std::move(slopes));
}

inline double mse(const PwlFunction& f, const std::vector<Sample1D>& s) {
    double t = 0.0;
    for (const auto& p : s) t += (f.value(p.x) - p.y) * (f.value(p.x) - p.y);
    return t / static_cast<double>(s.size());
}

}  // namespace detail

/// Minimal breakpoint count for a continuous PWL fit with mean squared error
/// <= eps. Samples must be sorted by x (non-decreasing). Zero tolerance is
/// read as "collinear to 1e-12 relative to the data scale".
///
/// The DP runs over segmentations into k = 1, 2, ... contiguous groups, each
/// fitted by its own least-squares line; the first k whose total SSE meets the
/// budget gives the lower bound k - 1. For the upper bound, adjacent segment
/// lines are intersected to place knots and a continuous hinge-basis least
/// squares fit is checked against the same budget.
inline BreakpointFit minimal_breakpoints_fit(const std::vector<Sample1D>& samples, double eps) {
    require(!samples.empty(), codes::precondition, "need at least one sample");
    require(eps >= 0.0, codes::precondition, "eps must be >= 0");
    for (std::size_t i = 1; i < samples.size(); ++i)
        require(samples[i].x >= samples[i - 1].x, codes::precondition, "samples must be sorted by x");

    const std::size_t m = samples.size();
    double yscale = 0.0;
    for (const auto& p : samples) yscale = std::max(yscale, std::abs(p.y));
    const double mse_budget = eps + 1e-12 * (1.0 + yscale * yscale);
    const double sse_budget = mse_budget * static_cast<double>(m);

    double lo = samples.front().x, hi = samples.back().x;
    if (!(lo < hi)) hi = lo + 1.0;

    // cost(i, j): SSE of the least-squares line through samples i..j,
    // accumulated with centered (Welford) co-moments for stability.
    std::vector<double> cost(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double n = 0.0, mx = 0.0, my = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
        for (std::size_t j = i; j < m; ++j) {
            n += 1.0;
            const double dx = samples[j].x - mx, dy = samples[j].y - my;
            mx += dx / n;
            my += dy / n;
            sxx += dx * (samples[j].x - mx);
            sxy += dx * (samples[j].y - my);
            syy += dy * (samples[j].y - my);
            const double sse = sxx > 0.0 ? syy - sxy * sxy / sxx : syy;
            cost[i * m + j] = std::max(sse, 0.0);
        }
    }

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(m), cur(m);
    std::vector<std::vector<std::size_t>> back;  // back[k][j]: start of last segment
    for (std::size_t j = 0; j < m; ++j) prev[j] = cost[j];
    back.push_back(std::vector<std::size_t>(m, 0));

    BreakpointFit out;
    bool have_lower = false;
    for (std::size_t segs = 1; segs <= m; ++segs) {
        if (segs > 1) {
            std::vector<std::size_t> bk(m, 0);
            for (std::size_t j = 0; j < m; ++j) {
                cur[j] = inf;
                for (std::size_t i = segs - 1; i <= j; ++i) {
                    const double v = prev[i - 1] + cost[i * m + j];
                    if (v < cur[j]) {
                        cur[j] = v;
                        bk[j] = i;
                    }
                }
            }
            back.push_back(std::move(bk));
            std::swap(prev, cur);
        }
        if (prev[m - 1] > sse_budget) continue;
        if (!have_lower) {
            out.breakpoints = static_cast<int>(segs) - 1;
            have_lower = true;
        }

        // recover the segmentation and try a continuous fit with these knots
        std::vector<std::pair<std::size_t, std::size_t>> seg;
        std::size_t j = m - 1;
        for (std::size_t k = segs; k-- > 0;) {
            const std::size_t i = k == 0 ? 0 : back[k][j];
            seg.emplace_back(i, j);
            if (i == 0) break;
            j = i - 1;
        }
        std::reverse(seg.begin(), seg.end());
        std::vector<double> knots;
        for (std::size_t s = 0; s + 1 < seg.size(); ++s) {
            const auto l1 = detail::least_squares_line(samples, seg[s].first, seg[s].second);
            const auto l2 = detail::least_squares_line(samples, seg[s + 1].first, seg[s + 1].second);
            const double xa = samples[seg[s].second].x, xb = samples[seg[s + 1].first].x;
            double t = 0.5 * (xa + xb);
            if (std::abs(l1.slope - l2.slope) > kSlopeTol) {
                const double xi = (l2.intercept - l1.intercept) / (l1.slope - l2.slope);
                if (std::isfinite(xi)) t = std::clamp(xi, xa, xb);
            }
            if (t <= lo || t >= hi) continue;
            if (!knots.empty() && t <= knots.back()) continue;
            knots.push_back(t);
        }
        PwlFunction fit = detail::fit_with_knots(samples, lo, hi, knots);
        const double e = detail::mse(fit, samples);
        if (e <= mse_budget) {
            out.fit = std::move(fit);
            out.fit_mse = e;
            out.upper_breakpoints = out.fit.breakpoint_count();
            return out;
        }
    }

    // Fallback: interpolate the distinct abscissae (averaging repeated x).
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < m;) {
        std::size_t j = i;
        double sum = 0.0;
        while (j < m && samples[j].x == samples[i].x) sum += samples[j++].y;
        xs.push_back(samples[i].x);
        ys.push_back(sum / static_cast<double>(j - i));
        i = j;
    }
    if (xs.size() == 1) {
        out.fit = PwlFunction::affine(lo, hi, ys[0], 0.0);
    } else {
        out.fit = PwlFunction::through_points(xs, ys);
    }
    out.fit_mse = detail::mse(out.fit, samples);
    out.upper_breakpoints = out.fit.breakpoint_count();
    return out;
}

}  // namespace xmodal
