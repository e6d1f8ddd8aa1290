#pragma once

#include <optional>
#include <vector>

#include "nssafe/errors.hpp"
#include "nssafe/tape.hpp"

namespace nssafe {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double length() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
    bool contains(double x) const { return lo <= x && x <= hi; }
};

// Length of v ∩ a. A zero-length v degrades to counting measure: 1 if the
// point lies in a, else 0, so unsafety stays consistent with the pointwise
// definition on degenerate boxes.
double interval_overlap_volume(const Interval& v, const Interval& a);

// Axis-aligned box as center/deviation pairs over scalars S (double for
// primal-only runs, TapeVal during training). Deviations are non-negative;
// dimension i concretizes to [c_i - e_i, c_i + e_i].
template <class S>
struct Box {
    std::vector<S> center;
    std::vector<S> dev;

    std::size_t dim() const { return center.size(); }

    Interval interval_of(std::size_t i) const {
        double c = s_primal(center[i]);
        double e = s_primal(dev[i]);
        return Interval{c - e, c + e};
    }
};

template <class S>
struct GuardSplit {
    S prob_true;
    std::optional<Box<S>> box_true;
    std::optional<Box<S>> box_false;
};

// --- transformers ------------------------------------------------------

// center' = M c + bias, dev' = |M| e. M is row-major m' x m.
template <class S, class W>
Box<S> abstract_affine(const Box<S>& b, const std::vector<W>& m_rows, std::size_t out_dim,
                       const std::vector<W>& bias) {
    std::size_t in_dim = b.dim();
    if (m_rows.size() != out_dim * in_dim || bias.size() != out_dim)
        throw ShapeError("abstract_affine shape mismatch");
    Box<S> out;
    out.center.reserve(out_dim);
    out.dev.reserve(out_dim);
    for (std::size_t r = 0; r < out_dim; ++r) {
        S c = s_mul(b.center[0], m_rows[r * in_dim]);
        S e = s_mul(b.dev[0], s_abs(m_rows[r * in_dim]));
        for (std::size_t j = 1; j < in_dim; ++j) {
            c = s_add(c, s_mul(b.center[j], m_rows[r * in_dim + j]));
            e = s_add(e, s_mul(b.dev[j], s_abs(m_rows[r * in_dim + j])));
        }
        c = s_add(c, bias[r]);
        out.center.push_back(c);
        out.dev.push_back(e);
    }
    return out;
}

inline Box<double> abstract_affine(const Box<double>& b, const std::vector<double>& m_rows,
                                   std::size_t out_dim, const std::vector<double>& bias) {
    return abstract_affine<double, double>(b, m_rows, out_dim, bias);
}

// Monotone elementwise maps share one endpoint construction:
// center' = (f(c+e) + f(c-e))/2, dev' = (f(c+e) - f(c-e))/2.
template <class S, class F>
void monotone_axis(S& c, S& e, F&& f) {
    S hi = f(s_add(c, e));
    S lo = f(s_sub(c, e));
    S half = s_const_like(c, 0.5);
    c = s_mul(s_add(hi, lo), half);
    e = s_mul(s_sub(hi, lo), half);
}

enum class AxisMap { relu, sigmoid, abs, min_const, max_const, square };

// Applies one whitelisted nonlinearity to a single axis in place.
template <class S>
void apply_axis_map(Box<S>& b, std::size_t axis, AxisMap kind, double arg = 0.0) {
    S& c = b.center[axis];
    S& e = b.dev[axis];
    switch (kind) {
        case AxisMap::relu:
            monotone_axis(c, e, [](S x) { return s_relu(x); });
            break;
        case AxisMap::sigmoid:
            monotone_axis(c, e, [](S x) { return s_sigmoid(x); });
            break;
        case AxisMap::min_const: {
            S k = s_const_like(c, arg);
            monotone_axis(c, e, [&](S x) { return s_min(x, k); });
            break;
        }
        case AxisMap::max_const: {
            S k = s_const_like(c, arg);
            monotone_axis(c, e, [&](S x) { return s_max(x, k); });
            break;
        }
        case AxisMap::abs: {
            // |[lo,hi]| = [max(lo, -hi, 0), max(-lo, hi)].
            S lo = s_sub(c, e);
            S hi = s_add(c, e);
            S zero = s_const_like(c, 0.0);
            S nlo = s_max(s_max(lo, s_neg(hi)), zero);
            S nhi = s_max(s_neg(lo), hi);
            S half = s_const_like(c, 0.5);
            c = s_mul(s_add(nhi, nlo), half);
            e = s_mul(s_sub(nhi, nlo), half);
            break;
        }
        case AxisMap::square: {
            // x^2 over [lo,hi] = [m^2, M^2] with m = max(lo,-hi,0), M = max(-lo,hi).
            S lo = s_sub(c, e);
            S hi = s_add(c, e);
            S zero = s_const_like(c, 0.0);
            S m = s_max(s_max(lo, s_neg(hi)), zero);
            S M = s_max(s_neg(lo), hi);
            S nlo = s_mul(m, m);
            S nhi = s_mul(M, M);
            S half = s_const_like(c, 0.5);
            c = s_mul(s_add(nhi, nlo), half);
            e = s_mul(s_sub(nhi, nlo), half);
            break;
        }
    }
}

template <class S>
Box<S> abstract_relu(const Box<S>& b) {
    Box<S> out = b;
    for (std::size_t i = 0; i < out.dim(); ++i) apply_axis_map(out, i, AxisMap::relu);
    return out;
}

template <class S>
Box<S> abstract_sigmoid(const Box<S>& b) {
    Box<S> out = b;
    for (std::size_t i = 0; i < out.dim(); ++i) apply_axis_map(out, i, AxisMap::sigmoid);
    return out;
}

// Per-axis interval hull of two boxes, built from min/max so it stays
// differentiable where the choice of endpoint is locally stable.
template <class S>
Box<S> box_join(const Box<S>& a, const Box<S>& b) {
    if (a.dim() != b.dim()) throw ShapeError("box_join dimension mismatch");
    Box<S> out;
    out.center.reserve(a.dim());
    out.dev.reserve(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) {
        S lo = s_min(s_sub(a.center[i], a.dev[i]), s_sub(b.center[i], b.dev[i]));
        S hi = s_max(s_add(a.center[i], a.dev[i]), s_add(b.center[i], b.dev[i]));
        S half = s_const_like(lo, 0.5);
        out.center.push_back(s_mul(s_add(hi, lo), half));
        out.dev.push_back(s_mul(s_sub(hi, lo), half));
    }
    return out;
}

// Volume-based split of `b` along `axis` at `threshold`. prob_true is the
// fraction of the axis interval at or below the threshold, built from the
// center/deviation scalars so gradients flow into whatever produced them.
// A degenerate (point) interval forces probability 0 or 1 with no gradient.
template <class S>
GuardSplit<S> guard_split(const Box<S>& b, std::size_t axis, double threshold) {
    if (axis >= b.dim()) throw ShapeError("guard_split axis out of range");
    const S& c = b.center[axis];
    const S& e = b.dev[axis];
    double lo = s_primal(c) - s_primal(e);
    double hi = s_primal(c) + s_primal(e);

    GuardSplit<S> out{s_const_like(c, 0.0), std::nullopt, std::nullopt};
    if (hi <= lo) {  // point interval
        out.prob_true = s_const_like(c, lo <= threshold ? 1.0 : 0.0);
        if (lo <= threshold) out.box_true = b;
        else out.box_false = b;
        return out;
    }

    S lo_s = s_sub(c, e);
    S hi_s = s_add(c, e);
    S thr = s_const_like(c, threshold);
    S ratio = s_div(s_sub(thr, lo_s), s_sub(hi_s, lo_s));
    out.prob_true = s_clamp01(ratio);
    double p = s_primal(out.prob_true);

    S half = s_const_like(c, 0.5);
    if (p > 0.0) {
        Box<S> t = b;
        S new_hi = s_min(hi_s, thr);
        t.center[axis] = s_mul(s_add(new_hi, lo_s), half);
        t.dev[axis] = s_mul(s_sub(new_hi, lo_s), half);
        out.box_true = std::move(t);
    }
    if (p < 1.0) {
        Box<S> f = b;
        S new_lo = s_max(lo_s, thr);
        f.center[axis] = s_mul(s_add(hi_s, new_lo), half);
        f.dev[axis] = s_mul(s_sub(hi_s, new_lo), half);
        out.box_false = std::move(f);
    }
    return out;
}

}  // namespace nssafe
