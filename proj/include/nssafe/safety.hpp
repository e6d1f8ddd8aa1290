#pragma once

#include <cmath>
#include <vector>

#include "nssafe/box.hpp"
#include "nssafe/ir.hpp"

namespace nssafe {

// Euclidean distance from a point to the nearest safe box; exactly 0 inside.
double unsafe_point(const std::vector<double>& values, const SafeSet& safe);

namespace detail {

// Distance from box v to safe box b: L2 over per-axis clamped gaps.
template <class S>
S box_to_box_distance(const Box<S>& v, const SafeBox& b) {
    S zero = s_const_like(v.center[0], 0.0);
    S sum = zero;
    for (std::size_t i = 0; i < v.dim(); ++i) {
        S lo = s_sub(v.center[i], v.dev[i]);
        S hi = s_add(v.center[i], v.dev[i]);
        S gap_below = s_sub(s_const_like(lo, b.ranges[i].lo), hi);  // b starts above v
        S gap_above = s_sub(lo, s_const_like(lo, b.ranges[i].hi));  // v starts above b
        S gap = s_max(s_max(gap_below, gap_above), zero);
        sum = s_add(sum, s_mul(gap, gap));
    }
    return s_sqrt(sum);
}

// Per-axis overlap length between v's axis interval and range, with the
// counting-measure convention on degenerate axes (factor 1 or 0).
template <class S>
S axis_overlap(const Box<S>& v, std::size_t i, const Interval& range, bool degenerate) {
    if (degenerate) {
        double point = s_primal(v.center[i]);
        return s_const_like(v.center[i], range.contains(point) ? 1.0 : 0.0);
    }
    S lo = s_sub(v.center[i], v.dev[i]);
    S hi = s_add(v.center[i], v.dev[i]);
    S ov = s_sub(s_min(hi, s_const_like(hi, range.hi)), s_max(lo, s_const_like(lo, range.lo)));
    return s_max(ov, s_const_like(ov, 0.0));
}

}  // namespace detail

// Unsafe(sigma) over a box restricted to the asserted variables:
//   disjoint from every safe box  ->  distance to the safe set + 1
//   otherwise                     ->  1 - Vol(V /\ A) / Vol(V)
// Degenerate axes use counting measure on both sides of the ratio. The
// branch is picked on primal values; both sides are built differentiably.
template <class S>
S unsafe_box(const Box<S>& v, const SafeSet& safe) {
    if (v.dim() != safe.dim()) throw ShapeError("unsafe_box dimension mismatch");

    std::vector<bool> degenerate(v.dim());
    for (std::size_t i = 0; i < v.dim(); ++i)
        degenerate[i] = !(s_primal(v.dev[i]) > 0.0);

    bool any_overlap = false;
    for (const SafeBox& b : safe.boxes) {
        bool hit = true;
        for (std::size_t i = 0; i < v.dim(); ++i) {
            Interval vi = v.interval_of(i);
            if (vi.hi < b.ranges[i].lo || vi.lo > b.ranges[i].hi) {
                hit = false;
                break;
            }
        }
        if (hit) {
            any_overlap = true;
            break;
        }
    }

    if (!any_overlap) {
        S dist = detail::box_to_box_distance(v, safe.boxes[0]);
        for (std::size_t b = 1; b < safe.boxes.size(); ++b)
            dist = s_min(dist, detail::box_to_box_distance(v, safe.boxes[b]));
        return s_add(dist, s_const_like(dist, 1.0));
    }

    S vol_v = s_const_like(v.center[0], 1.0);
    for (std::size_t i = 0; i < v.dim(); ++i) {
        if (degenerate[i]) continue;  // counting measure: factor 1
        S len = s_add(v.dev[i], v.dev[i]);
        vol_v = s_mul(vol_v, len);
    }

    // Disjointness of the safe boxes makes the sum of overlaps exact.
    S vol_meet = s_const_like(v.center[0], 0.0);
    for (const SafeBox& b : safe.boxes) {
        S part = s_const_like(v.center[0], 1.0);
        for (std::size_t i = 0; i < v.dim(); ++i)
            part = s_mul(part, detail::axis_overlap(v, i, b.ranges[i], degenerate[i]));
        vol_meet = s_add(vol_meet, part);
    }

    S ratio = s_div(vol_meet, vol_v);
    return s_relu(s_sub(s_const_like(ratio, 1.0), ratio));
}

// Per-trajectory loss: sum of the per-assert unsafety terms.
template <class S>
S sum_terms(const std::vector<S>& terms, S zero) {
    S acc = zero;
    for (const S& t : terms) acc = s_add(acc, t);
    return acc;
}

}  // namespace nssafe
