// bound_estimator.hpp
//
// Projected upper bounds on full-training accuracy from a learner's recent
// learning-curve points. All functions are pure.
#pragma once
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>

#include "core_model.hpp"

namespace daub {

struct CurvePoint {
    SampleCount n = 0;
    double val_acc = 0.0;
};

// Pairwise monotone repair: a drop between consecutive points is replaced by
// both values meeting at their mean.
inline std::pair<double, double> monotone_repair(double prev_val_acc, double cur_val_acc) {
    if (cur_val_acc >= prev_val_acc) return {prev_val_acc, cur_val_acc};
    const double mid = 0.5 * (prev_val_acc + cur_val_acc);
    return {mid, mid};
}

// Ordinary least-squares slope through three points.
inline double regression_slope(const std::array<CurvePoint, 3>& pts) {
    for (std::size_t k = 1; k < pts.size(); ++k)
        if (pts[k].n <= pts[k - 1].n)
            throw DomainError("regression_slope: abscissae must be strictly increasing");
    // Accuracies are taken relative to the first point so that a flat curve
    // gives a slope of exactly zero.
    const double y0 = pts[0].val_acc;
    double mx = 0.0, my = 0.0;
    for (const auto& p : pts) {
        mx += static_cast<double>(p.n);
        my += p.val_acc - y0;
    }
    mx /= 3.0;
    my /= 3.0;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& p : pts) {
        const double dx = static_cast<double>(p.n) - mx;
        sxx += dx * dx;
        sxy += dx * ((p.val_acc - y0) - my);
    }
    return sxy / sxx;
}

// Linear projection of the current validation accuracy out to N. Not clamped.
inline double projected_bound(double val_acc_at_n, double slope, SampleCount n, SampleCount N) {
    if (n < 0 || n > N) throw DomainError("projected_bound: need 0 <= n <= N");
    return val_acc_at_n + static_cast<double>(N - n) * slope;
}

inline double combined_bound(double train_acc_at_n, double projected) {
    return std::min(train_acc_at_n, projected);
}

// Keeps a learner's bound stream non-increasing. Pass +inf for the first bound.
inline double clamp_nonincreasing(double previous_bound, double new_bound) {
    return std::min(previous_bound, new_bound);
}

inline constexpr double kNoBound = std::numeric_limits<double>::infinity();

// One-sided discrete derivative (f(n) - f(n-s)) / s of an exact curve.
template <typename F>
double ideal_derivative(const F& f, SampleCount n, SampleCount s) {
    if (s < 1) throw DomainError("ideal_derivative: s must be >= 1");
    if (n - s < 1) throw DomainError("ideal_derivative: need n - s >= 1");
    return (f(n) - f(n - s)) / static_cast<double>(s);
}

}  // namespace daub
