#pragma once

// Piecewise-linear over-approximation of y^2 on [-bound, bound] with equal
// segments, in the split-variable form used by the linearized model: the
// magnitude |y| is spread over segment fill variables, each priced at the
// chord slope of its segment. Greedy (in-order) fill is the canonical
// decomposition and yields the pointwise-minimal approximation.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "network.hpp"

namespace lpp {

struct PwlSpec {
    double bound = 1.0;  // half-width of the approximation interval
    int lambda = 1;      // number of segments per axis
};

struct PwlDecomposition {
    double y_plus = 0.0;
    double y_minus = 0.0;
    std::vector<double> deltas;  // per-segment fill, lambda entries
    double value = 0.0;          // sum of slope * fill
    bool clamped = false;        // |y| marginally above the bound was pulled back
};

// |y| may poke past the bound by at most this relative slack before it is an
// error instead of a clamp.
inline constexpr double pwl_clamp_slack = 1e-9;

inline void pwl_check_spec(const PwlSpec& spec, const char* who) {
    if (spec.lambda < 1) throw Error(std::string(who) + ": segment count must be >= 1");
    if (!(spec.bound > 0.0) || !std::isfinite(spec.bound))
        throw Error(std::string(who) + ": bound must be positive and finite");
}

/// Chord slope of every segment, ascending: (2*k - 1) * bound / lambda.
inline std::vector<double> pwl_slopes(const PwlSpec& spec) {
    pwl_check_spec(spec, "pwl_slopes");
    const double width = spec.bound / spec.lambda;
    std::vector<double> slopes(static_cast<std::size_t>(spec.lambda));
    for (int k = 1; k <= spec.lambda; ++k)
        slopes[static_cast<std::size_t>(k - 1)] = (2.0 * k - 1.0) * width;
    return slopes;
}

/// Largest over-approximation error of the canonical fill: (width/2)^2 at
/// segment midpoints.
inline double pwl_max_gap(const PwlSpec& spec) {
    pwl_check_spec(spec, "pwl_max_gap");
    const double width = spec.bound / spec.lambda;
    return width * width / 4.0;
}

/// Canonical greedy decomposition of y: magnitude split over segments in
/// slope order, exactly one partially filled segment.
inline PwlDecomposition pwl_decompose(double y, const PwlSpec& spec) {
    pwl_check_spec(spec, "pwl_decompose");
    PwlDecomposition d;
    double a = std::fabs(y);
    if (a > spec.bound) {
        if (a <= spec.bound * (1.0 + pwl_clamp_slack)) {
            a = spec.bound;
            d.clamped = true;
        } else {
            throw Error("pwl_decompose: |y| exceeds the bound");
        }
    }
    const double width = spec.bound / spec.lambda;
    int k = static_cast<int>(std::floor(a / width));
    if (k > spec.lambda - 1) k = spec.lambda - 1;
    while (k > 0 && a < k * width) --k;
    d.deltas.assign(static_cast<std::size_t>(spec.lambda), 0.0);
    for (int i = 0; i < k; ++i) d.deltas[static_cast<std::size_t>(i)] = width;
    double partial = a - k * width;
    if (partial < 0.0) partial = 0.0;
    if (partial > width) partial = width;
    d.deltas[static_cast<std::size_t>(k)] = partial;
    if (y >= 0.0) {
        d.y_plus = a;
    } else {
        d.y_minus = a;
    }
    const auto slopes = pwl_slopes(spec);
    double v = 0.0;
    for (std::size_t i = 0; i < slopes.size(); ++i) v += slopes[i] * d.deltas[i];
    d.value = v;
    return d;
}

/// Canonical approximation value for y^2; exact at segment breakpoints.
inline double pwl_eval(double y, const PwlSpec& spec) {
    return pwl_decompose(y, spec).value;
}

/// Inverse of pwl_eval on [0, bound]: the magnitude whose canonical value is
/// `target`. Needed to re-decompose a previous solution inside a tightened
/// model while conserving its coupled current value.
inline double pwl_inverse(double target, const PwlSpec& spec) {
    pwl_check_spec(spec, "pwl_inverse");
    const double top = spec.bound * spec.bound;
    if (target < 0.0) {
        if (target < -pwl_clamp_slack * top) throw Error("pwl_inverse: negative target");
        return 0.0;
    }
    if (target > top) {
        if (target > top * (1.0 + pwl_clamp_slack)) throw Error("pwl_inverse: target above bound^2");
        return spec.bound;
    }
    const double width = spec.bound / spec.lambda;
    int k = static_cast<int>(std::floor(std::sqrt(target) / width));
    if (k > spec.lambda - 1) k = spec.lambda - 1;
    while (k > 0 && target < (k * width) * (k * width)) --k;
    // On segment k the value climbs linearly from (k*width)^2 at slope (2k+1)*width.
    double s = k * width + (target - (k * width) * (k * width)) / ((2.0 * k + 1.0) * width);
    if (s > spec.bound) s = spec.bound;
    if (s < 0.0) s = 0.0;
    return s;
}

}  // namespace lpp
