#pragma once

#include "robustcurve/breaks.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace oracle {

/// Optimal penalized segmentation by the O(T^2) recursion without pruning.
/// Segments hold at least `min_size` points; ties keep the smallest last
/// changepoint.
inline std::vector<std::size_t> exhaustive_segmentation(const robustcurve::breaks::RbfCost& cost, double penalty,
                                                        std::size_t min_size) {
    const std::size_t n = cost.size();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> f(n + 1, inf);
    std::vector<std::size_t> last(n + 1, 0);
    f[0] = 0.0;
    for (std::size_t t = min_size; t <= n; ++t) {
        for (std::size_t tau = 0; tau + min_size <= t; ++tau) {
            if (tau != 0 && tau < min_size) continue;
            if (!std::isfinite(f[tau])) continue;
            const double v = f[tau] + cost(tau, t) + penalty;
            if (v < f[t]) {
                f[t] = v;
                last[t] = tau;
            }
        }
    }
    std::vector<std::size_t> starts;
    for (std::size_t t = n; t > 0; t = last[t]) {
        if (last[t] > 0) starts.push_back(last[t]);
    }
    std::reverse(starts.begin(), starts.end());
    return starts;
}

}  // namespace oracle
