#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "wvar/transport.hpp"

namespace wvar::testing {

inline DiscreteMeasure random_measure(std::mt19937& rng, std::size_t atoms, std::size_t dim,
                                      bool equal_weights = false, double lo = 0.0,
                                      double hi = 1.0) {
    std::uniform_real_distribution<double> pos(lo, hi);
    std::uniform_real_distribution<double> wdist(0.1, 1.0);
    std::vector<TorusPoint> pts;
    std::vector<double> w(atoms);
    for (std::size_t k = 0; k < atoms; ++k) {
        Vec x(dim);
        for (double& c : x) c = pos(rng);
        pts.emplace_back(x);
        w[k] = equal_weights ? 1.0 : wdist(rng);
    }
    double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x /= total;
    return DiscreteMeasure(std::move(pts), std::move(w));
}

/// Exhaustive matching oracle for equal-weight measures with N == M atoms:
/// min over all N! permutations of (sum (1/N) d(x_k, y_{s(k)})^q)^{1/q}.
inline double brute_force_matching_cost(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                        double q) {
    const std::size_t n = mu.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            s += mu.weights[k] * std::pow(torus_distance(mu.points[k], nu.points[perm[k]]), q);
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::pow(best, 1.0 / q);
}

}  // namespace wvar::testing
