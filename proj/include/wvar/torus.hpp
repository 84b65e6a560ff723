#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace wvar {

using Vec = std::vector<double>;

/// Point on the unit torus T^d; every coordinate is kept in [0,1).
struct TorusPoint {
    Vec c;

    TorusPoint() = default;
    explicit TorusPoint(Vec coords);

    std::size_t dim() const { return c.size(); }
    double operator[](std::size_t i) const { return c[i]; }
};

/// Reduce a scalar to [0,1).
double wrap_unit(double x);

/// Reduce a lifted point to the torus.
TorusPoint wrap(const Vec& lifted);

/// Geodesic distance on T^d: Euclidean norm of the coordinatewise
/// shorter-arc differences.
double torus_distance(const TorusPoint& a, const TorusPoint& b);

/// Representative of b - a in the window (-1/2, 1/2]^d around a.
/// This is the chart used for all displacement pairings.
Vec wrapped_delta(const TorusPoint& a, const TorusPoint& b);

// small dense-vector helpers
double dot(const Vec& a, const Vec& b);
double norm2(const Vec& a);
Vec axpy(double alpha, const Vec& x, const Vec& y);  // alpha*x + y
Vec scaled(double alpha, const Vec& x);

}  // namespace wvar
