#include "wvar/torus.hpp"

#include <algorithm>

namespace wvar {

double wrap_unit(double x) {
    double r = x - std::floor(x);
    if (r >= 1.0) r -= 1.0;  // floor rounding at the seam
    if (r < 0.0) r += 1.0;
    return r;
}

TorusPoint::TorusPoint(Vec coords) : c(std::move(coords)) {
    for (double& v : c) {
        if (!std::isfinite(v)) throw std::invalid_argument("TorusPoint: non-finite coordinate");
        v = wrap_unit(v);
    }
}

TorusPoint wrap(const Vec& lifted) { return TorusPoint(lifted); }

double torus_distance(const TorusPoint& a, const TorusPoint& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("torus_distance: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        double d = std::fabs(a.c[i] - b.c[i]);
        d = std::min(d, 1.0 - d);
        s += d * d;
    }
    return std::sqrt(s);
}

Vec wrapped_delta(const TorusPoint& a, const TorusPoint& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("wrapped_delta: dimension mismatch");
    Vec d(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) {
        double v = b.c[i] - a.c[i];
        if (v > 0.5) v -= 1.0;
        if (v <= -0.5) v += 1.0;
        d[i] = v;
    }
    return d;
}

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

Vec axpy(double alpha, const Vec& x, const Vec& y) {
    Vec r(y);
    for (std::size_t i = 0; i < x.size(); ++i) r[i] += alpha * x[i];
    return r;
}

Vec scaled(double alpha, const Vec& x) {
    Vec r(x);
    for (double& v : r) v *= alpha;
    return r;
}

}  // namespace wvar
