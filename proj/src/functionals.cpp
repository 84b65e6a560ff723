#include "wvar/functionals.hpp"

#include <cmath>
#include <numbers>

namespace wvar {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// U(mu) = int phi dmu for a scalar phi on the first coordinate.
Functional make_linear(const std::string& tag, const std::function<double(double)>& phi,
                       const std::function<double(double)>& dphi) {
    Functional F;
    F.name = "linear:" + tag;
    F.evaluate = [phi](const DiscreteMeasure& mu) {
        double s = 0.0;
        for (std::size_t k = 0; k < mu.size(); ++k) s += mu.weights[k] * phi(mu.points[k][0]);
        return s;
    };
    F.closed_gradient = [dphi](const DiscreteMeasure& mu) {
        std::vector<Vec> vals(mu.size(), Vec(mu.dim(), 0.0));
        for (std::size_t k = 0; k < mu.size(); ++k) vals[k][0] = dphi(mu.points[k][0]);
        return Covector(mu, std::move(vals));
    };
    F.flat_derivative = [phi](const DiscreteMeasure&, const TorusPoint& y) { return phi(y[0]); };
    return F;
}

double interaction_kernel(const Vec& z) {
    double s = 0.0;
    for (double zi : z) s += std::cos(kTwoPi * zi);
    return s / static_cast<double>(z.size());
}

Vec interaction_kernel_grad(const Vec& z) {
    Vec g(z.size());
    for (std::size_t i = 0; i < z.size(); ++i)
        g[i] = -kTwoPi * std::sin(kTwoPi * z[i]) / static_cast<double>(z.size());
    return g;
}

Functional make_interaction_cos() {
    Functional F;
    F.name = "interaction:cos";
    F.evaluate = [](const DiscreteMeasure& mu) {
        double s = 0.0;
        for (std::size_t i = 0; i < mu.size(); ++i)
            for (std::size_t j = 0; j < mu.size(); ++j)
                s += mu.weights[i] * mu.weights[j] *
                     interaction_kernel(wrapped_delta(mu.points[j], mu.points[i]));
        return s;
    };
    // delta U / delta m (y) = 2 int W(y - x) dm(x)  (W is even)
    F.flat_derivative = [](const DiscreteMeasure& m, const TorusPoint& y) {
        double s = 0.0;
        for (std::size_t k = 0; k < m.size(); ++k)
            s += m.weights[k] * interaction_kernel(wrapped_delta(m.points[k], y));
        return 2.0 * s;
    };
    F.closed_gradient = [](const DiscreteMeasure& m) {
        std::vector<Vec> vals(m.size());
        for (std::size_t k = 0; k < m.size(); ++k) {
            Vec g(m.dim(), 0.0);
            for (std::size_t j = 0; j < m.size(); ++j) {
                Vec gg = interaction_kernel_grad(wrapped_delta(m.points[j], m.points[k]));
                for (std::size_t a = 0; a < g.size(); ++a) g[a] += 2.0 * m.weights[j] * gg[a];
            }
            vals[k] = g;
        }
        return Covector(m, std::move(vals));
    };
    return F;
}

Functional make_variance() {
    Functional F;
    F.name = "variance";
    auto mean = [](const DiscreteMeasure& mu) {
        Vec b(mu.dim(), 0.0);
        for (std::size_t k = 0; k < mu.size(); ++k)
            for (std::size_t a = 0; a < mu.dim(); ++a) b[a] += mu.weights[k] * mu.points[k][a];
        return b;
    };
    F.evaluate = [mean](const DiscreteMeasure& mu) {
        Vec b = mean(mu);
        return second_moment(mu) - dot(b, b);
    };
    F.flat_derivative = [mean](const DiscreteMeasure& m, const TorusPoint& y) {
        Vec b = mean(m);
        double yy = 0.0, by = 0.0;
        for (std::size_t a = 0; a < y.dim(); ++a) {
            yy += y[a] * y[a];
            by += b[a] * y[a];
        }
        return yy - 2.0 * by;
    };
    F.closed_gradient = [mean](const DiscreteMeasure& m) {
        Vec b = mean(m);
        std::vector<Vec> vals(m.size());
        for (std::size_t k = 0; k < m.size(); ++k) {
            Vec v(m.dim());
            for (std::size_t a = 0; a < m.dim(); ++a) v[a] = 2.0 * (m.points[k][a] - b[a]);
            vals[k] = v;
        }
        return Covector(m, std::move(vals));
    };
    return F;
}

}  // namespace

Functional builtin(const std::string& name) {
    if (name == "linear:sin")
        return make_linear(
            "sin", [](double x) { return std::sin(kTwoPi * x); },
            [](double x) { return kTwoPi * std::cos(kTwoPi * x); });
    if (name == "linear:cos")
        return make_linear(
            "cos", [](double x) { return std::cos(kTwoPi * x); },
            [](double x) { return -kTwoPi * std::sin(kTwoPi * x); });
    if (name == "potential2") {
        Functional F = make_linear(
            "", [](double x) { double s = std::sin(kTwoPi * x); return s * s; },
            [](double x) { return kTwoPi * std::sin(2.0 * kTwoPi * x); });
        F.name = "potential2";
        return F;
    }
    if (name == "interaction:cos") return make_interaction_cos();
    if (name == "variance") return make_variance();
    throw std::invalid_argument("builtin: unknown functional '" + name + "'");
}

double raw_flat_quotient(const Functional& U, const DiscreteMeasure& m, const TorusPoint& y,
                         double s) {
    if (!(s > 0.0) || s > 1e-2)
        throw std::invalid_argument("flat quotient: s must lie in (0, 1e-2]");
    std::vector<TorusPoint> pts = m.points;
    pts.push_back(y);
    std::vector<double> w(m.size() + 1);
    for (std::size_t k = 0; k < m.size(); ++k) w[k] = (1.0 - s) * m.weights[k];
    w.back() = s;
    DiscreteMeasure mix(std::move(pts), std::move(w));
    return (U.evaluate(mix) - U.evaluate(m)) / s;
}

double numeric_flat_derivative(const Functional& U, const DiscreteMeasure& m, const TorusPoint& y,
                               double s) {
    double avg = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k)
        avg += m.weights[k] * raw_flat_quotient(U, m, m.points[k], s);
    return raw_flat_quotient(U, m, y, s) - avg;
}

}  // namespace wvar
