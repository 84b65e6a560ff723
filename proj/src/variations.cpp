#include "wvar/variations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wvar {

TrajectoryEnsemble::TrajectoryEnsemble(DiscreteMeasure b, std::vector<double> t,
                                       std::vector<std::vector<Vec>> p)
    : base(std::move(b)), times(std::move(t)), paths(std::move(p)) {
    if (times.size() < 2) throw std::invalid_argument("TrajectoryEnsemble: need >= 2 grid times");
    for (std::size_t i = 0; i + 1 < times.size(); ++i)
        if (times[i + 1] <= times[i])
            throw std::invalid_argument("TrajectoryEnsemble: time grid not increasing");
    if (paths.size() != base.size())
        throw std::invalid_argument("TrajectoryEnsemble: path count does not match base atoms");
    for (std::size_t k = 0; k < paths.size(); ++k) {
        if (paths[k].size() != times.size())
            throw std::invalid_argument("TrajectoryEnsemble: path sample count mismatch");
        if (torus_distance(wrap(paths[k].front()), base.points[k]) > 1e-12)
            throw std::invalid_argument("TrajectoryEnsemble: path start does not match base atom");
    }
}

Vec TrajectoryEnsemble::position_lift(std::size_t k, double t) const {
    if (t < times.front() - 1e-12 || t > times.back() + 1e-12)
        throw std::out_of_range("TrajectoryEnsemble: time outside grid span");
    t = std::clamp(t, times.front(), times.back());
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t hi = std::min<std::size_t>(it - times.begin(), times.size() - 1);
    if (hi == 0) hi = 1;
    std::size_t lo = hi - 1;
    double lam = (t - times[lo]) / (times[hi] - times[lo]);
    Vec out(paths[k][lo].size());
    for (std::size_t a = 0; a < out.size(); ++a)
        out[a] = (1.0 - lam) * paths[k][lo][a] + lam * paths[k][hi][a];
    return out;
}

DiscreteMeasure TrajectoryEnsemble::at_time(double t) const {
    std::vector<TorusPoint> pts;
    pts.reserve(base.size());
    for (std::size_t k = 0; k < base.size(); ++k) pts.push_back(wrap(position_lift(k, t)));
    return DiscreteMeasure(std::move(pts), base.weights);
}

std::string kind_name(VariationKind k) {
    switch (k) {
        case VariationKind::transport_map: return "transport_map";
        case VariationKind::flat: return "flat";
        case VariationKind::lagrangian: return "lagrangian";
        case VariationKind::eulerian: return "eulerian";
    }
    return "unknown";
}

TransportPlan VariationFamily::evaluate(double t) const {
    if (t < 0.0 || t > horizon + 1e-12)
        throw std::out_of_range("VariationFamily: t outside [0, horizon]");
    return eval(std::min(t, horizon));
}

VariationFamily make_transport_map_variation(const DiscreteMeasure& mu, const Covector& phi,
                                             double T) {
    if (T <= 0.0) throw std::invalid_argument("make_transport_map_variation: horizon must be > 0");
    if (!same_marginal(phi.base, mu))
        throw std::invalid_argument("make_transport_map_variation: covector base mismatch");
    VariationFamily f;
    f.base = mu;
    f.kind = VariationKind::transport_map;
    f.horizon = T;
    f.eval = [mu, phi](double t) {
        std::vector<TorusPoint> targets;
        targets.reserve(mu.size());
        for (std::size_t k = 0; k < mu.size(); ++k)
            targets.push_back(wrap(axpy(t, phi.values[k], mu.points[k].c)));
        return map_plan(mu, std::move(targets));
    };
    return f;
}

VariationFamily make_flat_variation(const TransportPlan& pi, double T) {
    if (T <= 0.0 || T > 1.0)
        throw std::invalid_argument("make_flat_variation: horizon must lie in (0, 1]");
    VariationFamily f;
    f.base = pi.source;
    f.kind = VariationKind::flat;
    f.horizon = T;
    f.eval = [pi](double t) {
        const DiscreteMeasure& mu = pi.source;
        const std::size_t n = mu.size(), m = pi.cols();
        // target atoms: mu's atoms (diagonal part) followed by pi's targets
        std::vector<TorusPoint> tpts = mu.points;
        tpts.insert(tpts.end(), pi.target.points.begin(), pi.target.points.end());
        std::vector<double> tw(n + m);
        for (std::size_t k = 0; k < n; ++k) tw[k] = (1.0 - t) * mu.weights[k];
        for (std::size_t j = 0; j < m; ++j) tw[n + j] = t * pi.target.weights[j];
        DiscreteMeasure nu(std::move(tpts), std::move(tw));
        std::vector<double> c(n * (n + m), 0.0);
        for (std::size_t k = 0; k < n; ++k) c[k * (n + m) + k] = (1.0 - t) * mu.weights[k];
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t j = 0; j < m; ++j) c[k * (n + m) + n + j] = t * pi.at(k, j);
        return TransportPlan(mu, std::move(nu), std::move(c));
    };
    return f;
}

VariationFamily make_lagrangian_variation(const TrajectoryEnsemble& eta, double T) {
    if (T <= 0.0 || T > eta.horizon() + 1e-12)
        throw std::invalid_argument("make_lagrangian_variation: horizon outside path grid");
    if (std::fabs(eta.times.front()) > 1e-12)
        throw std::invalid_argument("make_lagrangian_variation: path grid must start at 0");
    VariationFamily f;
    f.base = eta.base;
    f.kind = VariationKind::lagrangian;
    f.horizon = std::min(T, eta.horizon());
    f.eval = [eta](double t) {
        std::vector<TorusPoint> targets;
        targets.reserve(eta.base.size());
        for (std::size_t k = 0; k < eta.base.size(); ++k)
            targets.push_back(wrap(eta.position_lift(k, t)));
        return map_plan(eta.base, std::move(targets));
    };
    return f;
}

TrajectoryEnsemble integrate_velocity_field(const DiscreteMeasure& mu, const VelocityField& v,
                                            double T, std::size_t steps) {
    if (T <= 0.0 || steps == 0)
        throw std::invalid_argument("integrate_velocity_field: need T > 0 and steps >= 1");
    const double h = T / static_cast<double>(steps);
    std::vector<double> times(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) times[i] = h * static_cast<double>(i);
    auto sample = [&v](double t, const Vec& lift) {
        Vec out = v(t, wrap(lift));
        for (double x : out)
            if (!std::isfinite(x))
                throw std::runtime_error("integrate_velocity_field: non-finite velocity sample");
        return out;
    };
    std::vector<std::vector<Vec>> paths(mu.size());
    for (std::size_t k = 0; k < mu.size(); ++k) {
        Vec x = mu.points[k].c;
        paths[k].reserve(steps + 1);
        paths[k].push_back(x);
        for (std::size_t i = 0; i < steps; ++i) {
            const double t = times[i];
            Vec k1 = sample(t, x);
            Vec k2 = sample(t + 0.5 * h, axpy(0.5 * h, k1, x));
            Vec k3 = sample(t + 0.5 * h, axpy(0.5 * h, k2, x));
            Vec k4 = sample(t + h, axpy(h, k3, x));
            for (std::size_t a = 0; a < x.size(); ++a)
                x[a] += h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
            paths[k].push_back(x);
        }
    }
    return TrajectoryEnsemble(mu, std::move(times), std::move(paths));
}

VariationFamily make_eulerian_variation(const DiscreteMeasure& mu, const VelocityField& v,
                                        double T, std::size_t steps) {
    VariationFamily f = make_lagrangian_variation(integrate_velocity_field(mu, v, T, steps), T);
    f.kind = VariationKind::eulerian;
    return f;
}

VariationFamily perturb_family(const VariationFamily& family,
                               const std::function<TransportPlan(double)>& hat) {
    VariationFamily f = family;
    auto base_eval = family.eval;
    f.eval = [base_eval, hat](double t) {
        TransportPlan pi = base_eval(t);
        return compose_plans(pi, hat(t));
    };
    return f;
}

VariationFamily mix_families(const VariationFamily& f1, const VariationFamily& f2, double s) {
    if (s < 0.0 || s > 1.0) throw std::invalid_argument("mix_families: s must be in [0,1]");
    if (!same_marginal(f1.base, f2.base) || std::fabs(f1.horizon - f2.horizon) > 1e-12)
        throw std::invalid_argument("mix_families: base or horizon mismatch");
    if (s == 1.0) return f1;
    if (s == 0.0) return f2;
    VariationFamily f = f1;
    auto e1 = f1.eval, e2 = f2.eval;
    f.eval = [e1, e2, s](double t) {
        TransportPlan p1 = e1(t), p2 = e2(t);
        const std::size_t n = p1.rows(), m1 = p1.cols(), m2 = p2.cols();
        if (!same_marginal(p1.source, p2.source))
            throw std::invalid_argument("mix_families: evaluated sources differ");
        std::vector<TorusPoint> tpts = p1.target.points;
        tpts.insert(tpts.end(), p2.target.points.begin(), p2.target.points.end());
        std::vector<double> tw(m1 + m2);
        for (std::size_t j = 0; j < m1; ++j) tw[j] = s * p1.target.weights[j];
        for (std::size_t j = 0; j < m2; ++j) tw[m1 + j] = (1.0 - s) * p2.target.weights[j];
        DiscreteMeasure nu(std::move(tpts), std::move(tw));
        std::vector<double> c(n * (m1 + m2));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m1; ++j) c[i * (m1 + m2) + j] = s * p1.at(i, j);
            for (std::size_t j = 0; j < m2; ++j) c[i * (m1 + m2) + m1 + j] = (1.0 - s) * p2.at(i, j);
        }
        return TransportPlan(p1.source, std::move(nu), std::move(c));
    };
    return f;
}

std::vector<double> geometric_grid(double T, std::size_t levels) {
    std::vector<double> g(levels);
    double t = T;
    for (std::size_t k = 0; k < levels; ++k) {
        t *= 0.5;
        g[k] = t;
    }
    return g;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
        double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) return 0.0;
    double den = n * sxx - sx * sx;
    if (std::fabs(den) < 1e-300) return 0.0;
    return (n * sxy - sx * sy) / den;
}

AdmissibilityReport check_admissibility(const VariationFamily& family, double q,
                                        const std::vector<double>& t_grid,
                                        const std::vector<TestFunction>& testset) {
    if (t_grid.empty()) throw std::invalid_argument("check_admissibility: empty grid");
    AdmissibilityReport rep;
    rep.t_grid = t_grid;
    // reference base with zero-weight atoms removed (plans drop them too)
    std::vector<TorusPoint> bpts;
    std::vector<double> bw;
    for (std::size_t k = 0; k < family.base.size(); ++k)
        if (family.base.weights[k] > 0.0) {
            bpts.push_back(family.base.points[k]);
            bw.push_back(family.base.weights[k]);
        }
    DiscreteMeasure base_ref(std::move(bpts), std::move(bw));

    for (double t : t_grid) {
        TransportPlan pi = family.evaluate(t);
        rep.first_marginal_ok.push_back(same_marginal(pi.source, base_ref, 0.0));
        rep.bl_gap.push_back(bounded_lipschitz_gap(pi.target, base_ref, testset));
        rep.rate.push_back(plan_cost(pi, q) / t);
    }
    rep.cond_a = std::all_of(rep.first_marginal_ok.begin(), rep.first_marginal_ok.end(),
                             [](bool b) { return b; });
    const double first_gap = rep.bl_gap.front(), last_gap = rep.bl_gap.back();
    bool monotone = true;
    for (std::size_t i = 0; i + 1 < rep.bl_gap.size(); ++i)
        if (rep.bl_gap[i + 1] > rep.bl_gap[i] + 1e-12) monotone = false;
    const double eps = std::numeric_limits<double>::epsilon();
    rep.cond_b = last_gap < 10.0 * eps * std::max(first_gap, 1.0) ||
                 (monotone && last_gap < 1e-3);
    const std::size_t half = t_grid.size() / 2;
    rep.C = 0.0;
    for (std::size_t i = half; i < rep.rate.size(); ++i) rep.C = std::max(rep.C, rep.rate[i]);
    rep.cond_c = std::isfinite(rep.C);
    rep.loglog_slope = loglog_slope(rep.t_grid, rep.rate);
    rep.admissible = rep.cond_a && rep.cond_b && rep.cond_c;
    return rep;
}

}  // namespace wvar
