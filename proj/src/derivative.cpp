#include "wvar/derivative.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace wvar {

namespace {

// sum_ij c_ij <p(x_i), y_j - x_i> with wrapped displacements
double plan_pairing(const TransportPlan& pi, const Covector& p) {
    if (p.base.size() != pi.rows())
        throw std::invalid_argument("plan_pairing: covector does not match plan source");
    double s = 0.0;
    for (std::size_t i = 0; i < pi.rows(); ++i)
        for (std::size_t j = 0; j < pi.cols(); ++j) {
            double w = pi.at(i, j);
            if (w == 0.0) continue;
            s += w * dot(p.values[i], wrapped_delta(pi.source.points[i], pi.target.points[j]));
        }
    return s;
}

}  // namespace

DerivativeReport derivative_residual(const Functional& U, const VariationFamily& family,
                                     const Covector& p, double q,
                                     const std::vector<double>& t_grid) {
    AdmissibilityReport adm =
        check_admissibility(family, q, t_grid, default_test_dictionary(family.base.dim()));
    if (!adm.admissible) throw AdmissibilityError(std::move(adm));

    DerivativeReport rep;
    rep.t_grid = t_grid;
    rep.admissibility = std::move(adm);
    const double u0 = U.evaluate(family.base);
    for (double t : t_grid) {
        TransportPlan pi = family.evaluate(t);
        double r = std::fabs(U.evaluate(pi.target) - u0 - plan_pairing(pi, p)) / t;
        rep.residuals.push_back(r);
    }
    rep.slope = loglog_slope(rep.t_grid, rep.residuals);
    const double eps = std::numeric_limits<double>::epsilon();
    const double thresh = std::max(1e-6, 1e3 * eps * std::max(1.0, std::fabs(u0)));
    rep.verdict = rep.residuals.back() < thresh || rep.slope >= 0.9;
    return rep;
}

double richardson_extrapolate(const std::vector<double>& t, const std::vector<double>& v) {
    if (t.size() != v.size() || t.empty())
        throw std::invalid_argument("richardson_extrapolate: bad input lengths");
    const std::size_t n = t.size();
    // Neville tableau for polynomial extrapolation to 0; prev[i] holds the
    // value interpolating nodes i-j+1..i from the previous column.
    std::vector<double> col = v;
    double best = v.back();
    double best_err = std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j < n; ++j) {
        std::vector<double> next(n);
        for (std::size_t i = j; i < n; ++i) {
            next[i] = (t[i - j] * col[i] - t[i] * col[i - 1]) / (t[i - j] - t[i]);
            double err = std::fabs(next[i] - col[i]);
            if (err < best_err) {
                best_err = err;
                best = next[i];
            }
        }
        col = std::move(next);
    }
    return best;
}

double directional_derivative_map(const Functional& U, const DiscreteMeasure& mu,
                                  const Covector& psi, const std::vector<double>& t_grid) {
    VariationFamily fam = make_transport_map_variation(mu, psi, t_grid.front() * 2.0);
    const double u0 = U.evaluate(mu);
    std::vector<double> quot;
    quot.reserve(t_grid.size());
    for (double t : t_grid) {
        double q = (U.evaluate(fam.evaluate(t).target) - u0) / t;
        if (!std::isfinite(q))
            throw std::runtime_error("directional_derivative_map: non-finite quotient");
        quot.push_back(q);
    }
    return richardson_extrapolate(t_grid, quot);
}

double directional_derivative_flat(const Functional& U, const TransportPlan& pi,
                                   const std::vector<double>& t_grid) {
    VariationFamily fam = make_flat_variation(pi, 1.0);
    const double u0 = U.evaluate(pi.source);
    std::vector<double> quot;
    quot.reserve(t_grid.size());
    for (double t : t_grid) {
        double q = (U.evaluate(fam.evaluate(t).target) - u0) / t;
        if (!std::isfinite(q))
            throw std::runtime_error("directional_derivative_flat: non-finite quotient");
        quot.push_back(q);
    }
    return richardson_extrapolate(t_grid, quot);
}

Covector intrinsic_derivative(const Functional& U, const DiscreteMeasure& m, double grid_step) {
    if (!U.has_flat_derivative() && !U.evaluate)
        throw std::invalid_argument("intrinsic_derivative: functional lacks evaluation");
    const double s = 1e-5;
    std::vector<Vec> vals(m.size());
    // the recentering average is y-independent, so it cancels in the central
    // difference; raw quotients suffice
    for (std::size_t k = 0; k < m.size(); ++k) {
        Vec g(m.dim());
        for (std::size_t a = 0; a < m.dim(); ++a) {
            Vec up = m.points[k].c, dn = m.points[k].c;
            up[a] += grid_step;
            dn[a] -= grid_step;
            double fp = raw_flat_quotient(U, m, wrap(up), s);
            double fm = raw_flat_quotient(U, m, wrap(dn), s);
            double d = (fp - fm) / (2.0 * grid_step);
            if (!std::isfinite(d))
                throw std::runtime_error("intrinsic_derivative: non-finite quotient");
            g[a] = d;
        }
        vals[k] = g;
    }
    return Covector(m, std::move(vals));
}

EquivalenceReport equivalence_harness(const Functional& U,
                                      const std::vector<DiscreteMeasure>& samples,
                                      unsigned seed) {
    if (!U.has_closed_gradient())
        throw std::invalid_argument("equivalence_harness: functional lacks a closed gradient");
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> small(-0.3, 0.3);
    std::uniform_real_distribution<double> tiny(-1e-4, 1e-4);
    EquivalenceReport rep;

    const double T = 0.5;
    const std::vector<double> grid = geometric_grid(T, 20);
    const std::vector<double> grid12 = geometric_grid(T, 12);

    for (const DiscreteMeasure& m : samples) {
        const std::size_t d = m.dim();
        Covector p = U.closed_gradient(m);

        auto random_field = [&](double amp) {
            std::uniform_real_distribution<double> dist(-amp, amp);
            std::vector<Vec> vals(m.size());
            for (auto& v : vals) {
                v.resize(d);
                for (double& x : v) x = dist(rng);
            }
            return Covector(m, std::move(vals));
        };

        // (i) residual along one family of each kind
        std::vector<VariationFamily> fams;
        std::vector<double> qs;
        Covector phi = random_field(0.3);
        fams.push_back(make_transport_map_variation(m, phi, T));
        qs.push_back(2.0);
        {
            std::vector<TorusPoint> tgt;
            for (std::size_t k = 0; k < m.size(); ++k) {
                Vec x = m.points[k].c;
                for (double& c : x) c += tiny(rng);
                tgt.push_back(wrap(x));
            }
            fams.push_back(make_flat_variation(map_plan(m, std::move(tgt)), 1.0));
            qs.push_back(1.0);
        }
        {
            Covector a = random_field(0.3), b = random_field(0.3);
            const std::size_t K = 32;
            std::vector<double> times(K + 1);
            std::vector<std::vector<Vec>> paths(m.size());
            for (std::size_t i = 0; i <= K; ++i) times[i] = T * static_cast<double>(i) / K;
            for (std::size_t k = 0; k < m.size(); ++k)
                for (std::size_t i = 0; i <= K; ++i) {
                    double t = times[i];
                    Vec x = m.points[k].c;
                    for (std::size_t c = 0; c < d; ++c)
                        x[c] += t * a.values[k][c] + t * t * b.values[k][c];
                    paths[k].push_back(x);
                }
            fams.push_back(make_lagrangian_variation(
                TrajectoryEnsemble(m, std::move(times), std::move(paths)), T));
            qs.push_back(2.0);
        }
        {
            Vec amp(d), phase(d);
            for (std::size_t c = 0; c < d; ++c) {
                amp[c] = small(rng);
                phase[c] = small(rng);
            }
            VelocityField v = [amp, phase](double, const TorusPoint& x) {
                Vec out(x.dim());
                for (std::size_t c = 0; c < x.dim(); ++c)
                    out[c] = amp[c] * std::sin(2.0 * std::acos(-1.0) * x[0] + phase[c]);
                return out;
            };
            fams.push_back(make_eulerian_variation(m, v, T, 64));
            qs.push_back(2.0);
        }
        for (std::size_t fi = 0; fi < fams.size(); ++fi) {
            DerivativeReport r = derivative_residual(U, fams[fi], p, qs[fi], grid);
            rep.max_residual = std::max(rep.max_residual, r.residuals.back());
            rep.all_verdicts = rep.all_verdicts && r.verdict;
        }

        // (ii) intrinsic derivative against the closed gradient
        Covector num = intrinsic_derivative(U, m, 1e-4);
        for (std::size_t k = 0; k < m.size(); ++k) {
            Vec diff = axpy(-1.0, p.values[k], num.values[k]);
            rep.max_intrinsic_error = std::max(rep.max_intrinsic_error, norm2(diff));
        }

        // (iii) directional formulas
        {
            Covector psi = random_field(0.3);
            double lhs = directional_derivative_map(U, m, psi, grid12);
            double closed = 0.0;
            for (std::size_t k = 0; k < m.size(); ++k)
                closed += m.weights[k] * dot(p.values[k], psi.values[k]);
            rep.max_directional_error =
                std::max(rep.max_directional_error, std::fabs(lhs - closed));

            std::vector<TorusPoint> tgt;
            for (std::size_t k = 0; k < m.size(); ++k) {
                Vec x = m.points[k].c;
                for (double& c : x) c += tiny(rng);
                tgt.push_back(wrap(x));
            }
            TransportPlan pi = map_plan(m, std::move(tgt));
            double lhs2 = directional_derivative_flat(U, pi, grid12);
            double closed2 = plan_pairing(pi, p);
            rep.max_directional_error =
                std::max(rep.max_directional_error, std::fabs(lhs2 - closed2));
        }
    }
    return rep;
}

double integral_form_check(const Functional& U, const TrajectoryEnsemble& curve,
                           const VelocityField& v) {
    if (!U.has_closed_gradient())
        throw std::invalid_argument("integral_form_check: functional lacks a closed gradient");
    const std::size_t n = curve.times.size();
    std::vector<double> u(n), integrand(n);
    for (std::size_t i = 0; i < n; ++i) {
        DiscreteMeasure mu = curve.at_time(curve.times[i]);
        u[i] = U.evaluate(mu);
        Covector p = U.closed_gradient(mu);
        double s = 0.0;
        for (std::size_t k = 0; k < mu.size(); ++k)
            s += mu.weights[k] * dot(p.values[k], v(curve.times[i], mu.points[k]));
        integrand[i] = s;
    }
    std::vector<double> cum(n, 0.0);
    for (std::size_t i = 1; i < n; ++i)
        cum[i] = cum[i - 1] +
                 0.5 * (curve.times[i] - curve.times[i - 1]) * (integrand[i] + integrand[i - 1]);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            worst = std::max(worst, std::fabs(u[j] - u[i] - (cum[j] - cum[i])));
    return worst;
}

}  // namespace wvar
