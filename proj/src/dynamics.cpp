#include "wvar/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace wvar {

namespace {

void check_finite(const Vec& v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw std::runtime_error(std::string(what) + ": non-finite state");
}

// linear interpolation of a grid-sampled lift over [times[i0], times[i1]]
Vec interp(const std::vector<double>& times, std::size_t i0, std::size_t i1,
           const std::vector<Vec>& samples, double t) {
    if (t <= times[i0]) return samples[i0];
    if (t >= times[i1]) return samples[i1];
    std::size_t lo = i0;
    while (lo + 1 < i1 && times[lo + 1] <= t) ++lo;
    double lam = (t - times[lo]) / (times[lo + 1] - times[lo]);
    Vec out(samples[lo].size());
    for (std::size_t a = 0; a < out.size(); ++a)
        out[a] = (1.0 - lam) * samples[lo][a] + lam * samples[lo + 1][a];
    return out;
}

DiscreteMeasure frozen_measure(const std::vector<double>& times, std::size_t i0, std::size_t i1,
                               const std::vector<std::vector<Vec>>& foll,
                               const std::vector<double>& weights, double t) {
    std::vector<TorusPoint> pts;
    pts.reserve(foll.size());
    for (std::size_t k = 0; k < foll.size(); ++k) pts.push_back(wrap(interp(times, i0, i1, foll[k], t)));
    return DiscreteMeasure(std::move(pts), weights);
}

}  // namespace

double max_contraction_horizon(double L) {
    if (L <= 0.0) throw std::invalid_argument("max_contraction_horizon: L must be > 0");
    auto alpha2 = [L](double tau) {
        return 2.0 * L * L * tau * tau * std::exp(2.0 * L * tau) * (tau + 2.0) * (tau + 2.0);
    };
    const double cap = 1e6;
    double lo = 0.0, hi = 1.0 / L;
    while (alpha2(hi) < 0.5 && hi < cap) hi *= 2.0;
    if (hi >= cap) return cap;
    while (hi - lo > 1e-10) {
        double mid = 0.5 * (lo + hi);
        (alpha2(mid) < 0.5 ? lo : hi) = mid;
    }
    return lo;
}

ControlledDynamics builtin_dynamics(const std::string& name, std::size_t dim) {
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    ControlledDynamics d;
    d.name = name;
    if (name == "zero") {
        d.f = [dim](double, const TorusPoint&, const DiscreteMeasure&, const Control&) {
            return Vec(dim, 0.0);
        };
        d.g = [dim](double, const TorusPoint&, const TorusPoint&, const DiscreteMeasure&,
                    const Control&) { return Vec(dim, 0.0); };
        d.L = 1e-3;
        return d;
    }
    if (name == "reach") {
        // leader steered directly by its control; followers static
        d.f = [](double, const TorusPoint&, const DiscreteMeasure&, const Control& u) { return u; };
        d.g = [dim](double, const TorusPoint&, const TorusPoint&, const DiscreteMeasure&,
                    const Control&) { return Vec(dim, 0.0); };
        d.L = 1e-3;
        return d;
    }
    if (name == "decoupled") {
        // state-dependent speeds, no measure or leader coupling
        d.f = [](double, const TorusPoint& x, const DiscreteMeasure&, const Control& u) {
            return scaled(0.6 + 0.4 * std::cos(kTwoPi * x[0]), u);
        };
        d.g = [](double, const TorusPoint& x, const TorusPoint&, const DiscreteMeasure&,
                 const Control& u) {
            return scaled(0.6 + 0.4 * std::sin(kTwoPi * x[0]), u);
        };
        d.L = 3.0;
        return d;
    }
    if (name == "chase") {
        // leader moves with its control; followers chase the leader
        d.f = [](double, const TorusPoint&, const DiscreteMeasure&, const Control& u) { return u; };
        d.g = [](double, const TorusPoint& x, const TorusPoint& leader, const DiscreteMeasure&,
                 const Control&) { return wrapped_delta(x, leader); };
        d.L = 1.0;
        return d;
    }
    throw std::invalid_argument("builtin_dynamics: unknown id '" + name + "'");
}

std::vector<std::vector<Vec>> integrate_followers(
    const ControlledDynamics& dyn, const DiscreteMeasure& base, const std::vector<Control>& ubar,
    const std::vector<double>& times, std::size_t i0, std::size_t i1,
    const std::vector<Vec>& leader_prev, const std::vector<std::vector<Vec>>& foll_prev,
    const std::vector<Vec>& start, bool parallel) {
    const std::size_t natoms = base.size();
    std::vector<std::vector<Vec>> out(natoms, std::vector<Vec>(i1 - i0 + 1));
    // frozen measures sampled where RK4 needs them (nodes and midpoints)
    std::vector<DiscreteMeasure> mu_node(i1 - i0 + 1), mu_mid(i1 - i0);
    for (std::size_t i = i0; i <= i1; ++i)
        mu_node[i - i0] = frozen_measure(times, i0, i1, foll_prev, base.weights, times[i]);
    for (std::size_t i = i0; i < i1; ++i)
        mu_mid[i - i0] = frozen_measure(times, i0, i1, foll_prev, base.weights,
                                        0.5 * (times[i] + times[i + 1]));

    auto one_atom = [&](std::size_t k) {
        Vec x = start[k];
        out[k][0] = x;
        for (std::size_t i = i0; i < i1; ++i) {
            const double h = times[i + 1] - times[i];
            const double tm = 0.5 * (times[i] + times[i + 1]);
            TorusPoint lead0 = wrap(leader_prev[i]);
            TorusPoint leadm = wrap(interp(times, i0, i1, leader_prev, tm));
            TorusPoint lead1 = wrap(leader_prev[i + 1]);
            Vec k1 = dyn.g(times[i], wrap(x), lead0, mu_node[i - i0], ubar[k]);
            Vec k2 = dyn.g(tm, wrap(axpy(0.5 * h, k1, x)), leadm, mu_mid[i - i0], ubar[k]);
            Vec k3 = dyn.g(tm, wrap(axpy(0.5 * h, k2, x)), leadm, mu_mid[i - i0], ubar[k]);
            Vec k4 = dyn.g(times[i + 1], wrap(axpy(h, k3, x)), lead1, mu_node[i + 1 - i0], ubar[k]);
            for (std::size_t a = 0; a < x.size(); ++a)
                x[a] += h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
            out[k][i + 1 - i0] = x;
        }
    };
    if (parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (long long k = 0; k < static_cast<long long>(natoms); ++k)
            one_atom(static_cast<std::size_t>(k));
#else
        for (std::size_t k = 0; k < natoms; ++k) one_atom(k);
#endif
    } else {
        for (std::size_t k = 0; k < natoms; ++k) one_atom(k);
    }
    for (std::size_t k = 0; k < natoms; ++k) check_finite(out[k].back(), "integrate_followers");
    return out;
}

namespace {

// interp above needs leader_prev indexed on the global grid; wrap a local
// window sample into a globally indexed view
std::vector<Vec> to_global(const std::vector<double>& times, std::size_t i0,
                           const std::vector<Vec>& local) {
    std::vector<Vec> global(times.size());
    for (std::size_t i = 0; i < local.size(); ++i) global[i0 + i] = local[i];
    return global;
}

}  // namespace

LeaderFollowerSolution solve_leader_follower(const ControlledDynamics& dyn, const TorusPoint& x0,
                                             const DiscreteMeasure& mu0, const Control& u0,
                                             const std::vector<Control>& ubar, double t0, double T,
                                             std::size_t steps, double tol) {
    if (T <= t0) throw std::invalid_argument("solve_leader_follower: need T > t0");
    if (steps == 0) throw std::invalid_argument("solve_leader_follower: need steps >= 1");
    if (ubar.size() != mu0.size())
        throw std::invalid_argument("solve_leader_follower: one control per follower atom required");
    const std::size_t d = mu0.dim();
    const double h = (T - t0) / static_cast<double>(steps);
    std::vector<double> times(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) times[i] = t0 + h * static_cast<double>(i);

    const double tau_max = max_contraction_horizon(dyn.L);
    std::size_t steps_per_window = steps;
    if (tau_max < T - t0)
        steps_per_window = std::max<std::size_t>(1, static_cast<std::size_t>(tau_max / h));

    LeaderFollowerSolution sol;
    sol.times = times;
    sol.u0 = u0;
    sol.ubar = ubar;
    sol.leader.assign(steps + 1, Vec(d, 0.0));
    std::vector<std::vector<Vec>> foll(mu0.size(), std::vector<Vec>(steps + 1));
    sol.leader[0] = x0.c;
    for (std::size_t k = 0; k < mu0.size(); ++k) foll[k][0] = mu0.points[k].c;

    std::size_t i0 = 0;
    while (i0 < steps) {
        const std::size_t i1 = std::min(steps, i0 + steps_per_window);
        const std::size_t wn = i1 - i0;
        // previous iterate, frozen at the window's start state
        std::vector<Vec> leader_prev(wn + 1, sol.leader[i0]);
        std::vector<std::vector<Vec>> foll_prev(mu0.size());
        for (std::size_t k = 0; k < mu0.size(); ++k) foll_prev[k].assign(wn + 1, foll[k][i0]);

        std::vector<double> log;
        double prev_dist = -1.0;
        std::size_t bad_ratio_streak = 0;
        for (std::size_t iter = 0;; ++iter) {
            if (iter >= 60) {
                std::ostringstream msg;
                msg << "solve_leader_follower: no convergence in 60 iterations (window ["
                    << times[i0] << ", " << times[i1] << "], last update " << log.back() << ")";
                throw std::runtime_error(msg.str());
            }
            std::vector<Vec> foll_prev_global_leader = to_global(times, i0, leader_prev);
            std::vector<std::vector<Vec>> foll_prev_global(mu0.size());
            for (std::size_t k = 0; k < mu0.size(); ++k)
                foll_prev_global[k] = to_global(times, i0, foll_prev[k]);

            // leader step against the frozen measure
            std::vector<Vec> leader_new(wn + 1);
            {
                Vec w = sol.leader[i0];
                leader_new[0] = w;
                for (std::size_t i = i0; i < i1; ++i) {
                    const double hh = times[i + 1] - times[i];
                    const double tm = 0.5 * (times[i] + times[i + 1]);
                    DiscreteMeasure m0 =
                        frozen_measure(times, i0, i1, foll_prev_global, mu0.weights, times[i]);
                    DiscreteMeasure mm =
                        frozen_measure(times, i0, i1, foll_prev_global, mu0.weights, tm);
                    DiscreteMeasure m1 =
                        frozen_measure(times, i0, i1, foll_prev_global, mu0.weights, times[i + 1]);
                    Vec k1 = dyn.f(times[i], wrap(w), m0, u0);
                    Vec k2 = dyn.f(tm, wrap(axpy(0.5 * hh, k1, w)), mm, u0);
                    Vec k3 = dyn.f(tm, wrap(axpy(0.5 * hh, k2, w)), mm, u0);
                    Vec k4 = dyn.f(times[i + 1], wrap(axpy(hh, k3, w)), m1, u0);
                    for (std::size_t a = 0; a < d; ++a)
                        w[a] += hh / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
                    leader_new[i + 1 - i0] = w;
                }
                check_finite(w, "solve_leader_follower(leader)");
            }
            // follower step against the frozen leader and measure
            std::vector<Vec> start(mu0.size());
            for (std::size_t k = 0; k < mu0.size(); ++k) start[k] = foll[k][i0];
            std::vector<std::vector<Vec>> foll_new =
                integrate_followers(dyn, mu0, ubar, times, i0, i1, foll_prev_global_leader,
                                    foll_prev_global, start, true);

            // paired sup-norm / identity-pairing W2 update distance
            double lead_sup = 0.0, w2_sup = 0.0;
            for (std::size_t i = 0; i <= wn; ++i) {
                lead_sup = std::max(lead_sup,
                                    norm2(axpy(-1.0, leader_prev[i], leader_new[i])));
                double s = 0.0;
                for (std::size_t k = 0; k < mu0.size(); ++k) {
                    Vec diff = axpy(-1.0, foll_prev[k][i], foll_new[k][i]);
                    s += mu0.weights[k] * dot(diff, diff);
                }
                w2_sup = std::max(w2_sup, std::sqrt(s));
            }
            double dist = std::sqrt(lead_sup * lead_sup + w2_sup * w2_sup);
            log.push_back(dist);
            leader_prev = std::move(leader_new);
            foll_prev = std::move(foll_new);
            if (dist < tol) break;
            if (prev_dist > 0.0) {
                bad_ratio_streak = (dist > 0.99 * prev_dist) ? bad_ratio_streak + 1 : 0;
                if (bad_ratio_streak >= 5) {
                    std::ostringstream msg;
                    msg << "solve_leader_follower: contraction failure, update ratios above 0.99"
                        << " for 5 iterations (window [" << times[i0] << ", " << times[i1] << "])";
                    throw std::runtime_error(msg.str());
                }
            }
            prev_dist = dist;
        }
        for (std::size_t i = 0; i <= wn; ++i) sol.leader[i0 + i] = leader_prev[i];
        for (std::size_t k = 0; k < mu0.size(); ++k)
            for (std::size_t i = 0; i <= wn; ++i) foll[k][i0 + i] = foll_prev[k][i];
        sol.window_residuals.push_back(std::move(log));
        i0 = i1;
    }
    sol.followers = TrajectoryEnsemble(mu0, times, std::move(foll));
    return sol;
}

TorusPoint LeaderFollowerSolution::leader_at(double t) const {
    return wrap(interp(times, 0, times.size() - 1, leader, t));
}

double continuity_residual(const LeaderFollowerSolution& sol,
                           const std::vector<TestFunction>& testset, double dcheck) {
    const std::size_t n = sol.times.size();
    const double h = sol.times[1] - sol.times[0];
    const std::size_t stride =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(dcheck / h)));
    const auto& paths = sol.followers.paths;
    const auto& w = sol.followers.base.weights;
    // velocities by centered differences (one-sided at the ends)
    auto velocity = [&](std::size_t k, std::size_t i) {
        std::size_t lo = i == 0 ? 0 : i - 1;
        std::size_t hi = i + 1 < n ? i + 1 : i;
        Vec v(paths[k][i].size());
        double dt = sol.times[hi] - sol.times[lo];
        for (std::size_t a = 0; a < v.size(); ++a) v[a] = (paths[k][hi][a] - paths[k][lo][a]) / dt;
        return v;
    };
    double worst = 0.0;
    for (const auto& phi : testset) {
        std::vector<double> integ(n), moment(n);
        for (std::size_t i = 0; i < n; ++i) {
            double mi = 0.0, fi = 0.0;
            for (std::size_t k = 0; k < paths.size(); ++k) {
                TorusPoint x = wrap(paths[k][i]);
                fi += w[k] * phi.value(x);
                mi += w[k] * dot(phi.gradient(x), velocity(k, i));
            }
            moment[i] = fi;
            integ[i] = mi;
        }
        for (std::size_t a = 0; a + stride < n + 1; a += stride) {
            std::size_t b = std::min(n - 1, a + stride);
            if (b <= a) break;
            double quad = 0.0;
            for (std::size_t i = a; i < b; ++i)
                quad += 0.5 * (sol.times[i + 1] - sol.times[i]) * (integ[i] + integ[i + 1]);
            worst = std::max(worst, std::fabs(moment[b] - moment[a] - quad));
        }
    }
    return worst;
}

double initial_velocity_check(const LeaderFollowerSolution& sol, const ControlledDynamics& dyn) {
    const double h = sol.times[1] - sol.times[0];
    DiscreteMeasure mu0 = sol.followers.base;
    TorusPoint x0 = wrap(sol.leader[0]);
    double worst = 0.0;
    {
        Vec quot = scaled(1.0 / h, axpy(-1.0, sol.leader[0], sol.leader[1]));
        Vec target = dyn.f(sol.times[0], x0, mu0, sol.u0);
        worst = std::max(worst, norm2(axpy(-1.0, target, quot)));
    }
    for (std::size_t k = 0; k < mu0.size(); ++k) {
        Vec quot = scaled(1.0 / h, axpy(-1.0, sol.followers.paths[k][0], sol.followers.paths[k][1]));
        Vec target = dyn.g(sol.times[0], mu0.points[k], x0, mu0, sol.ubar[k]);
        worst = std::max(worst, norm2(axpy(-1.0, target, quot)));
    }
    return worst;
}

}  // namespace wvar
