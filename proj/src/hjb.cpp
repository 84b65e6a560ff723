#include "wvar/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

namespace wvar {

namespace {

double pairing(const TransportPlan& pi, const Covector& p) {
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

CostSpec builtin_cost(const std::string& name) {
    CostSpec c;
    c.name = name;
    auto zero = [](const TorusPoint&, const DiscreteMeasure&) { return 0.0; };
    if (name == "zero") {
        c.running = zero;
        c.terminal = zero;
        c.lip_running = c.sup_running = c.lip_terminal = c.sup_terminal = 0.0;
        return c;
    }
    if (name == "constant") {
        c.running = [](const TorusPoint&, const DiscreteMeasure&) { return 1.0; };
        c.terminal = zero;
        c.lip_running = 0.0;
        c.sup_running = 1.0;
        c.lip_terminal = c.sup_terminal = 0.0;
        return c;
    }
    if (name == "moment") {
        c.running = [](const TorusPoint&, const DiscreteMeasure& mu) { return second_moment(mu); };
        c.terminal = zero;
        c.lip_running = 4.0;
        c.sup_running = 4.0;
        c.lip_terminal = c.sup_terminal = 0.0;
        return c;
    }
    if (name == "target") {
        c.running = zero;
        c.terminal = [](const TorusPoint& x, const DiscreteMeasure&) {
            double d = torus_distance(x, TorusPoint(Vec(x.dim(), 0.5)));
            return d * d;
        };
        c.lip_running = c.sup_running = 0.0;
        c.lip_terminal = 2.0;
        c.sup_terminal = 1.0;
        return c;
    }
    throw std::invalid_argument("builtin_cost: unknown id '" + name + "'");
}

std::vector<ControlChoice> constant_control_grid(std::size_t dim, std::size_t n_per_axis) {
    if (n_per_axis < 2) throw std::invalid_argument("constant_control_grid: need >= 2 values");
    std::vector<double> axis(n_per_axis);
    for (std::size_t i = 0; i < n_per_axis; ++i)
        axis[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n_per_axis - 1);
    std::vector<ControlChoice> grid;
    std::vector<std::size_t> idx(dim, 0);
    while (true) {
        Control u(dim);
        for (std::size_t a = 0; a < dim; ++a) u[a] = axis[idx[a]];
        double n = norm2(u);
        if (n > 1.0) u = scaled(1.0 / n, u);
        ControlChoice ch;
        std::ostringstream label;
        label << "u0=(";
        for (std::size_t a = 0; a < dim; ++a) label << (a ? "," : "") << u[a];
        label << ")|ubar=0";
        ch.label = label.str();
        ch.u0 = u;
        ch.ubar = [dim](const TorusPoint&) { return Control(dim, 0.0); };
        grid.push_back(std::move(ch));
        std::size_t a = 0;
        for (; a < dim; ++a) {
            if (++idx[a] < n_per_axis) break;
            idx[a] = 0;
        }
        if (a == dim) break;
    }
    return grid;
}

std::string value_table_to_json(const ValueTable& table) {
    nlohmann::ordered_json j;
    j["times"] = table.times;
    nlohmann::ordered_json states = nlohmann::ordered_json::array();
    for (std::size_t a = 0; a < table.states.size(); ++a) {
        nlohmann::ordered_json s;
        s["x"] = table.states[a].first.c;
        s["mu"] = a < table.state_mu_refs.size() ? table.state_mu_refs[a] : "";
        states.push_back(s);
    }
    j["states"] = states;
    j["values"] = table.values;
    j["controls"] = table.controls;
    return j.dump(2);
}

double cost_J(const CostSpec& cost, const LeaderFollowerSolution& sol) {
    const auto& t = sol.times;
    double run = 0.0;
    double prev = cost.running(sol.leader_at(t[0]), sol.measure_at(t[0]));
    for (std::size_t i = 1; i < t.size(); ++i) {
        double cur = cost.running(sol.leader_at(t[i]), sol.measure_at(t[i]));
        run += 0.5 * (t[i] - t[i - 1]) * (prev + cur);
        prev = cur;
    }
    return run + cost.terminal(sol.leader_at(t.back()), sol.measure_at(t.back()));
}

std::pair<double, ControlChoice> value_function(const CostSpec& cost,
                                                const ControlledDynamics& dyn, double t0,
                                                const TorusPoint& x0, const DiscreteMeasure& mu0,
                                                double T,
                                                const std::vector<ControlChoice>& control_grid,
                                                std::size_t steps) {
    if (control_grid.empty()) throw std::invalid_argument("value_function: empty control grid");
    if (t0 > T) throw std::invalid_argument("value_function: t0 must be <= T");
    if (t0 == T) return {cost.terminal(x0, mu0), control_grid.front()};
    double best = 0.0;
    std::size_t best_i = control_grid.size();
    for (std::size_t i = 0; i < control_grid.size(); ++i) {
        const ControlChoice& ch = control_grid[i];
        std::vector<Control> ubar(mu0.size());
        for (std::size_t k = 0; k < mu0.size(); ++k) ubar[k] = ch.ubar(mu0.points[k]);
        LeaderFollowerSolution sol =
            solve_leader_follower(dyn, x0, mu0, ch.u0, ubar, t0, T, steps);
        double J = cost_J(cost, sol);
        if (best_i == control_grid.size() || J < best) {
            best = J;
            best_i = i;
        }
    }
    return {best, control_grid[best_i]};
}

double dpp_residual(const CostSpec& cost, const ControlledDynamics& dyn, double t0,
                    const TorusPoint& x0, const DiscreteMeasure& mu0, double tau, double T,
                    const std::vector<ControlChoice>& control_grid, std::size_t steps) {
    if (!(t0 < tau && tau < T)) throw std::invalid_argument("dpp_residual: need t0 < tau < T");
    double V0 = value_function(cost, dyn, t0, x0, mu0, T, control_grid, steps).first;
    const double frac = (tau - t0) / (T - t0);
    const std::size_t steps1 =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(steps * frac)));
    const std::size_t steps2 = std::max<std::size_t>(1, steps - steps1);
    double rhs = 0.0;
    bool have = false;
    for (const ControlChoice& ch : control_grid) {
        std::vector<Control> ubar(mu0.size());
        for (std::size_t k = 0; k < mu0.size(); ++k) ubar[k] = ch.ubar(mu0.points[k]);
        LeaderFollowerSolution leg =
            solve_leader_follower(dyn, x0, mu0, ch.u0, ubar, t0, tau, steps1);
        CostSpec leg_cost = cost;
        leg_cost.terminal = [](const TorusPoint&, const DiscreteMeasure&) { return 0.0; };
        double leg_J = cost_J(leg_cost, leg);
        double Vtau = value_function(cost, dyn, tau, leg.leader_at(tau), leg.measure_at(tau), T,
                                     control_grid, steps2)
                          .first;
        double total = leg_J + Vtau;
        if (!have || total < rhs) {
            rhs = total;
            have = true;
        }
    }
    return std::fabs(V0 - rhs);
}

std::vector<Control> default_control_samples(std::size_t dim, unsigned seed) {
    std::vector<Control> out;
    out.push_back(Control(dim, 0.0));
    for (std::size_t a = 0; a < dim; ++a) {
        Control e(dim, 0.0);
        e[a] = 1.0;
        out.push_back(e);
        e[a] = -1.0;
        out.push_back(e);
    }
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (std::size_t i = 0; i < 2 * dim + 1; ++i) {
        Control u(dim);
        for (double& x : u) x = unit(rng);
        double n = norm2(u);
        if (n > 1.0) u = scaled(1.0 / n, u);
        out.push_back(u);
    }
    return out;
}

namespace {

struct HamParts {
    double value = 0.0;
    Control leader_argmin;
};

HamParts hamiltonian_parts(const ControlledDynamics& dyn, const CostSpec& cost, double t,
                           const TorusPoint& xi, const DiscreteMeasure& mu, const Vec& p_x,
                           const Covector& p_mu, const std::vector<Control>& samples) {
    if (samples.empty()) throw std::invalid_argument("hamiltonian: empty control samples");
    if (p_mu.base.size() != mu.size())
        throw std::invalid_argument("hamiltonian: p_mu base does not match mu");
    HamParts out;
    double lead_best = 0.0;
    std::size_t lead_i = samples.size();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double v = dot(dyn.f(t, xi, mu, samples[i]), p_x);
        if (lead_i == samples.size() || v < lead_best) {
            lead_best = v;
            lead_i = i;
        }
    }
    out.leader_argmin = samples[lead_i];
    double foll = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k) {
        double best = 0.0;
        bool have = false;
        for (const Control& u : samples) {
            double v = dot(dyn.g(t, mu.points[k], xi, mu, u), p_mu.values[k]);
            if (!have || v < best) {
                best = v;
                have = true;
            }
        }
        foll += mu.weights[k] * best;
    }
    out.value = cost.running(xi, mu) + lead_best + foll;
    return out;
}

}  // namespace

double hamiltonian(const ControlledDynamics& dyn, const CostSpec& cost, double t,
                   const TorusPoint& xi, const DiscreteMeasure& mu, const Vec& p_x,
                   const Covector& p_mu, const std::vector<Control>& control_samples) {
    return hamiltonian_parts(dyn, cost, t, xi, mu, p_x, p_mu, control_samples).value;
}

namespace {

// per-scale [min, max] of the jet defect quotient over the (h, y) grid and
// one variation family per kind
struct JetQuotients {
    std::vector<double> scales, qmin, qmax;
};

JetQuotients jet_quotients(const ValueOracle& V, double t, const TorusPoint& xi,
                           const DiscreteMeasure& mu, const Jet& jet, double T, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> small(-0.2, 0.2);
    const std::size_t d = mu.dim();
    const double s0 = std::min(0.05, 0.5 * (T - t));
    if (!(s0 > 0.0)) throw std::invalid_argument("jet test: probe time too close to horizon");

    std::vector<VariationFamily> fams;
    {
        std::vector<Vec> vals(mu.size(), Vec(d));
        for (auto& v : vals)
            for (double& x : v) x = small(rng);
        fams.push_back(make_transport_map_variation(mu, Covector(mu, vals), s0));
    }
    {
        std::vector<TorusPoint> tgt;
        for (std::size_t k = 0; k < mu.size(); ++k) {
            Vec x = mu.points[k].c;
            for (double& c : x) c += 5e-3 * small(rng);
            tgt.push_back(wrap(x));
        }
        fams.push_back(make_flat_variation(map_plan(mu, std::move(tgt)), std::min(1.0, s0)));
    }
    {
        std::vector<Vec> a(mu.size(), Vec(d)), b(mu.size(), Vec(d));
        for (auto& v : a)
            for (double& x : v) x = small(rng);
        for (auto& v : b)
            for (double& x : v) x = small(rng);
        const std::size_t K = 16;
        std::vector<double> times(K + 1);
        std::vector<std::vector<Vec>> paths(mu.size());
        for (std::size_t i = 0; i <= K; ++i) times[i] = s0 * static_cast<double>(i) / K;
        for (std::size_t k = 0; k < mu.size(); ++k)
            for (std::size_t i = 0; i <= K; ++i) {
                double tt = times[i];
                Vec x = mu.points[k].c;
                for (std::size_t c = 0; c < d; ++c) x[c] += tt * a[k][c] + tt * tt * b[k][c];
                paths[k].push_back(x);
            }
        fams.push_back(
            make_lagrangian_variation(TrajectoryEnsemble(mu, std::move(times), std::move(paths)), s0));
    }
    {
        Vec amp(d);
        for (double& x : amp) x = small(rng);
        VelocityField v = [amp](double, const TorusPoint& x) {
            Vec out(x.dim());
            for (std::size_t c = 0; c < x.dim(); ++c)
                out[c] = amp[c] * std::cos(6.283185307179586 * x[0]);
            return out;
        };
        fams.push_back(make_eulerian_variation(mu, v, s0, 32));
    }

    std::vector<Vec> offsets;
    offsets.push_back(Vec(d, 0.0));
    for (std::size_t a = 0; a < d; ++a) {
        Vec e(d, 0.0);
        e[a] = 1.0;
        offsets.push_back(e);
        e[a] = -1.0;
        offsets.push_back(e);
    }

    JetQuotients out;
    const double v0 = V(t, xi, mu);
    for (std::size_t k = 1; k <= 10; ++k) {
        const double s = s0 * std::pow(0.5, static_cast<double>(k));
        double qmin = 0.0, qmax = 0.0;
        bool have = false;
        for (const auto& fam : fams) {
            TransportPlan pi = fam.evaluate(s);
            double pair_term = pairing(pi, jet.p_mu);
            DiscreteMeasure mu_s = pi.target;
            for (const Vec& dir : offsets) {
                Vec y = scaled(s, dir);
                TorusPoint xs = wrap(axpy(1.0, y, xi.c));
                double num = V(t + s, xs, mu_s) - v0 - jet.p_t * s - dot(jet.p_x, y) - pair_term;
                double q = num / (s + norm2(y));
                if (!have || q < qmin) qmin = q;
                if (!have || q > qmax) qmax = q;
                have = true;
            }
        }
        out.scales.push_back(s);
        out.qmin.push_back(qmin);
        out.qmax.push_back(qmax);
    }
    return out;
}

}  // namespace

std::pair<JetReport, double> subsolution_residual(const ValueOracle& V,
                                                  const ControlledDynamics& dyn,
                                                  const CostSpec& cost, double t,
                                                  const TorusPoint& xi, const DiscreteMeasure& mu,
                                                  const Jet& jet, double T, double tol,
                                                  unsigned seed) {
    if (!(t < T)) throw std::invalid_argument("subsolution_residual: need t < T");
    JetQuotients q = jet_quotients(V, t, xi, mu, jet, T, seed);
    JetReport rep;
    rep.scales = q.scales;
    rep.worst_quotient = q.qmax;
    rep.member = true;
    for (std::size_t i = q.scales.size() / 2; i < q.scales.size(); ++i)
        if (q.qmax[i] > tol) rep.member = false;
    double val = jet.p_t + hamiltonian(dyn, cost, t, xi, mu, jet.p_x, jet.p_mu,
                                       default_control_samples(mu.dim(), seed));
    return {rep, val};
}

std::pair<JetReport, double> supersolution_residual(const ValueOracle& V,
                                                    const ControlledDynamics& dyn,
                                                    const CostSpec& cost, double t,
                                                    const TorusPoint& xi,
                                                    const DiscreteMeasure& mu, const Jet& jet,
                                                    double T, double tol, unsigned seed) {
    if (!(t < T)) throw std::invalid_argument("supersolution_residual: need t < T");
    JetQuotients q = jet_quotients(V, t, xi, mu, jet, T, seed);
    JetReport rep;
    rep.scales = q.scales;
    rep.worst_quotient = q.qmin;
    rep.member = true;
    for (std::size_t i = q.scales.size() / 2; i < q.scales.size(); ++i)
        if (q.qmin[i] < -tol) rep.member = false;
    double val = jet.p_t + hamiltonian(dyn, cost, t, xi, mu, jet.p_x, jet.p_mu,
                                       default_control_samples(mu.dim(), seed));
    return {rep, val};
}

HamComparisonReport hamiltonian_comparison_check(const ControlledDynamics& dyn,
                                                 const CostSpec& cost,
                                                 const std::vector<HamProbe>& probes,
                                                 unsigned seed) {
    HamComparisonReport rep;
    for (const HamProbe& pr : probes) {
        const std::size_t d = pr.mu.dim();
        std::vector<Control> samples = default_control_samples(d, seed);
        std::vector<Control> fine = default_control_samples(d, seed);
        {
            std::vector<Control> extra = default_control_samples(d, seed + 1);
            fine.insert(fine.end(), extra.begin(), extra.end());
        }
        TransportPlan pi = optimal_plan(pr.mu, pr.nu, 2.0);
        double w2 = plan_cost(pi, 2.0);
        double delta = std::fabs(pr.t - pr.s) + torus_distance(pr.x, pr.y) + w2;
        Covector b1 = barycentric_covector(pi);
        Covector b2 = barycentric_covector(invert_plan(pi));
        for (auto& v : b1.values) v = scaled(pr.lambda, v);
        for (auto& v : b2.values) v = scaled(pr.lambda, v);
        HamParts h1 = hamiltonian_parts(dyn, cost, pr.t, pr.x, pr.mu, pr.p, b1, samples);
        HamParts h2 = hamiltonian_parts(dyn, cost, pr.s, pr.y, pr.nu, pr.q, b2, samples);
        double eta_bar = norm2(dyn.f(pr.s, pr.y, pr.nu, h2.leader_argmin));
        Vec pq = axpy(-1.0, pr.q, pr.p);
        double rhs = cost.lip_running * delta + dyn.L * delta * norm2(pr.p) +
                     eta_bar * norm2(pq) + pr.lambda * delta * w2;
        rep.worst_violation = std::max(rep.worst_violation, h1.value - h2.value - rhs);
        HamParts h1f = hamiltonian_parts(dyn, cost, pr.t, pr.x, pr.mu, pr.p, b1, fine);
        rep.reported_gap = std::max(rep.reported_gap, h1.value - h1f.value);
    }
    rep.pass = rep.worst_violation <= 1e-8 + rep.reported_gap;
    return rep;
}

namespace {

struct FlatProbe {
    double t;
    std::size_t state;
};

double probe_distance(const ValueTable& tab, const FlatProbe& a, const FlatProbe& b,
                      std::vector<double>& w2_cache, std::size_t nstates) {
    double& w2 = w2_cache[a.state * nstates + b.state];
    if (w2 < 0.0) {
        if (a.state == b.state)
            w2 = 0.0;
        else
            w2 = plan_cost(
                optimal_plan(tab.states[a.state].second, tab.states[b.state].second, 2.0), 2.0);
    }
    return std::fabs(a.t - b.t) +
           torus_distance(tab.states[a.state].first, tab.states[b.state].first) + w2;
}

}  // namespace

double table_lipschitz(const ValueTable& table) {
    const std::size_t nt = table.times.size(), ns = table.states.size();
    std::vector<double> w2_cache(ns * ns, -1.0);
    double lip = 0.0;
    for (std::size_t i = 0; i < nt; ++i)
        for (std::size_t a = 0; a < ns; ++a)
            for (std::size_t j = 0; j < nt; ++j)
                for (std::size_t b = 0; b < ns; ++b) {
                    if (i == j && a == b) continue;
                    FlatProbe A{table.times[i], a}, B{table.times[j], b};
                    double d = probe_distance(table, A, B, w2_cache, ns);
                    if (d > 1e-12)
                        lip = std::max(lip,
                                       std::fabs(table.values[i][a] - table.values[j][b]) / d);
                }
    return lip;
}

double choose_eta(double eps, double lip) {
    if (!(eps > 0.0)) throw std::invalid_argument("choose_eta: eps must be > 0");
    if (16.0 * eps * lip >= 1.0)
        throw std::invalid_argument("choose_eta: requires 16*eps*lip < 1");
    return (1.0 - 8.0 * eps * lip) / (8.0 * eps);
}

DoublingReport doubling_experiment(const ValueTable& v1, const ValueTable& v2, double eps,
                                   double eta, double grid_tol) {
    const std::size_t nt = v1.times.size(), ns = v1.states.size();
    if (v2.times.size() != nt || v2.states.size() != ns)
        throw std::invalid_argument("doubling_experiment: tables must share one probe set");
    if (nt * ns < 2) throw std::invalid_argument("doubling_experiment: need >= 2 probes");
    std::vector<FlatProbe> probes;
    probes.reserve(nt * ns);
    for (std::size_t i = 0; i < nt; ++i)
        for (std::size_t a = 0; a < ns; ++a) probes.push_back({v1.times[i], a});
    auto value = [ns](const ValueTable& tab, std::size_t flat) {
        return tab.values[flat / ns][flat % ns];
    };
    std::vector<double> w2_cache(ns * ns, -1.0);

    DoublingReport rep;
    bool have = false;
    for (std::size_t A = 0; A < probes.size(); ++A)
        for (std::size_t B = 0; B < probes.size(); ++B) {
            double d = probe_distance(v1, probes[A], probes[B], w2_cache, ns);
            double phi = value(v2, A) - value(v1, B) + d * d / (2.0 * eps) - eta * probes[B].t;
            if (!have || phi < rep.phi_min) {
                rep.phi_min = phi;
                rep.argmin_a = A;
                rep.argmin_b = B;
                rep.rho = d;
                have = true;
            }
        }
    rep.lip_v1 = table_lipschitz(v1);
    rep.rho_bound = 2.0 * (eta + rep.lip_v1) * eps;
    rep.rho_ok = rep.rho <= rep.rho_bound + grid_tol;
    rep.min_gap = value(v2, 0) - value(v1, 0);
    for (std::size_t A = 1; A < probes.size(); ++A)
        rep.min_gap = std::min(rep.min_gap, value(v2, A) - value(v1, A));
    return rep;
}

}  // namespace wvar
