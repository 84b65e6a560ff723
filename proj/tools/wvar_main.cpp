// wvar: command-line front end for the torus optimal-transport and
// leader-follower control toolkit.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wvar/derivative.hpp"
#include "wvar/hjb.hpp"
#include "wvar/report.hpp"

using namespace wvar;
using nlohmann::ordered_json;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitError = 1;
constexpr int kExitCheckFailed = 2;
constexpr int kExitUsage = 64;
constexpr int kExitMissingFile = 66;

struct Global {
    unsigned seed = 1;
    int threads = 0;
    std::string out_dir = ".";
};

std::string resolve_out(const Global& g, const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_absolute()) return path;
    return (std::filesystem::path(g.out_dir) / p).string();
}

void write_text(const std::string& path, const std::string& body) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << body;
}

struct MissingFile : std::runtime_error {
    using std::runtime_error::runtime_error;
};

DiscreteMeasure load_measure_checked(const std::string& path) {
    if (!std::filesystem::exists(path)) throw MissingFile("missing input file: " + path);
    return load_measure_csv(path);
}

ordered_json report_skeleton(const std::string& subcommand, const Global& g,
                             const ordered_json& config,
                             const std::vector<std::string>& input_files) {
    ordered_json rep;
    rep["tool"] = kVersion;
    rep["subcommand"] = subcommand;
    ordered_json cfg = config;
    cfg["seed"] = g.seed;
    cfg["threads"] = g.threads;
    cfg["out_dir"] = g.out_dir;
    rep["config"] = cfg;
    ordered_json inputs = ordered_json::object();
    for (const auto& f : input_files) inputs[f] = hash_file(f);
    rep["inputs"] = inputs;
    return rep;
}

Vec parse_vec(const std::string& s) {
    Vec out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    if (out.empty()) throw std::invalid_argument("empty vector literal '" + s + "'");
    return out;
}

std::vector<double> parse_tgrid(const std::string& s) {
    // geometric:<T>:<levels>
    std::stringstream ss(s);
    std::string kind, a, b;
    std::getline(ss, kind, ':');
    std::getline(ss, a, ':');
    std::getline(ss, b, ':');
    if (kind != "geometric" || a.empty() || b.empty())
        throw CLI::ValidationError("--tgrid", "expected geometric:<T>:<levels>");
    return geometric_grid(std::stod(a), std::stoul(b));
}

DiscreteMeasure seeded_measure(std::mt19937& rng, std::size_t atoms, std::size_t dim) {
    std::uniform_real_distribution<double> pos(0.0, 1.0);
    std::uniform_real_distribution<double> wdist(0.1, 1.0);
    std::vector<TorusPoint> pts;
    std::vector<double> w(atoms);
    double total = 0.0;
    for (std::size_t k = 0; k < atoms; ++k) {
        Vec x(dim);
        for (double& c : x) c = pos(rng);
        pts.emplace_back(x);
        w[k] = wdist(rng);
        total += w[k];
    }
    for (double& x : w) x /= total;
    return DiscreteMeasure(std::move(pts), std::move(w));
}

// shared family generators (vary / deriv): one construction per kind,
// randomized from the run seed
VariationFamily make_cli_family(const std::string& kind, const DiscreteMeasure& mu,
                                std::mt19937& rng, double T, double amp) {
    const std::size_t d = mu.dim();
    std::uniform_real_distribution<double> small(-amp, amp);
    if (kind == "map") {
        std::vector<Vec> vals(mu.size(), Vec(d));
        for (auto& v : vals)
            for (double& c : v) c = small(rng);
        return make_transport_map_variation(mu, Covector(mu, std::move(vals)), T);
    }
    if (kind == "flat") {
        std::uniform_real_distribution<double> tiny(-1e-4, 1e-4);
        std::vector<TorusPoint> tgt;
        for (std::size_t k = 0; k < mu.size(); ++k) {
            Vec x = mu.points[k].c;
            for (double& c : x) c += (amp == 0.0 ? 0.0 : tiny(rng));
            tgt.push_back(wrap(x));
        }
        return make_flat_variation(map_plan(mu, std::move(tgt)), std::min(1.0, T));
    }
    if (kind == "lagrangian") {
        std::vector<Vec> a(mu.size(), Vec(d)), b(mu.size(), Vec(d));
        for (auto& v : a)
            for (double& c : v) c = small(rng);
        for (auto& v : b)
            for (double& c : v) c = small(rng);
        const std::size_t K = 32;
        std::vector<double> times(K + 1);
        std::vector<std::vector<Vec>> paths(mu.size());
        for (std::size_t i = 0; i <= K; ++i) times[i] = T * static_cast<double>(i) / K;
        for (std::size_t k = 0; k < mu.size(); ++k)
            for (std::size_t i = 0; i <= K; ++i) {
                double t = times[i];
                Vec x = mu.points[k].c;
                for (std::size_t c = 0; c < d; ++c) x[c] += t * a[k][c] + t * t * b[k][c];
                paths[k].push_back(x);
            }
        return make_lagrangian_variation(TrajectoryEnsemble(mu, std::move(times), std::move(paths)),
                                         T);
    }
    if (kind == "eulerian") {
        Vec va(d), vp(d);
        for (std::size_t c = 0; c < d; ++c) {
            va[c] = small(rng);
            vp[c] = small(rng);
        }
        VelocityField v = [va, vp](double, const TorusPoint& x) {
            Vec out(x.dim());
            for (std::size_t c = 0; c < x.dim(); ++c)
                out[c] = va[c] * std::sin(2.0 * std::numbers::pi * x[0] + vp[c]);
            return out;
        };
        return make_eulerian_variation(mu, v, T, 64);
    }
    throw CLI::ValidationError("--kind", "unknown family kind '" + kind + "'");
}

ordered_json admissibility_json(const AdmissibilityReport& rep) {
    ordered_json j;
    j["t_grid"] = rep.t_grid;
    j["bl_gap"] = rep.bl_gap;
    j["rate"] = rep.rate;
    j["C"] = rep.C;
    j["loglog_slope"] = rep.loglog_slope;
    j["cond_a"] = rep.cond_a;
    j["cond_b"] = rep.cond_b;
    j["cond_c"] = rep.cond_c;
    j["admissible"] = rep.admissible;
    return j;
}

ValueOracle reach_value_oracle(double T) {
    return [T](double t, const TorusPoint& x, const DiscreteMeasure&) {
        double d = torus_distance(x, TorusPoint(Vec(x.dim(), 0.5)));
        double rem = std::max(0.0, d - (T - t));
        return rem * rem;
    };
}

Jet reach_jet(double T, double t, const TorusPoint& x, const DiscreteMeasure& mu) {
    double delta = wrapped_delta(x, TorusPoint(Vec{0.5}))[0];
    double d = std::fabs(delta);
    double rem = std::max(0.0, d - (T - t));
    Jet j;
    j.p_t = 2.0 * rem;
    j.p_x = Vec{2.0 * rem * (delta > 0.0 ? -1.0 : 1.0)};
    j.p_mu = Covector(mu, std::vector<Vec>(mu.size(), Vec(mu.dim(), 0.0)));
    return j;
}

ValueTable build_reach_table(const std::vector<double>& times, const std::vector<double>& xs,
                             double T, std::size_t n_controls, std::size_t steps) {
    ControlledDynamics dyn = builtin_dynamics("reach", 1);
    CostSpec cost = builtin_cost("target");
    auto grid = constant_control_grid(1, n_controls);
    ValueTable tab;
    tab.times = times;
    for (double x : xs) {
        tab.states.emplace_back(TorusPoint(Vec{x}), DiscreteMeasure::dirac(TorusPoint(Vec{x})));
        tab.state_mu_refs.push_back("dirac");
    }
    for (double t : times) {
        std::vector<double> row;
        std::vector<std::string> crow;
        for (const auto& [x, mu] : tab.states) {
            auto [v, ch] = value_function(cost, dyn, t, x, mu, T, grid, steps);
            row.push_back(v);
            crow.push_back(ch.label);
        }
        tab.values.push_back(std::move(row));
        tab.controls.push_back(std::move(crow));
    }
    return tab;
}

int run_ot(const Global& g, double q, const std::string& mu_path, const std::string& nu_path,
           const std::string& emit_plan, const std::string& report_path) {
    DiscreteMeasure mu = load_measure_checked(mu_path);
    DiscreteMeasure nu = load_measure_checked(nu_path);
    TransportPlan pi = optimal_plan(mu, nu, q);
    double cost = plan_cost(pi, q);
    if (!emit_plan.empty()) write_text(resolve_out(g, emit_plan), plan_to_json(pi));
    ordered_json cfg;
    cfg["q"] = q;
    cfg["mu"] = mu_path;
    cfg["nu"] = nu_path;
    ordered_json rep = report_skeleton("ot", g, cfg, {mu_path, nu_path});
    rep["results"]["cost"] = cost;
    rep["results"]["rows"] = pi.rows();
    rep["results"]["cols"] = pi.cols();
    write_text(resolve_out(g, report_path), rep.dump(2) + "\n");
    return kExitPass;
}

int run_vary(const Global& g, const std::string& kind, double q, const std::string& tgrid,
             std::size_t atoms, std::size_t dim, double amp, const std::string& report_path) {
    std::mt19937 rng(g.seed);
    DiscreteMeasure mu = seeded_measure(rng, atoms, dim);
    std::vector<double> grid = parse_tgrid(tgrid);
    double T = grid.front() * 2.0;
    VariationFamily fam = make_cli_family(kind, mu, rng, T, amp);
    AdmissibilityReport rep = check_admissibility(fam, q, grid, default_test_dictionary(dim));
    ordered_json cfg;
    cfg["kind"] = kind;
    cfg["q"] = q;
    cfg["tgrid"] = tgrid;
    cfg["atoms"] = atoms;
    cfg["dim"] = dim;
    cfg["amp"] = amp;
    ordered_json out = report_skeleton("vary", g, cfg, {});
    out["results"] = admissibility_json(rep);
    write_text(resolve_out(g, report_path), out.dump(2) + "\n");
    return rep.admissible ? kExitPass : kExitCheckFailed;
}

int run_deriv(const Global& g, const std::string& functional, const std::string& kind,
              std::size_t atoms, std::size_t dim, const std::string& report_path) {
    std::mt19937 rng(g.seed);
    DiscreteMeasure mu = seeded_measure(rng, atoms, dim);
    Functional U = builtin(functional);
    if (!U.has_closed_gradient())
        throw std::runtime_error("deriv: functional lacks a closed gradient");
    Covector p = U.closed_gradient(mu);
    const double T = 0.5;
    double q = (kind == "flat") ? 1.0 : 2.0;
    VariationFamily fam = make_cli_family(kind, mu, rng, T, 0.3);
    ordered_json cfg;
    cfg["functional"] = functional;
    cfg["family_kind"] = kind;
    cfg["atoms"] = atoms;
    cfg["dim"] = dim;
    ordered_json out = report_skeleton("deriv", g, cfg, {});
    try {
        DerivativeReport rep = derivative_residual(U, fam, p, q, geometric_grid(T, 20));
        out["results"]["t_grid"] = rep.t_grid;
        out["results"]["residuals"] = rep.residuals;
        out["results"]["slope"] = rep.slope;
        out["results"]["verdict"] = rep.verdict ? "derivative" : "not-derivative";
        out["results"]["admissibility"] = admissibility_json(rep.admissibility);
        write_text(resolve_out(g, report_path), out.dump(2) + "\n");
        return rep.verdict ? kExitPass : kExitCheckFailed;
    } catch (const AdmissibilityError& e) {
        out["results"]["verdict"] = "inadmissible-family";
        out["results"]["admissibility"] = admissibility_json(e.report);
        write_text(resolve_out(g, report_path), out.dump(2) + "\n");
        return kExitCheckFailed;
    }
}

int run_simulate(const Global& g, const std::string& dyn_id, const std::string& leader_x,
                 const std::string& mu_path, const std::string& u0_str, const std::string& ubar_str,
                 double t0, double T, std::size_t steps, double tol,
                 const std::string& traj_path, const std::string& report_path) {
    DiscreteMeasure mu0 = load_measure_checked(mu_path);
    const std::size_t d = mu0.dim();
    ControlledDynamics dyn = builtin_dynamics(dyn_id, d);
    TorusPoint x0(parse_vec(leader_x));
    Control u0 = parse_vec(u0_str);
    std::vector<Control> ubar;
    if (ubar_str.rfind("constant:", 0) == 0) {
        Control v = parse_vec(ubar_str.substr(9));
        ubar.assign(mu0.size(), v);
    } else if (ubar_str == "field:zero") {
        ubar.assign(mu0.size(), Control(d, 0.0));
    } else {
        throw CLI::ValidationError("--ubar", "expected constant:<v> or field:zero");
    }
    LeaderFollowerSolution sol = solve_leader_follower(dyn, x0, mu0, u0, ubar, t0, T, steps, tol);

    std::ostringstream csv;
    csv.precision(17);
    csv << "t";
    for (std::size_t a = 0; a < d; ++a) csv << ",leader_" << (a + 1);
    for (std::size_t k = 0; k < mu0.size(); ++k)
        for (std::size_t a = 0; a < d; ++a) csv << ",atom" << k << "_" << (a + 1);
    csv << "\n";
    for (std::size_t i = 0; i < sol.times.size(); ++i) {
        csv << sol.times[i];
        for (std::size_t a = 0; a < d; ++a) csv << "," << wrap_unit(sol.leader[i][a]);
        for (std::size_t k = 0; k < mu0.size(); ++k)
            for (std::size_t a = 0; a < d; ++a)
                csv << "," << wrap_unit(sol.followers.paths[k][i][a]);
        csv << "\n";
    }
    write_text(resolve_out(g, traj_path), csv.str());

    ordered_json cfg;
    cfg["dyn"] = dyn_id;
    cfg["leader_x"] = leader_x;
    cfg["mu"] = mu_path;
    cfg["u0"] = u0_str;
    cfg["ubar"] = ubar_str;
    cfg["t0"] = t0;
    cfg["T"] = T;
    cfg["steps"] = steps;
    cfg["tol"] = tol;
    ordered_json out = report_skeleton("simulate", g, cfg, {mu_path});
    out["results"]["windows"] = sol.window_residuals.size();
    out["results"]["iteration_log"] = sol.window_residuals;
    out["results"]["initial_velocity_gap"] = initial_velocity_check(sol, dyn);
    out["results"]["continuity_residual"] =
        continuity_residual(sol, default_test_dictionary(d), (T - t0) / 4.0);
    out["results"]["trajectory_csv"] = traj_path;
    write_text(resolve_out(g, report_path), out.dump(2) + "\n");
    return kExitPass;
}

int run_value(const Global& g, const std::string& instance, const std::string& times_str,
              const std::string& states_str, double T, std::size_t controls, std::size_t steps,
              const std::string& table_path, const std::string& report_path) {
    if (instance != "reach")
        throw CLI::ValidationError("--instance", "unknown instance '" + instance + "'");
    Vec times = parse_vec(times_str);
    Vec xs = parse_vec(states_str);
    ValueTable tab = build_reach_table(times, xs, T, controls, steps);
    write_text(resolve_out(g, table_path), value_table_to_json(tab) + "\n");
    ordered_json cfg;
    cfg["instance"] = instance;
    cfg["times"] = times_str;
    cfg["states"] = states_str;
    cfg["T"] = T;
    cfg["controls"] = controls;
    cfg["steps"] = steps;
    ordered_json out = report_skeleton("value", g, cfg, {});
    out["results"]["table"] = table_path;
    out["results"]["lipschitz"] = table_lipschitz(tab);
    write_text(resolve_out(g, report_path), out.dump(2) + "\n");
    return kExitPass;
}

int run_hjb_check(const Global& g, const std::string& mode, double eps, double eta,
                  const std::string& report_path) {
    ordered_json cfg;
    cfg["mode"] = mode;
    cfg["eps"] = eps;
    cfg["eta"] = eta;
    ordered_json out = report_skeleton("hjb-check", g, cfg, {});
    bool pass = false;

    if (mode == "sub" || mode == "super") {
        const double T = 0.5;
        ControlledDynamics dyn = builtin_dynamics("reach", 1);
        CostSpec cost = builtin_cost("target");
        ValueOracle V = reach_value_oracle(T);
        double t = 0.1;
        TorusPoint x(Vec{0.05});
        DiscreteMeasure mu = DiscreteMeasure::dirac(TorusPoint(Vec{0.3}));
        Jet jet = reach_jet(T, t, x, mu);
        auto [rep, val] = mode == "sub"
                              ? subsolution_residual(V, dyn, cost, t, x, mu, jet, T, 1e-2, g.seed)
                              : supersolution_residual(V, dyn, cost, t, x, mu, jet, T, 1e-2, g.seed);
        double residual = mode == "sub" ? std::max(0.0, -val) : std::max(0.0, val);
        pass = rep.member && residual <= 1e-9;
        out["results"]["member"] = rep.member;
        out["results"]["scales"] = rep.scales;
        out["results"]["worst_quotient"] = rep.worst_quotient;
        out["results"]["p_t_plus_H"] = val;
        out["results"]["residual"] = residual;
    } else if (mode == "compare") {
        std::mt19937 rng(g.seed);
        std::uniform_real_distribution<double> pos(0.2, 0.8);
        std::uniform_real_distribution<double> cov(-1.0, 1.0);
        std::uniform_real_distribution<double> lam(0.5, 2.0);
        std::uniform_real_distribution<double> tim(0.0, 0.5);
        ControlledDynamics dyn = builtin_dynamics("chase", 1);
        CostSpec cost = builtin_cost("moment");
        auto equal_measure = [&](std::size_t n) {
            std::vector<TorusPoint> pts;
            for (std::size_t k = 0; k < n; ++k) pts.emplace_back(Vec{pos(rng)});
            return DiscreteMeasure::uniform(std::move(pts));
        };
        std::vector<HamProbe> probes;
        for (int i = 0; i < 100; ++i) {
            HamProbe pr;
            pr.t = tim(rng);
            pr.s = tim(rng);
            pr.mu = equal_measure(3);
            pr.nu = equal_measure(3);
            pr.x = TorusPoint(Vec{pos(rng)});
            pr.y = TorusPoint(Vec{pos(rng)});
            pr.p = Vec{cov(rng)};
            pr.q = Vec{cov(rng)};
            pr.lambda = lam(rng);
            probes.push_back(std::move(pr));
        }
        HamComparisonReport rep = hamiltonian_comparison_check(dyn, cost, probes, g.seed);
        pass = rep.pass;
        out["results"]["worst_violation"] = rep.worst_violation;
        out["results"]["reported_gap"] = rep.reported_gap;
        out["results"]["pass"] = rep.pass;
    } else if (mode == "doubling") {
        const double T = 0.3;
        std::vector<double> times = {0.0, 0.1, 0.2};
        std::vector<double> xs = {0.3, 0.45, 0.55, 0.7};
        ValueTable v1 = build_reach_table(times, xs, T, 17, 6);
        ValueTable v2 = build_reach_table(times, xs, T, 5, 6);
        double lip = table_lipschitz(v1);
        double eta_used = eta > 0.0 ? eta : choose_eta(eps, lip);
        DoublingReport rep = doubling_experiment(v1, v2, eps, eta_used, 1e-9);
        pass = rep.rho_ok && rep.min_gap >= -1e-12;
        out["results"]["eta_used"] = eta_used;
        out["results"]["lip_v1"] = rep.lip_v1;
        out["results"]["rho"] = rep.rho;
        out["results"]["rho_bound"] = rep.rho_bound;
        out["results"]["rho_ok"] = rep.rho_ok;
        out["results"]["min_gap"] = rep.min_gap;
        out["results"]["phi_min"] = rep.phi_min;
        out["results"]["argmin_a"] = rep.argmin_a;
        out["results"]["argmin_b"] = rep.argmin_b;
    } else {
        throw CLI::ValidationError("--mode", "expected sub, super, compare, or doubling");
    }
    write_text(resolve_out(g, report_path), out.dump(2) + "\n");
    return pass ? kExitPass : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wvar: optimal transport, variations, and leader-follower control on the torus"};
    app.require_subcommand(1);
    Global g;
    app.add_option("--seed", g.seed, "random seed for all seeded constructions");
    app.add_option("--threads", g.threads,
                   "worker threads (the WVAR_THREADS environment variable overrides this)");
    app.add_option("--out-dir", g.out_dir, "directory for report and artifact files");

    // ot
    auto* ot = app.add_subcommand("ot", "optimal transport between two particle CSV files");
    double ot_q = 2.0;
    std::string ot_mu, ot_nu, ot_plan, ot_report = "ot_report.json";
    ot->add_option("--q", ot_q, "cost exponent (>= 1)");
    ot->add_option("--mu", ot_mu, "source measure CSV")->required();
    ot->add_option("--nu", ot_nu, "target measure CSV")->required();
    ot->add_option("--emit-plan", ot_plan, "write the optimal plan as JSON");
    ot->add_option("--report", ot_report, "report JSON path");

    // vary
    auto* vary = app.add_subcommand("vary", "build a variation family and check admissibility");
    std::string vary_kind = "map", vary_tgrid = "geometric:0.5:14",
                vary_report = "vary_report.json";
    double vary_q = 2.0, vary_amp = 0.3;
    std::size_t vary_atoms = 8, vary_dim = 1;
    vary->add_option("--kind", vary_kind, "map, flat, lagrangian, or eulerian");
    vary->add_option("--q", vary_q, "admissibility exponent");
    vary->add_option("--tgrid", vary_tgrid, "geometric:<T>:<levels>");
    vary->add_option("--atoms", vary_atoms, "atoms in the seeded base measure");
    vary->add_option("--dim", vary_dim, "torus dimension");
    vary->add_option("--amp", vary_amp, "generator amplitude (0 gives the zero field)");
    vary->add_option("--report", vary_report, "report JSON path");

    // deriv
    auto* deriv = app.add_subcommand("deriv", "derivative residual of a builtin functional");
    std::string deriv_fun = "linear:sin", deriv_kind = "map", deriv_report = "deriv_report.json";
    std::size_t deriv_atoms = 8, deriv_dim = 1;
    deriv->add_option("--functional", deriv_fun, "builtin functional id");
    deriv->add_option("--family-kind", deriv_kind, "map, flat, lagrangian, or eulerian");
    deriv->add_option("--atoms", deriv_atoms, "atoms in the seeded base measure");
    deriv->add_option("--dim", deriv_dim, "torus dimension");
    deriv->add_option("--report", deriv_report, "report JSON path");

    // simulate
    auto* sim = app.add_subcommand("simulate", "solve the leader-follower system");
    std::string sim_dyn = "chase", sim_leader = "0.5", sim_mu, sim_u0 = "0",
                sim_ubar = "constant:0", sim_traj = "trajectory.csv",
                sim_report = "simulate_report.json";
    double sim_t0 = 0.0, sim_T = 0.3, sim_tol = 1e-9;
    std::size_t sim_steps = 60;
    sim->add_option("--dyn", sim_dyn, "builtin dynamics id");
    sim->add_option("--leader-x", sim_leader, "initial leader position (comma separated)");
    sim->add_option("--mu", sim_mu, "initial crowd CSV")->required();
    sim->add_option("--u0", sim_u0, "leader control (comma separated)");
    sim->add_option("--ubar", sim_ubar, "follower controls: constant:<v> or field:zero");
    sim->add_option("--t0", sim_t0, "start time");
    sim->add_option("--T", sim_T, "horizon");
    sim->add_option("--steps", sim_steps, "time steps");
    sim->add_option("--tol", sim_tol, "Picard stopping tolerance");
    sim->add_option("--emit-trajectory", sim_traj, "trajectory CSV path");
    sim->add_option("--report", sim_report, "report JSON path");

    // value
    auto* value = app.add_subcommand("value", "tabulate the finite-grid value function");
    std::string val_instance = "reach", val_times = "0,0.1,0.2",
                val_states = "0.3,0.45,0.55,0.7", val_table = "value_table.json",
                val_report = "value_report.json";
    double val_T = 0.3;
    std::size_t val_controls = 9, val_steps = 6;
    value->add_option("--instance", val_instance, "builtin instance id");
    value->add_option("--times", val_times, "probe times (comma separated)");
    value->add_option("--states", val_states, "leader probe positions (comma separated)");
    value->add_option("--T", val_T, "horizon");
    value->add_option("--controls", val_controls, "control grid points per axis");
    value->add_option("--steps", val_steps, "time steps per solve");
    value->add_option("--emit-table", val_table, "value table JSON path");
    value->add_option("--report", val_report, "report JSON path");

    // hjb-check
    auto* hjb = app.add_subcommand("hjb-check", "viscosity and comparison checks");
    std::string hjb_mode = "sub", hjb_report = "hjb_report.json";
    double hjb_eps = 0.1, hjb_eta = -1.0;
    hjb->add_option("--mode", hjb_mode, "sub, super, compare, or doubling");
    hjb->add_option("--eps", hjb_eps, "doubling penalization parameter");
    hjb->add_option("--eta", hjb_eta, "doubling linear-in-time weight (negative = auto)");
    hjb->add_option("--report", hjb_report, "report JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    configure_threads(g.threads);
    try {
        if (*ot) return run_ot(g, ot_q, ot_mu, ot_nu, ot_plan, ot_report);
        if (*vary)
            return run_vary(g, vary_kind, vary_q, vary_tgrid, vary_atoms, vary_dim, vary_amp,
                            vary_report);
        if (*deriv) return run_deriv(g, deriv_fun, deriv_kind, deriv_atoms, deriv_dim, deriv_report);
        if (*sim)
            return run_simulate(g, sim_dyn, sim_leader, sim_mu, sim_u0, sim_ubar, sim_t0, sim_T,
                                sim_steps, sim_tol, sim_traj, sim_report);
        if (*value)
            return run_value(g, val_instance, val_times, val_states, val_T, val_controls,
                             val_steps, val_table, val_report);
        if (*hjb) return run_hjb_check(g, hjb_mode, hjb_eps, hjb_eta, hjb_report);
    } catch (const MissingFile& e) {
        std::cerr << "wvar: " << e.what() << "\n";
        return kExitMissingFile;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "wvar: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "wvar: " << e.what() << "\n";
        return kExitError;
    }
    return kExitUsage;
}
