#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "wvar/dynamics.hpp"
#include "wvar/functionals.hpp"

namespace wvar {

/// Running and terminal costs with declared bounds.
struct CostSpec {
    std::string name;
    std::function<double(const TorusPoint&, const DiscreteMeasure&)> running;
    std::function<double(const TorusPoint&, const DiscreteMeasure&)> terminal;
    double lip_running = 1.0, sup_running = 1.0;
    double lip_terminal = 1.0, sup_terminal = 1.0;
};

/// Builtin ids: zero, constant, moment, target (terminal squared torus
/// distance of the leader to 0.5 per coordinate).
CostSpec builtin_cost(const std::string& name);

/// First-order jet for sub/superdifferential tests at a probe (t, x, mu).
struct Jet {
    double p_t = 0.0;
    Vec p_x;
    Covector p_mu;
};

/// One admissible control choice for the whole horizon.
struct ControlChoice {
    std::string label;
    Control u0;
    std::function<Control(const TorusPoint&)> ubar;  // follower control field
};

/// Constant-control grid {(u0, ubar const)} built from n values per axis.
std::vector<ControlChoice> constant_control_grid(std::size_t dim, std::size_t n_per_axis);

struct ValueTable {
    std::vector<double> times;
    std::vector<std::pair<TorusPoint, DiscreteMeasure>> states;
    std::vector<std::string> state_mu_refs;   // CSV refs for serialization
    std::vector<std::vector<double>> values;  // values[time][state]
    std::vector<std::vector<std::string>> controls;  // argmin labels, same shape
};

std::string value_table_to_json(const ValueTable& table);

double cost_J(const CostSpec& cost, const LeaderFollowerSolution& sol);

/// Finite-grid minimization of cost_J over control choices; deterministic
/// tie-break by grid order. t0 == T returns the terminal cost exactly.
std::pair<double, ControlChoice> value_function(const CostSpec& cost,
                                                const ControlledDynamics& dyn, double t0,
                                                const TorusPoint& x0, const DiscreteMeasure& mu0,
                                                double T,
                                                const std::vector<ControlChoice>& control_grid,
                                                std::size_t steps);

/// |V(t0) - inf over first-leg controls of {leg cost + V(tau, state at tau)}|.
double dpp_residual(const CostSpec& cost, const ControlledDynamics& dyn, double t0,
                    const TorusPoint& x0, const DiscreteMeasure& mu0, double tau, double T,
                    const std::vector<ControlChoice>& control_grid, std::size_t steps);

/// Fixed deterministic control sample set: 0, +-e_i, then 2d+1 seeded points
/// of the closed unit ball.
std::vector<Control> default_control_samples(std::size_t dim, unsigned seed);

/// Sampled infimum of L(xi,mu) + <f, p_x> + sum_k w_k <g_k, p_mu(x_k)> with
/// independent per-atom minimization (exact decoupling of the integrand).
double hamiltonian(const ControlledDynamics& dyn, const CostSpec& cost, double t,
                   const TorusPoint& xi, const DiscreteMeasure& mu, const Vec& p_x,
                   const Covector& p_mu, const std::vector<Control>& control_samples);

using ValueOracle = std::function<double(double, const TorusPoint&, const DiscreteMeasure&)>;

struct JetReport {
    std::vector<double> scales;
    std::vector<double> worst_quotient;  // per scale, max over probes/families
    bool member = false;                 // jet accepted for the tested sign
};

/// (i) checks jet membership in the superdifferential over an (h, y)-grid and
/// one family per variation kind; (ii) returns p_t + H. The residual is the
/// amount by which p_t + H falls below 0.
std::pair<JetReport, double> subsolution_residual(const ValueOracle& V,
                                                  const ControlledDynamics& dyn,
                                                  const CostSpec& cost, double t,
                                                  const TorusPoint& xi, const DiscreteMeasure& mu,
                                                  const Jet& jet, double T, double tol,
                                                  unsigned seed);

/// Mirror image with the subdifferential; residual is the amount above 0.
std::pair<JetReport, double> supersolution_residual(const ValueOracle& V,
                                                    const ControlledDynamics& dyn,
                                                    const CostSpec& cost, double t,
                                                    const TorusPoint& xi,
                                                    const DiscreteMeasure& mu, const Jet& jet,
                                                    double T, double tol, unsigned seed);

struct HamProbe {
    double t = 0.0, s = 0.0;
    TorusPoint x, y;
    DiscreteMeasure mu, nu;
    Vec p, q;
    double lambda = 1.0;
};

struct HamComparisonReport {
    double worst_violation = 0.0;  // max of LHS - RHS over probes
    double reported_gap = 0.0;     // control-sampling gap estimate
    bool pass = false;
};

/// Audit of H(t,x,mu,p,l p^pi) - H(s,y,nu,q,l p^{pi^-1}) against the bound
/// C D + L D |p| + |eta| |p-q| + l D W2, D = |t-s| + d(x,y) + W2.
HamComparisonReport hamiltonian_comparison_check(const ControlledDynamics& dyn,
                                                 const CostSpec& cost,
                                                 const std::vector<HamProbe>& probes,
                                                 unsigned seed);

struct DoublingReport {
    std::size_t argmin_a = 0, argmin_b = 0;  // flattened (time, state) indices
    double phi_min = 0.0;
    double rho = 0.0;           // d_X between the two minimizing copies
    double rho_bound = 0.0;     // 2 (eta + Lip(V1)) eps
    double lip_v1 = 0.0;        // table-estimated Lipschitz constant
    double min_gap = 0.0;       // min over probes of V2 - V1
    bool rho_ok = false;
};

/// Table-estimated Lipschitz constant w.r.t. the product metric d_X.
double table_lipschitz(const ValueTable& table);

/// Midpoint of the feasible interval of 4 (eta + lip)^2 eps < eta; requires
/// 16 eps lip < 1.
double choose_eta(double eps, double lip);

/// Exhaustive minimization of V2(a) - V1(b) + (1/2eps) d_X(a,b)^2 - eta s_b
/// over all probe pairs of two tables sharing one probe set.
DoublingReport doubling_experiment(const ValueTable& v1, const ValueTable& v2, double eps,
                                   double eta, double grid_tol);

}  // namespace wvar
