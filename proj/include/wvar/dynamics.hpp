#pragma once

#include <functional>
#include <string>
#include <vector>

#include "wvar/variations.hpp"

namespace wvar {

/// Control value in the closed unit ball of R^d.
using Control = Vec;

/// Parameterized leader/follower dynamics. The set-valued maps are realized
/// through their parameterizations over the closed unit control ball.
struct ControlledDynamics {
    std::string name;
    // leader velocity f(t, x, mu, u)
    std::function<Vec(double, const TorusPoint&, const DiscreteMeasure&, const Control&)> f;
    // follower velocity g(t, x, leader, mu, u)
    std::function<Vec(double, const TorusPoint&, const TorusPoint&, const DiscreteMeasure&,
                      const Control&)> g;
    double L = 1.0;  // Lipschitz constant in x, leader, and W2 arguments
};

/// Builtin ids: zero, reach, decoupled, chase.
ControlledDynamics builtin_dynamics(const std::string& name, std::size_t dim);

struct LeaderFollowerSolution {
    std::vector<double> times;
    std::vector<Vec> leader;        // lifted leader path on the grid
    TrajectoryEnsemble followers;
    Control u0;
    std::vector<Control> ubar;      // one control per follower atom
    std::vector<std::vector<double>> window_residuals;  // Picard update distances per window

    TorusPoint leader_at(double t) const;
    DiscreteMeasure measure_at(double t) const { return followers.at_time(t); }
};

/// Largest window length tau with 2 L^2 tau^2 e^{2 L tau} (tau + 2)^2 < 1/2
/// (bisection to 1e-10, capped at 1e6).
double max_contraction_horizon(double L);

/// Picard iteration over contraction windows; leader and measure arguments on
/// the right-hand side are frozen at the previous iterate. RK4 on lifts.
LeaderFollowerSolution solve_leader_follower(const ControlledDynamics& dyn, const TorusPoint& x0,
                                             const DiscreteMeasure& mu0, const Control& u0,
                                             const std::vector<Control>& ubar, double t0, double T,
                                             std::size_t steps, double tol = 1e-9);

/// One Picard follower sweep: RK4 of every atom against the frozen leader and
/// measure samples (globally indexed on `times`, window [i0, i1]). The OpenMP
/// and serial paths produce identical results; the flag exists for the
/// reference kernel used in tests and benchmarks.
std::vector<std::vector<Vec>> integrate_followers(
    const ControlledDynamics& dyn, const DiscreteMeasure& base, const std::vector<Control>& ubar,
    const std::vector<double>& times, std::size_t i0, std::size_t i1,
    const std::vector<Vec>& leader_prev, const std::vector<std::vector<Vec>>& foll_prev,
    const std::vector<Vec>& start, bool parallel);

/// Weak continuity-equation defect: max over test functions and check
/// intervals of length dcheck of |int phi dmu(t+dcheck) - int phi dmu(t) -
/// trapz of int <grad phi, xdot> dmu|.
double continuity_residual(const LeaderFollowerSolution& sol,
                           const std::vector<TestFunction>& testset, double dcheck);

/// Max gap between one-sided difference quotients at t0 and the prescribed
/// initial velocities f(t0, x0, mu0, u0), g(t0, x_k, x0, mu0, ubar_k).
double initial_velocity_check(const LeaderFollowerSolution& sol, const ControlledDynamics& dyn);

}  // namespace wvar
