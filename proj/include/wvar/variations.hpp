#pragma once

#include <functional>
#include <string>
#include <vector>

#include "wvar/transport.hpp"

namespace wvar {

/// Weighted set of time-sampled lifted paths, one per atom of a base measure.
/// Paths live in R^d (unwrapped); wrapping happens at readout.
struct TrajectoryEnsemble {
    DiscreteMeasure base;
    std::vector<double> times;              // strictly increasing grid
    std::vector<std::vector<Vec>> paths;    // paths[k][i] = lift of atom k at times[i]

    TrajectoryEnsemble() = default;
    TrajectoryEnsemble(DiscreteMeasure b, std::vector<double> t, std::vector<std::vector<Vec>> p);

    double horizon() const { return times.back(); }
    /// Linear interpolation of path k on the lift; t must lie in the grid span.
    Vec position_lift(std::size_t k, double t) const;
    /// Measure carried at time t (wrapped positions, base weights).
    DiscreteMeasure at_time(double t) const;
};

enum class VariationKind { transport_map, flat, lagrangian, eulerian };

std::string kind_name(VariationKind k);

/// A computable map t -> plan from the fixed base measure, t in [0, horizon].
struct VariationFamily {
    DiscreteMeasure base;
    VariationKind kind;
    double horizon = 0.0;
    std::function<TransportPlan(double)> eval;

    TransportPlan evaluate(double t) const;
};

using VelocityField = std::function<Vec(double, const TorusPoint&)>;

VariationFamily make_transport_map_variation(const DiscreteMeasure& mu, const Covector& phi,
                                             double T);
VariationFamily make_flat_variation(const TransportPlan& pi, double T);
VariationFamily make_lagrangian_variation(const TrajectoryEnsemble& eta, double T);
/// RK4 integration of every atom through v on the lifted coordinates.
TrajectoryEnsemble integrate_velocity_field(const DiscreteMeasure& mu, const VelocityField& v,
                                            double T, std::size_t steps);

/// Integrates atoms through v with classical RK4 on lifts, then delegates to
/// the Lagrangian construction.
VariationFamily make_eulerian_variation(const DiscreteMeasure& mu, const VelocityField& v,
                                        double T, std::size_t steps);

/// Pointwise composition with a perturbing plan family.
VariationFamily perturb_family(const VariationFamily& family,
                               const std::function<TransportPlan(double)>& hat);
/// Pointwise convex combination s*f1 + (1-s)*f2 (concatenated target atoms).
VariationFamily mix_families(const VariationFamily& f1, const VariationFamily& f2, double s);

struct AdmissibilityReport {
    std::vector<double> t_grid;
    std::vector<bool> first_marginal_ok;  // condition (a), exact
    std::vector<double> bl_gap;           // condition (b) sequence
    std::vector<double> rate;             // condition (c): plan_cost(pi_t, q) / t
    double C = 0.0;                       // max rate over the final half of the grid
    double loglog_slope = 0.0;            // fitted exponent of rate vs t
    bool cond_a = false, cond_b = false, cond_c = false;
    bool admissible = false;
};

/// Default grid t_k = T * 2^{-k}, k = 1..levels (decreasing).
std::vector<double> geometric_grid(double T, std::size_t levels = 20);

AdmissibilityReport check_admissibility(const VariationFamily& family, double q,
                                        const std::vector<double>& t_grid,
                                        const std::vector<TestFunction>& testset);

/// Least-squares slope of log(y) against log(x) over pairs with y > 0.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace wvar
