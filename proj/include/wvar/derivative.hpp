#pragma once

#include <stdexcept>

#include "wvar/functionals.hpp"
#include "wvar/variations.hpp"

namespace wvar {

struct DerivativeReport {
    std::vector<double> t_grid;
    std::vector<double> residuals;  // R(t), nonnegative
    double slope = 0.0;             // log-log fit of R against t
    bool verdict = false;           // true iff R(t) -> 0 per the fixed thresholds
    AdmissibilityReport admissibility;
};

/// Thrown when the family fails the admissibility check; carries the report.
struct AdmissibilityError : std::runtime_error {
    AdmissibilityReport report;
    explicit AdmissibilityError(AdmissibilityReport r)
        : std::runtime_error("variation family failed the admissibility check"),
          report(std::move(r)) {}
};

/// First-order Taylor defect along the family:
/// R(t) = (1/t) |U(pr2# pi_t) - U(mu) - sum c_ij <p(x_i), y_j - x_i>|
/// with displacements in the wrapped window around x_i.
DerivativeReport derivative_residual(const Functional& U, const VariationFamily& family,
                                     const Covector& p, double q,
                                     const std::vector<double>& t_grid);

/// Polynomial (Neville) extrapolation of v(t) to t = 0 over the given grid;
/// returns the table entry with the smallest estimated error.
double richardson_extrapolate(const std::vector<double>& t, const std::vector<double>& v);

/// Extrapolated quotient of U along the transport-map family of psi.
double directional_derivative_map(const Functional& U, const DiscreteMeasure& mu,
                                  const Covector& psi, const std::vector<double>& t_grid);

/// Extrapolated quotient of U along the flat family of pi.
double directional_derivative_flat(const Functional& U, const TransportPlan& pi,
                                   const std::vector<double>& t_grid);

/// Central differences in y of the numeric flat derivative (s fixed at 1e-5).
Covector intrinsic_derivative(const Functional& U, const DiscreteMeasure& m, double grid_step);

struct EquivalenceReport {
    double max_residual = 0.0;          // worst final residual over families/samples
    double max_intrinsic_error = 0.0;   // intrinsic vs closed gradient
    double max_directional_error = 0.0; // corollary formulas vs closed pairings
    bool all_verdicts = true;
};

EquivalenceReport equivalence_harness(const Functional& U,
                                      const std::vector<DiscreteMeasure>& samples,
                                      unsigned seed);

/// Max over grid pairs (s,t) of |U(mu_t) - U(mu_s) - trapz of int <p, v> dmu|.
double integral_form_check(const Functional& U, const TrajectoryEnsemble& curve,
                           const VelocityField& v);

}  // namespace wvar
