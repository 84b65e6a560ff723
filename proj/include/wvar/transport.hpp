#pragma once

#include <string>
#include <utility>
#include <vector>

#include "wvar/measure.hpp"

namespace wvar {

/// One d-vector per atom of a base measure (a sampled covector field).
struct Covector {
    DiscreteMeasure base;
    std::vector<Vec> values;

    Covector() = default;
    Covector(DiscreteMeasure b, std::vector<Vec> v);

    /// (sum_k w_k |v_k|^q)^{1/q}
    double lq_norm(double q) const;
};

/// Dense coupling between two discrete measures. Atoms with zero source or
/// target weight are dropped at construction.
struct TransportPlan {
    DiscreteMeasure source;
    DiscreteMeasure target;
    std::vector<double> coupling;  // row-major N x M

    TransportPlan() = default;
    TransportPlan(DiscreteMeasure src, DiscreteMeasure tgt, std::vector<double> c);

    std::size_t rows() const { return source.size(); }
    std::size_t cols() const { return target.size(); }
    double at(std::size_t i, std::size_t j) const { return coupling[i * cols() + j]; }
};

TransportPlan diagonal_plan(const DiscreteMeasure& mu);
TransportPlan product_plan(const DiscreteMeasure& mu, const DiscreteMeasure& nu);
/// Deterministic plan sending atom k of mu to targets[k] with weight w_k.
TransportPlan map_plan(const DiscreteMeasure& mu, std::vector<TorusPoint> targets);

/// ( sum_{kj} c_kj d(x_k,y_j)^q )^{1/q}
double plan_cost(const TransportPlan& pi, double q);

/// Exact optimal transport on the dense cost matrix (transportation simplex).
/// Throws on non-convergence with iteration diagnostics in the message.
TransportPlan optimal_plan(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double q);

/// Gluing over the common middle marginal; requires pr2#pi12 == pr1#pi23.
TransportPlan compose_plans(const TransportPlan& pi12, const TransportPlan& pi23);

TransportPlan invert_plan(const TransportPlan& pi);

/// p(x_k) = x_k - mean of the conditional target measure, targets taken in
/// the wrapped window of radius 1/2 around x_k.
Covector barycentric_covector(const TransportPlan& pi);

/// Conditional measures pi_x for every source atom; weights c_kj / w_k.
std::vector<std::pair<TorusPoint, DiscreteMeasure>> disintegrate(const TransportPlan& pi);

/// Same atoms and weights up to tolerance (used for middle-marginal checks).
bool same_marginal(const DiscreteMeasure& a, const DiscreteMeasure& b, double tol = 1e-10);

std::string plan_to_json(const TransportPlan& pi);

}  // namespace wvar
