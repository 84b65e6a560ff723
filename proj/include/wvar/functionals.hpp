#pragma once

#include <functional>
#include <optional>
#include <string>

#include "wvar/transport.hpp"

namespace wvar {

/// Test functional U : P(T^d) -> R with optional closed-form derivatives.
/// flat_derivative is the un-normalized pointwise derivative; consumers
/// subtract its m-average to enforce the zero-mean gauge.
struct Functional {
    std::string name;
    std::function<double(const DiscreteMeasure&)> evaluate;
    std::function<Covector(const DiscreteMeasure&)> closed_gradient;  // may be empty
    std::function<double(const DiscreteMeasure&, const TorusPoint&)> flat_derivative;  // may be empty

    bool has_closed_gradient() const { return static_cast<bool>(closed_gradient); }
    bool has_flat_derivative() const { return static_cast<bool>(flat_derivative); }
};

/// Registry: linear:sin, linear:cos, potential2, interaction:cos, variance.
/// linear:* act on the first coordinate; interaction:cos uses the kernel
/// W(z) = (1/d) sum_i cos(2 pi z_i) on wrapped differences; variance uses the
/// [0,1) coordinate chart.
Functional builtin(const std::string& name);

/// Difference quotient [U((1-s)m + s delta_y) - U(m)] / s, re-centered by its
/// m-average so that the zero-mean normalization holds on the atom sample.
double numeric_flat_derivative(const Functional& U, const DiscreteMeasure& m, const TorusPoint& y,
                               double s);

/// The raw (un-centered) quotient; exposed so callers can reuse one average.
double raw_flat_quotient(const Functional& U, const DiscreteMeasure& m, const TorusPoint& y,
                         double s);

}  // namespace wvar
