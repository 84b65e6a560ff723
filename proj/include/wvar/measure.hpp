#pragma once

#include <functional>
#include <string>
#include <vector>

#include "wvar/torus.hpp"

namespace wvar {

/// Finitely supported probability measure on T^d.
/// Weights are nonnegative and sum to 1 (checked to 1e-12).
struct DiscreteMeasure {
    std::vector<TorusPoint> points;
    std::vector<double> weights;

    DiscreteMeasure() = default;
    DiscreteMeasure(std::vector<TorusPoint> pts, std::vector<double> w);

    std::size_t size() const { return points.size(); }
    std::size_t dim() const { return points.empty() ? 0 : points[0].dim(); }

    static DiscreteMeasure dirac(TorusPoint p);
    static DiscreteMeasure uniform(std::vector<TorusPoint> pts);
};

/// Sum of w_k |x_k|^2 with coordinates taken in [0,1).
double second_moment(const DiscreteMeasure& mu);

/// Smooth periodic test function with gradient, bounded by 1 and 1-Lipschitz.
struct TestFunction {
    std::string name;
    std::function<double(const TorusPoint&)> value;
    std::function<Vec(const TorusPoint&)> gradient;
};

/// Fixed dictionary of low-frequency trigonometric products (frequencies up
/// to 2 per axis), normalized so that |phi| <= 1 and Lip(phi) <= 1.
std::vector<TestFunction> default_test_dictionary(std::size_t dim);

/// max over the testset of |int phi dmu - int phi dnu|.
double bounded_lipschitz_gap(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                             const std::vector<TestFunction>& testset);

double integrate(const DiscreteMeasure& mu, const std::function<double(const TorusPoint&)>& phi);

// CSV particle format: header "x_1,...,x_d,weight", one row per atom.
DiscreteMeasure load_measure_csv(const std::string& path);
void save_measure_csv(const DiscreteMeasure& mu, const std::string& path);

}  // namespace wvar
