#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "wvar/variations.hpp"

using namespace wvar;
using wvar::testing::random_measure;

namespace {
TorusPoint pt(std::initializer_list<double> c) { return TorusPoint(Vec(c)); }
}  // namespace

TEST_CASE("geometric grid") {
    auto g = geometric_grid(0.5, 4);
    REQUIRE(g.size() == 4);
    CHECK(g[0] == doctest::Approx(0.25));
    CHECK(g[3] == doctest::Approx(0.03125));
    for (std::size_t k = 1; k < g.size(); ++k) CHECK(g[k] < g[k - 1]);
}

TEST_CASE("loglog slope fits power laws") {
    std::vector<double> x, y2, y1;
    for (int k = 1; k <= 12; ++k) {
        double t = std::pow(2.0, -k);
        x.push_back(t);
        y2.push_back(3.0 * t * t);
        y1.push_back(t);
    }
    CHECK(loglog_slope(x, y2) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(loglog_slope(x, y1) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("trajectory ensemble interpolation") {
    DiscreteMeasure mu = DiscreteMeasure::uniform({pt({0.1}), pt({0.8})});
    std::vector<double> times = {0.0, 0.5, 1.0};
    std::vector<std::vector<Vec>> paths = {{{0.1}, {0.3}, {0.5}}, {{0.8}, {1.0}, {1.2}}};
    TrajectoryEnsemble eta(mu, times, paths);
    CHECK(eta.position_lift(0, 0.25)[0] == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(eta.position_lift(1, 0.75)[0] == doctest::Approx(1.1).epsilon(1e-14));
    DiscreteMeasure end = eta.at_time(1.0);
    CHECK(end.points[1][0] == doctest::Approx(0.2).epsilon(1e-14));  // 1.2 wraps

    CHECK_THROWS(TrajectoryEnsemble(mu, {0.0, 0.0, 1.0}, paths));  // grid not increasing
    std::vector<std::vector<Vec>> bad = paths;
    bad[0][0] = Vec{0.2};  // does not start at the base atom
    CHECK_THROWS(TrajectoryEnsemble(mu, times, bad));
}

TEST_CASE("transport-map family has constant rate equal to the field norm") {
    std::mt19937 rng(61);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    for (int trial = 0; trial < 10; ++trial) {
        std::size_t d = 1 + trial % 2;
        DiscreteMeasure mu = random_measure(rng, 4, d);
        std::vector<Vec> vals(mu.size(), Vec(d));
        for (auto& v : vals)
            for (double& c : v) c = u(rng);
        Covector phi(mu, vals);
        double q = (trial % 2 == 0) ? 2.0 : 1.0;
        VariationFamily fam = make_transport_map_variation(mu, phi, 1.0);
        double expect = phi.lq_norm(q);
        for (double t : {0.5, 0.1, 0.01, 1e-4}) {
            TransportPlan pit = fam.evaluate(t);
            CHECK(plan_cost(pit, q) / t == doctest::Approx(expect).epsilon(1e-12));
            CHECK(same_marginal(pit.source, mu, 0.0));
        }
    }
}

TEST_CASE("transport-map family is admissible") {
    DiscreteMeasure mu = DiscreteMeasure::uniform({pt({0.1}), pt({0.45}), pt({0.8})});
    Covector phi(mu, {{0.2}, {-0.3}, {0.1}});
    VariationFamily fam = make_transport_map_variation(mu, phi, 1.0);
    auto rep = check_admissibility(fam, 2.0, geometric_grid(1.0, 14), default_test_dictionary(1));
    CHECK(rep.admissible);
    CHECK(rep.cond_a);
    CHECK(rep.cond_b);
    CHECK(rep.cond_c);
    CHECK(rep.C == doctest::Approx(phi.lq_norm(2.0)).epsilon(1e-10));
}

TEST_CASE("flat family interpolates plan cost linearly") {
    std::mt19937 rng(67);
    for (int trial = 0; trial < 8; ++trial) {
        DiscreteMeasure mu = random_measure(rng, 3, 1 + trial % 2);
        DiscreteMeasure nu = random_measure(rng, 4, mu.dim());
        TransportPlan pi = optimal_plan(mu, nu, 1.0);
        VariationFamily fam = make_flat_variation(pi, 1.0);
        double base_cost = plan_cost(pi, 1.0);
        for (double t : {1.0, 0.5, 0.05, 1e-3}) {
            TransportPlan pit = fam.evaluate(t);
            CHECK(same_marginal(pit.source, pi.source, 0.0));
            CHECK(plan_cost(pit, 1.0) == doctest::Approx(t * base_cost).epsilon(1e-12));
        }
    }
}

TEST_CASE("flat family admissibility at exponent one") {
    DiscreteMeasure mu = DiscreteMeasure::uniform({pt({0.2}), pt({0.6})});
    DiscreteMeasure nu({pt({0.3}), pt({0.75}), pt({0.9})}, {0.25, 0.5, 0.25});
    TransportPlan pi = optimal_plan(mu, nu, 1.0);
    VariationFamily fam = make_flat_variation(pi, 1.0);
    auto rep = check_admissibility(fam, 1.0, geometric_grid(1.0, 14), default_test_dictionary(1));
    CHECK(rep.admissible);
    CHECK(rep.C == doctest::Approx(plan_cost(pi, 1.0)).epsilon(1e-10));
}

TEST_CASE("lagrangian family with linear paths equals the map family") {
    std::mt19937 rng(71);
    DiscreteMeasure mu = random_measure(rng, 5, 2);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    std::vector<Vec> vals(mu.size(), Vec(2));
    for (auto& v : vals)
        for (double& c : v) c = u(rng);
    Covector phi(mu, vals);

    std::vector<double> grid;
    for (int i = 0; i <= 16; ++i) grid.push_back(i / 16.0);
    std::vector<std::vector<Vec>> paths(mu.size());
    for (std::size_t k = 0; k < mu.size(); ++k)
        for (double t : grid) paths[k].push_back(axpy(t, vals[k], mu.points[k].c));
    TrajectoryEnsemble eta(mu, grid, paths);

    VariationFamily lag = make_lagrangian_variation(eta, 1.0);
    VariationFamily map = make_transport_map_variation(mu, phi, 1.0);
    for (double t : {0.03, 0.25, 0.77, 1.0}) {
        TransportPlan a = lag.evaluate(t);
        TransportPlan b = map.evaluate(t);
        REQUIRE(a.rows() == b.rows());
        REQUIRE(a.cols() == b.cols());
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = 0; j < a.cols(); ++j) {
                CHECK(a.at(i, j) == doctest::Approx(b.at(i, j)).epsilon(1e-14));
                CHECK(torus_distance(a.target.points[j], b.target.points[j]) ==
                      doctest::Approx(0.0).epsilon(1e-12));
            }
    }
}

TEST_CASE("eulerian family obeys the action rate bound") {
    DiscreteMeasure mu = DiscreteMeasure::uniform({pt({0.05}), pt({0.35}), pt({0.65}), pt({0.95})});
    VelocityField v = [](double t, const TorusPoint& x) {
        return Vec{0.3 * std::sin(2.0 * std::numbers::pi * x[0]) + 0.1 * t};
    };
    const double T = 0.5;
    const std::size_t steps = 256;
    TrajectoryEnsemble eta = integrate_velocity_field(mu, v, T, steps);
    VariationFamily fam = make_eulerian_variation(mu, v, T, steps);
    for (double q : {1.0, 2.0}) {
        double p = (q == 1.0) ? std::numeric_limits<double>::infinity() : q / (q - 1.0);
        for (double t : {0.5, 0.25, 0.1, 0.02}) {
            TransportPlan pit = fam.evaluate(t);
            double rate = plan_cost(pit, q) / t;
            // action integral int_0^t int |v|^q dmu_s ds, trapezoid on a fine
            // sub-grid of [0, t] (the bound is nearly tight at q = 1, so the
            // quadrature must resolve the full interval)
            const std::size_t nq = 4096;
            std::vector<double> vals(nq + 1);
            for (std::size_t i = 0; i <= nq; ++i) {
                double s = t * static_cast<double>(i) / static_cast<double>(nq);
                double acc = 0.0;
                for (std::size_t k = 0; k < mu.size(); ++k) {
                    TorusPoint xs = wrap(eta.position_lift(k, s));
                    acc += mu.weights[k] * std::pow(norm2(v(s, xs)), q);
                }
                vals[i] = acc;
            }
            double action = 0.0;
            for (std::size_t i = 1; i <= nq; ++i)
                action += 0.5 * (vals[i] + vals[i - 1]) * (t / static_cast<double>(nq));
            double bound = std::pow(t, 1.0 / p - 1.0) * std::pow(action, 1.0 / q);
            CHECK(rate <= bound + 1e-6);
        }
    }
}

TEST_CASE("eulerian family is admissible") {
    DiscreteMeasure mu = DiscreteMeasure::uniform({pt({0.1}), pt({0.4}), pt({0.7})});
    VelocityField v = [](double, const TorusPoint& x) {
        return Vec{0.2 * std::cos(2.0 * std::numbers::pi * x[0])};
    };
    VariationFamily fam = make_eulerian_variation(mu, v, 0.5, 128);
    auto rep = check_admissibility(fam, 2.0, geometric_grid(0.5, 14), default_test_dictionary(1));
    CHECK(rep.admissible);
}

TEST_CASE("perturbing with diagonal plans is neutral") {
    DiscreteMeasure mu = DiscreteMeasure::uniform({pt({0.15}), pt({0.55})});
    Covector phi(mu, {{0.25}, {-0.1}});
    VariationFamily fam = make_transport_map_variation(mu, phi, 1.0);
    VariationFamily same = perturb_family(
        fam, [&fam](double t) { return diagonal_plan(fam.evaluate(t).target); });
    for (double t : {0.4, 0.05}) {
        TransportPlan a = fam.evaluate(t);
        TransportPlan b = same.evaluate(t);
        REQUIRE(a.cols() == b.cols());
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = 0; j < a.cols(); ++j)
                CHECK(b.at(i, j) == doctest::Approx(a.at(i, j)).epsilon(1e-13));
    }
}

TEST_CASE("mixing endpoints reproduce the ingredients") {
    DiscreteMeasure mu = DiscreteMeasure::uniform({pt({0.2}), pt({0.7})});
    VariationFamily f1 = make_transport_map_variation(mu, Covector(mu, {{0.3}, {0.1}}), 1.0);
    VariationFamily f2 = make_transport_map_variation(mu, Covector(mu, {{-0.2}, {0.4}}), 1.0);
    for (double t : {0.3, 0.8}) {
        TransportPlan one = mix_families(f1, f2, 1.0).evaluate(t);
        TransportPlan zero = mix_families(f1, f2, 0.0).evaluate(t);
        CHECK(plan_cost(one, 2.0) == doctest::Approx(plan_cost(f1.evaluate(t), 2.0)).epsilon(1e-12));
        CHECK(plan_cost(zero, 2.0) ==
              doctest::Approx(plan_cost(f2.evaluate(t), 2.0)).epsilon(1e-12));
        TransportPlan half = mix_families(f1, f2, 0.5).evaluate(t);
        CHECK(same_marginal(half.source, mu, 0.0));
    }
    CHECK_THROWS(mix_families(f1, f2, 1.5));
}

TEST_CASE("admissibility rejects a broken first marginal") {
    DiscreteMeasure mu = DiscreteMeasure::uniform({pt({0.2}), pt({0.7})});
    DiscreteMeasure other = DiscreteMeasure::uniform({pt({0.25}), pt({0.7})});
    VariationFamily fam;
    fam.base = mu;
    fam.kind = VariationKind::transport_map;
    fam.horizon = 1.0;
    fam.eval = [other](double) { return diagonal_plan(other); };
    auto rep = check_admissibility(fam, 2.0, geometric_grid(1.0, 8), default_test_dictionary(1));
    CHECK_FALSE(rep.cond_a);
    CHECK_FALSE(rep.admissible);
}

TEST_CASE("admissibility rejects a non-convergent family") {
    DiscreteMeasure mu = DiscreteMeasure::uniform({pt({0.2}), pt({0.7})});
    DiscreteMeasure far = DiscreteMeasure::dirac(pt({0.45}));
    VariationFamily fam;
    fam.base = mu;
    fam.kind = VariationKind::flat;
    fam.horizon = 1.0;
    fam.eval = [mu, far](double) { return product_plan(mu, far); };
    auto rep = check_admissibility(fam, 2.0, geometric_grid(1.0, 10), default_test_dictionary(1));
    CHECK_FALSE(rep.cond_b);
    CHECK_FALSE(rep.admissible);
}

TEST_CASE("family evaluation guards its domain") {
    DiscreteMeasure mu = DiscreteMeasure::dirac(pt({0.5}));
    VariationFamily fam = make_transport_map_variation(mu, Covector(mu, {{0.1}}), 0.5);
    CHECK_THROWS(fam.evaluate(0.6));
    CHECK_THROWS(fam.evaluate(-0.1));
}
