#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "wvar/dynamics.hpp"

using namespace wvar;
using wvar::testing::random_measure;

namespace {
TorusPoint pt(std::initializer_list<double> c) { return TorusPoint(Vec(c)); }

double contraction_alpha2(double L, double tau) {
    return 2.0 * L * L * tau * tau * std::exp(2.0 * L * tau) * (tau + 2.0) * (tau + 2.0);
}
}  // namespace

TEST_CASE("max contraction horizon") {
    CHECK_THROWS(max_contraction_horizon(0.0));
    for (double L : {0.25, 1.0, 3.0}) {
        double tau = max_contraction_horizon(L);
        CHECK(contraction_alpha2(L, tau) <= 0.5 + 1e-7);
        CHECK(contraction_alpha2(L, tau * 1.001) > 0.5);
    }
    CHECK(max_contraction_horizon(3.0) < max_contraction_horizon(1.0));
    // near-zero Lipschitz constants saturate at the cap
    CHECK(max_contraction_horizon(1e-9) == doctest::Approx(1e6));
}

TEST_CASE("zero dynamics are stationary") {
    ControlledDynamics dyn = builtin_dynamics("zero", 1);
    DiscreteMeasure mu0 = DiscreteMeasure::uniform({pt({0.2}), pt({0.8})});
    auto sol = solve_leader_follower(dyn, pt({0.5}), mu0, Vec{1.0},
                                     {Vec{1.0}, Vec{1.0}}, 0.0, 1.0, 32);
    CHECK(torus_distance(sol.leader_at(1.0), pt({0.5})) == doctest::Approx(0.0).epsilon(1e-14));
    DiscreteMeasure end = sol.measure_at(1.0);
    for (std::size_t k = 0; k < mu0.size(); ++k)
        CHECK(torus_distance(end.points[k], mu0.points[k]) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("reach dynamics move the leader linearly") {
    ControlledDynamics dyn = builtin_dynamics("reach", 1);
    DiscreteMeasure mu0 = DiscreteMeasure::dirac(pt({0.1}));
    auto sol = solve_leader_follower(dyn, pt({0.1}), mu0, Vec{0.7}, {Vec{0.0}}, 0.0, 0.3, 24);
    // constant-velocity flow is integrated exactly by RK4
    CHECK(torus_distance(sol.leader_at(0.3), pt({0.31})) == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(torus_distance(sol.leader_at(0.15), pt({0.205})) == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(torus_distance(sol.measure_at(0.3).points[0], pt({0.1})) ==
          doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("decoupled dynamics match a per-atom integration oracle") {
    ControlledDynamics dyn = builtin_dynamics("decoupled", 1);
    DiscreteMeasure mu0 = DiscreteMeasure::uniform({pt({0.15}), pt({0.4}), pt({0.85})});
    Vec u0{0.5};
    std::vector<Control> ubar = {Vec{0.8}, Vec{-0.3}, Vec{0.5}};
    const double T = 0.2;
    auto sol = solve_leader_follower(dyn, pt({0.6}), mu0, u0, ubar, 0.0, T, 64);

    // oracle: each trajectory is an independent scalar ODE; integrate with a
    // much finer explicit RK4
    auto rk4 = [&](double x_start, const std::function<double(double, double)>& rhs) {
        double x = x_start;
        const std::size_t n = 4096;
        const double h = T / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            double t = h * static_cast<double>(i);
            double k1 = rhs(t, x);
            double k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1);
            double k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2);
            double k4 = rhs(t + h, x + h * k3);
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        return x;
    };
    constexpr double kTwoPi = 2.0 * std::numbers::pi;
    double lead = rk4(0.6, [&](double, double x) {
        return u0[0] * (0.6 + 0.4 * std::cos(kTwoPi * wrap_unit(x)));
    });
    CHECK(torus_distance(sol.leader_at(T), TorusPoint(Vec{wrap_unit(lead)})) < 1e-10);
    for (std::size_t k = 0; k < mu0.size(); ++k) {
        double end = rk4(mu0.points[k][0], [&](double, double x) {
            return ubar[k][0] * (0.6 + 0.4 * std::sin(kTwoPi * wrap_unit(x)));
        });
        CHECK(torus_distance(sol.measure_at(T).points[k], TorusPoint(Vec{wrap_unit(end)})) < 1e-10);
    }

    // no leader or measure coupling: the second Picard sweep reproduces the
    // first exactly, so every window settles in two iterations
    for (const auto& log : sol.window_residuals) CHECK(log.size() <= 2);
}

TEST_CASE("chase dynamics contract at the predicted rate") {
    ControlledDynamics dyn = builtin_dynamics("chase", 1);
    DiscreteMeasure mu0 = DiscreteMeasure::uniform({pt({0.1}), pt({0.35}), pt({0.6}), pt({0.9})});
    std::vector<Control> ubar(4, Vec{0.0});
    const double T = 0.15;
    auto sol = solve_leader_follower(dyn, pt({0.5}), mu0, Vec{0.1}, ubar, 0.0, T, 60);
    REQUIRE(sol.window_residuals.size() == 1);  // T below the contraction horizon
    const auto& log = sol.window_residuals[0];
    REQUIRE(log.size() >= 3);
    double alpha = std::sqrt(contraction_alpha2(dyn.L, T));
    for (std::size_t i = 1; i < log.size(); ++i) {
        if (log[i] < 1e-11 || log[i - 1] < 1e-11) continue;
        CHECK(log[i] / log[i - 1] <= alpha + 0.05);
    }
    // followers drift toward the leader
    double before = torus_distance(mu0.points[0], pt({0.5}));
    double after = torus_distance(sol.measure_at(T).points[0], sol.leader_at(T));
    CHECK(after < before);
}

TEST_CASE("window concatenation agrees with a single-window solve") {
    // same vector field, artificially larger declared Lipschitz constant:
    // the solver is forced to chain several contraction windows and must
    // reproduce the single-window trajectory
    ControlledDynamics one = builtin_dynamics("chase", 1);
    ControlledDynamics many = one;
    many.L = 8.0;
    DiscreteMeasure mu0 = DiscreteMeasure::uniform({pt({0.2}), pt({0.7})});
    std::vector<Control> ubar(2, Vec{0.1});
    const double T = 0.15;
    auto a = solve_leader_follower(one, pt({0.45}), mu0, Vec{0.3}, ubar, 0.0, T, 90, 1e-12);
    auto b = solve_leader_follower(many, pt({0.45}), mu0, Vec{0.3}, ubar, 0.0, T, 90, 1e-12);
    CHECK(b.window_residuals.size() > 1);
    for (std::size_t i = 0; i < a.times.size(); ++i) {
        CHECK(norm2(axpy(-1.0, a.leader[i], b.leader[i])) < 1e-9);
        for (std::size_t k = 0; k < mu0.size(); ++k)
            CHECK(norm2(axpy(-1.0, a.followers.paths[k][i], b.followers.paths[k][i])) < 1e-9);
    }
}

TEST_CASE("continuity equation holds along the flow at second order") {
    ControlledDynamics dyn = builtin_dynamics("chase", 1);
    DiscreteMeasure mu0 = DiscreteMeasure::uniform({pt({0.15}), pt({0.45}), pt({0.75})});
    std::vector<Control> ubar(3, Vec{0.2});
    auto testset = default_test_dictionary(1);
    std::vector<double> h, defect;
    for (std::size_t steps : {24, 48, 96}) {
        auto sol = solve_leader_follower(dyn, pt({0.5}), mu0, Vec{0.3}, ubar, 0.0, 0.15, steps,
                                         1e-12);
        h.push_back(0.15 / static_cast<double>(steps));
        defect.push_back(continuity_residual(sol, testset, 0.05));
    }
    for (std::size_t i = 1; i < defect.size(); ++i) CHECK(defect[i] < defect[i - 1]);
    CHECK(loglog_slope(h, defect) >= 1.8);
    CHECK(defect.back() < 1e-5);

    // a corrupted path must trip the check; use a sustained displacement (a
    // one-node bump is re-absorbed by the centered-difference velocities)
    auto sol = solve_leader_follower(dyn, pt({0.5}), mu0, Vec{0.3}, ubar, 0.0, 0.15, 96, 1e-12);
    for (std::size_t i = 40; i < sol.times.size(); ++i) sol.followers.paths[1][i][0] += 0.05;
    CHECK(continuity_residual(sol, testset, 0.05) > 1e-4);
}

TEST_CASE("initial velocities match the prescribed fields") {
    ControlledDynamics dyn = builtin_dynamics("chase", 1);
    DiscreteMeasure mu0 = DiscreteMeasure::uniform({pt({0.25}), pt({0.65})});
    std::vector<Control> ubar(2, Vec{-0.2});
    double prev = 1e300;
    for (std::size_t steps : {20, 40, 80}) {
        auto sol = solve_leader_follower(dyn, pt({0.4}), mu0, Vec{0.5}, ubar, 0.0, 0.15, steps,
                                         1e-12);
        double gap = initial_velocity_check(sol, dyn);
        CHECK(gap < 1e-2);
        CHECK(gap < prev + 1e-15);
        prev = gap;
    }
}

TEST_CASE("solver input validation") {
    ControlledDynamics dyn = builtin_dynamics("zero", 1);
    DiscreteMeasure mu0 = DiscreteMeasure::dirac(pt({0.5}));
    CHECK_THROWS(solve_leader_follower(dyn, pt({0.5}), mu0, Vec{0.0}, {Vec{0.0}}, 0.5, 0.5, 10));
    CHECK_THROWS(solve_leader_follower(dyn, pt({0.5}), mu0, Vec{0.0}, {Vec{0.0}}, 0.0, 1.0, 0));
    CHECK_THROWS(solve_leader_follower(dyn, pt({0.5}), mu0, Vec{0.0}, {}, 0.0, 1.0, 10));
    CHECK_THROWS(builtin_dynamics("nope", 1));
}

TEST_CASE("serial and parallel follower kernels agree bitwise") {
    std::mt19937 rng(107);
    ControlledDynamics dyn = builtin_dynamics("chase", 1);
    DiscreteMeasure base = random_measure(rng, 64, 1);
    std::vector<Control> ubar(64, Vec{0.25});
    std::vector<double> times(33);
    for (std::size_t i = 0; i < times.size(); ++i) times[i] = 0.1 * static_cast<double>(i) / 32.0;
    std::vector<Vec> leader(times.size(), Vec{0.4});
    std::vector<std::vector<Vec>> foll(base.size(), std::vector<Vec>(times.size()));
    std::vector<Vec> start(base.size());
    for (std::size_t k = 0; k < base.size(); ++k) {
        start[k] = base.points[k].c;
        for (std::size_t i = 0; i < times.size(); ++i) foll[k][i] = base.points[k].c;
    }
    auto ser = integrate_followers(dyn, base, ubar, times, 0, 32, leader, foll, start, false);
    auto par = integrate_followers(dyn, base, ubar, times, 0, 32, leader, foll, start, true);
    for (std::size_t k = 0; k < base.size(); ++k)
        for (std::size_t i = 0; i < times.size(); ++i)
            for (std::size_t a = 0; a < ser[k][i].size(); ++a)
                CHECK(ser[k][i][a] == par[k][i][a]);
}
