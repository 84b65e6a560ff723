// Benchmark: follower-ensemble integration, serial reference vs OpenMP kernel.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "wvar/dynamics.hpp"

using namespace wvar;

namespace {

double run_case(const ControlledDynamics& dyn, const DiscreteMeasure& base,
                const std::vector<Control>& ubar, const std::vector<double>& times,
                bool parallel, std::vector<std::vector<Vec>>& out) {
    std::vector<Vec> leader(times.size(), Vec{0.25});
    std::vector<std::vector<Vec>> foll(base.size(), std::vector<Vec>(times.size()));
    std::vector<Vec> start(base.size());
    for (std::size_t k = 0; k < base.size(); ++k) {
        start[k] = base.points[k].c;
        for (std::size_t i = 0; i < times.size(); ++i) foll[k][i] = base.points[k].c;
    }
    auto t0 = std::chrono::steady_clock::now();
    out = integrate_followers(dyn, base, ubar, times, 0, times.size() - 1, leader, foll,
                              start, parallel);
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    std::size_t atoms = 4000;
    std::size_t steps = 400;
    int repeats = 3;
    if (argc > 1) atoms = static_cast<std::size_t>(std::stoul(argv[1]));
    if (argc > 2) steps = static_cast<std::size_t>(std::stoul(argv[2]));
    if (argc > 3) repeats = std::stoi(argv[3]);

    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<TorusPoint> pts;
    std::vector<double> w(atoms, 1.0 / static_cast<double>(atoms));
    for (std::size_t k = 0; k < atoms; ++k) pts.emplace_back(Vec{u(rng)});
    DiscreteMeasure base(std::move(pts), std::move(w));

    std::vector<double> times(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i)
        times[i] = 0.1 * static_cast<double>(i) / static_cast<double>(steps);

    ControlledDynamics dyn = builtin_dynamics("chase", 1);
    std::vector<Control> ubar(atoms, Vec{0.3});

    double best_serial = 1e300, best_parallel = 1e300;
    std::vector<std::vector<Vec>> ser, par;
    for (int r = 0; r < repeats; ++r) {
        best_serial = std::min(best_serial, run_case(dyn, base, ubar, times, false, ser));
        best_parallel = std::min(best_parallel, run_case(dyn, base, ubar, times, true, par));
    }

    double max_diff = 0.0;
    for (std::size_t k = 0; k < atoms; ++k)
        for (std::size_t i = 0; i <= steps; ++i)
            for (std::size_t c = 0; c < ser[k][i].size(); ++c)
                max_diff = std::max(max_diff, std::fabs(ser[k][i][c] - par[k][i][c]));

    std::printf("atoms=%zu steps=%zu repeats=%d\n", atoms, steps, repeats);
    std::printf("serial reference: %.4f s\n", best_serial);
    std::printf("openmp kernel:    %.4f s\n", best_parallel);
    std::printf("speedup:          %.2fx\n", best_serial / best_parallel);
    std::printf("max |serial - parallel|: %.3e\n", max_diff);
    if (max_diff != 0.0) {
        std::printf("FAIL: kernels disagree\n");
        return 1;
    }
    std::printf("kernels agree bitwise\n");
    return 0;
}
