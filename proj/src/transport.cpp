#include "wvar/transport.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace wvar {

Covector::Covector(DiscreteMeasure b, std::vector<Vec> v) : base(std::move(b)), values(std::move(v)) {
    if (values.size() != base.size())
        throw std::invalid_argument("Covector: value count does not match base atoms");
    for (const auto& vec : values)
        if (vec.size() != base.dim()) throw std::invalid_argument("Covector: bad value dimension");
}

double Covector::lq_norm(double q) const {
    double s = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k)
        s += base.weights[k] * std::pow(norm2(values[k]), q);
    return std::pow(s, 1.0 / q);
}

namespace {

// Drop atoms carrying zero weight so that disintegration and barycentric
// projection are defined on every remaining atom.
DiscreteMeasure drop_zero_atoms(const DiscreteMeasure& m, std::vector<std::size_t>& keep) {
    keep.clear();
    for (std::size_t k = 0; k < m.size(); ++k)
        if (m.weights[k] > 0.0) keep.push_back(k);
    if (keep.size() == m.size()) return m;
    std::vector<TorusPoint> pts;
    std::vector<double> w;
    for (std::size_t k : keep) {
        pts.push_back(m.points[k]);
        w.push_back(m.weights[k]);
    }
    return DiscreteMeasure(std::move(pts), std::move(w));
}

}  // namespace

TransportPlan::TransportPlan(DiscreteMeasure src, DiscreteMeasure tgt, std::vector<double> c) {
    if (c.size() != src.size() * tgt.size())
        throw std::invalid_argument("TransportPlan: coupling size mismatch");
    if (src.dim() != tgt.dim()) throw std::invalid_argument("TransportPlan: dimension mismatch");
    std::vector<std::size_t> keep_s, keep_t;
    DiscreteMeasure s2 = drop_zero_atoms(src, keep_s);
    DiscreteMeasure t2 = drop_zero_atoms(tgt, keep_t);
    std::vector<double> c2(keep_s.size() * keep_t.size());
    for (std::size_t i = 0; i < keep_s.size(); ++i)
        for (std::size_t j = 0; j < keep_t.size(); ++j)
            c2[i * keep_t.size() + j] = c[keep_s[i] * tgt.size() + keep_t[j]];
    source = std::move(s2);
    target = std::move(t2);
    coupling = std::move(c2);

    const std::size_t n = rows(), m = cols();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            double v = coupling[i * m + j];
            if (v < -1e-14) throw std::invalid_argument("TransportPlan: negative coupling entry");
            row += v;
            total += v;
        }
        if (std::fabs(row - source.weights[i]) > 1e-10)
            throw std::invalid_argument("TransportPlan: row sum does not match source weight");
    }
    for (std::size_t j = 0; j < m; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < n; ++i) col += coupling[i * m + j];
        if (std::fabs(col - target.weights[j]) > 1e-10)
            throw std::invalid_argument("TransportPlan: column sum does not match target weight");
    }
    if (std::fabs(total - 1.0) > 1e-12)
        throw std::invalid_argument("TransportPlan: total mass is not 1");
}

TransportPlan diagonal_plan(const DiscreteMeasure& mu) {
    const std::size_t n = mu.size();
    std::vector<double> c(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) c[i * n + i] = mu.weights[i];
    return TransportPlan(mu, mu, std::move(c));
}

TransportPlan product_plan(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    std::vector<double> c(mu.size() * nu.size());
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t j = 0; j < nu.size(); ++j)
            c[i * nu.size() + j] = mu.weights[i] * nu.weights[j];
    return TransportPlan(mu, nu, std::move(c));
}

TransportPlan map_plan(const DiscreteMeasure& mu, std::vector<TorusPoint> targets) {
    if (targets.size() != mu.size()) throw std::invalid_argument("map_plan: target count mismatch");
    DiscreteMeasure nu(std::move(targets), mu.weights);
    const std::size_t n = mu.size();
    std::vector<double> c(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) c[i * n + i] = mu.weights[i];
    return TransportPlan(mu, std::move(nu), std::move(c));
}

double plan_cost(const TransportPlan& pi, double q) {
    if (q < 1.0) throw std::invalid_argument("plan_cost: q must be >= 1");
    const std::size_t n = pi.rows(), m = pi.cols();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double w = pi.coupling[i * m + j];
            if (w > 0.0) s += w * std::pow(torus_distance(pi.source.points[i], pi.target.points[j]), q);
        }
    return std::pow(s, 1.0 / q);
}

namespace {

// Transportation simplex on the dense cost matrix. Deterministic pivoting:
// most negative reduced cost, lexicographic tie-break; leaving cell is the
// lexicographically smallest minimizer on the cycle.
struct TransportSimplex {
    std::size_t n, m;
    const std::vector<double>& cost;  // n x m
    std::vector<double> supply, demand;
    std::vector<double> alloc;      // n x m
    std::vector<char> basic;        // n x m
    std::size_t iterations = 0;

    TransportSimplex(std::size_t n_, std::size_t m_, const std::vector<double>& c,
                     std::vector<double> a, std::vector<double> b)
        : n(n_), m(m_), cost(c), supply(std::move(a)), demand(std::move(b)),
          alloc(n * m, 0.0), basic(n * m, 0) {}

    void northwest_init() {
        std::vector<double> a = supply, b = demand;
        std::size_t i = 0, j = 0;
        while (true) {
            double q = std::min(a[i], b[j]);
            alloc[i * m + j] = q;
            basic[i * m + j] = 1;
            a[i] -= q;
            b[j] -= q;
            if (i == n - 1 && j == m - 1) break;
            if (i < n - 1 && (a[i] <= b[j] || j == m - 1)) ++i;
            else ++j;
        }
    }

    // Tree structure on n+m nodes (rows then columns) induced by basic cells.
    bool solve(double tol, std::size_t max_iter) {
        northwest_init();
        std::vector<double> u(n), v(m);
        std::vector<int> parent(n + m), parent_edge_row(n + m), parent_edge_col(n + m);
        for (iterations = 0; iterations < max_iter; ++iterations) {
            // potentials via BFS over the basis tree
            std::vector<char> seen(n + m, 0);
            std::deque<std::size_t> queue;
            u[0] = 0.0;
            seen[0] = 1;
            queue.push_back(0);
            parent[0] = -1;
            while (!queue.empty()) {
                std::size_t node = queue.front();
                queue.pop_front();
                if (node < n) {
                    for (std::size_t j = 0; j < m; ++j)
                        if (basic[node * m + j] && !seen[n + j]) {
                            v[j] = cost[node * m + j] - u[node];
                            seen[n + j] = 1;
                            parent[n + j] = static_cast<int>(node);
                            queue.push_back(n + j);
                        }
                } else {
                    std::size_t j = node - n;
                    for (std::size_t i = 0; i < n; ++i)
                        if (basic[i * m + j] && !seen[i]) {
                            u[i] = cost[i * m + j] - v[j];
                            seen[i] = 1;
                            parent[i] = static_cast<int>(node);
                            queue.push_back(i);
                        }
                }
            }

            // entering cell
            double best = -tol;
            std::size_t bi = n, bj = m;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j)
                    if (!basic[i * m + j]) {
                        double r = cost[i * m + j] - u[i] - v[j];
                        if (r < best) {
                            best = r;
                            bi = i;
                            bj = j;
                        }
                    }
            if (bi == n) return true;  // optimal

            // cycle: tree path from row bi to column node n+bj
            std::vector<int> path;
            {
                std::vector<int> prev(n + m, -2);
                std::deque<std::size_t> q2;
                q2.push_back(bi);
                prev[bi] = -1;
                while (!q2.empty()) {
                    std::size_t node = q2.front();
                    q2.pop_front();
                    if (node == n + bj) break;
                    if (node < n) {
                        for (std::size_t j = 0; j < m; ++j)
                            if (basic[node * m + j] && prev[n + j] == -2) {
                                prev[n + j] = static_cast<int>(node);
                                q2.push_back(n + j);
                            }
                    } else {
                        std::size_t j = node - n;
                        for (std::size_t i = 0; i < n; ++i)
                            if (basic[i * m + j] && prev[i] == -2) {
                                prev[i] = static_cast<int>(node + 0);
                                q2.push_back(i);
                            }
                    }
                }
                for (int node = static_cast<int>(n + bj); node != -1; node = prev[node])
                    path.push_back(node);
                std::reverse(path.begin(), path.end());  // bi ... n+bj
            }

            // cells along the cycle: entering (+), then alternating along path
            // path nodes: bi, c1, r1, c2, ... , n+bj; edges are basis cells.
            struct Cell { std::size_t i, j; int sign; };
            std::vector<Cell> cyc;
            cyc.push_back({bi, bj, +1});
            int sign = -1;
            for (std::size_t t = 0; t + 1 < path.size(); ++t) {
                std::size_t a = path[t], b = path[t + 1];
                std::size_t ci = a < n ? a : b;
                std::size_t cj = a < n ? b - n : a - n;
                cyc.push_back({ci, cj, sign});
                sign = -sign;
            }

            double theta = std::numeric_limits<double>::infinity();
            std::size_t leave = cyc.size();
            for (std::size_t t = 1; t < cyc.size(); ++t)
                if (cyc[t].sign < 0) {
                    double val = alloc[cyc[t].i * m + cyc[t].j];
                    bool better = val < theta - 1e-15;
                    bool tie = std::fabs(val - theta) <= 1e-15;
                    if (better ||
                        (tie && leave < cyc.size() &&
                         std::make_pair(cyc[t].i, cyc[t].j) < std::make_pair(cyc[leave].i, cyc[leave].j))) {
                        theta = std::min(theta, val);
                        leave = t;
                    }
                }
            for (const auto& cell : cyc)
                alloc[cell.i * m + cell.j] += cell.sign * theta;
            basic[bi * m + bj] = 1;
            basic[cyc[leave].i * m + cyc[leave].j] = 0;
            alloc[cyc[leave].i * m + cyc[leave].j] = 0.0;
        }
        return false;
    }
};

}  // namespace

TransportPlan optimal_plan(const DiscreteMeasure& mu_in, const DiscreteMeasure& nu_in, double q) {
    if (q < 1.0) throw std::invalid_argument("optimal_plan: q must be >= 1");
    if (mu_in.dim() != nu_in.dim()) throw std::invalid_argument("optimal_plan: dimension mismatch");
    std::vector<std::size_t> ks, kt;
    DiscreteMeasure mu = drop_zero_atoms(mu_in, ks);
    DiscreteMeasure nu = drop_zero_atoms(nu_in, kt);
    const std::size_t n = mu.size(), m = nu.size();
    std::vector<double> cost(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            cost[i * m + j] = std::pow(torus_distance(mu.points[i], nu.points[j]), q);

    TransportSimplex simplex(n, m, cost, mu.weights, nu.weights);
    const std::size_t max_iter = 1000 + 50 * (n + m) * (n + m);
    if (!simplex.solve(1e-12, max_iter)) {
        std::ostringstream msg;
        msg << "optimal_plan: transportation simplex did not converge after " << simplex.iterations
            << " pivots (n=" << n << ", m=" << m << ", q=" << q << ")";
        throw std::runtime_error(msg.str());
    }
    for (double& x : simplex.alloc)
        if (x < 0.0) x = 0.0;  // clamp pivot round-off
    return TransportPlan(mu, nu, std::move(simplex.alloc));
}

bool same_marginal(const DiscreteMeasure& a, const DiscreteMeasure& b, double tol) {
    if (a.size() != b.size() || a.dim() != b.dim()) return false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (torus_distance(a.points[k], b.points[k]) > tol) return false;
        if (std::fabs(a.weights[k] - b.weights[k]) > tol) return false;
    }
    return true;
}

TransportPlan compose_plans(const TransportPlan& pi12, const TransportPlan& pi23) {
    if (!same_marginal(pi12.target, pi23.source))
        throw std::invalid_argument("compose_plans: middle marginals do not match");
    const std::size_t n = pi12.rows(), mid = pi12.cols(), m = pi23.cols();
    std::vector<double> c(n * m, 0.0);
    for (std::size_t j = 0; j < mid; ++j) {
        const double wj = pi12.target.weights[j];
        for (std::size_t i = 0; i < n; ++i) {
            const double a = pi12.at(i, j);
            if (a == 0.0) continue;
            for (std::size_t k = 0; k < m; ++k) c[i * m + k] += a * pi23.at(j, k) / wj;
        }
    }
    return TransportPlan(pi12.source, pi23.target, std::move(c));
}

TransportPlan invert_plan(const TransportPlan& pi) {
    const std::size_t n = pi.rows(), m = pi.cols();
    std::vector<double> c(m * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) c[j * n + i] = pi.at(i, j);
    return TransportPlan(pi.target, pi.source, std::move(c));
}

Covector barycentric_covector(const TransportPlan& pi) {
    const std::size_t n = pi.rows(), m = pi.cols();
    std::vector<Vec> vals(n);
    for (std::size_t i = 0; i < n; ++i) {
        Vec mean_delta(pi.source.dim(), 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            double w = pi.at(i, j);
            if (w == 0.0) continue;
            Vec d = wrapped_delta(pi.source.points[i], pi.target.points[j]);
            for (std::size_t a = 0; a < d.size(); ++a) mean_delta[a] += w * d[a];
        }
        const double wi = pi.source.weights[i];
        vals[i] = scaled(-1.0 / wi, mean_delta);  // x - mean(y) in the local chart
    }
    return Covector(pi.source, std::move(vals));
}

std::vector<std::pair<TorusPoint, DiscreteMeasure>> disintegrate(const TransportPlan& pi) {
    std::vector<std::pair<TorusPoint, DiscreteMeasure>> out;
    const std::size_t m = pi.cols();
    for (std::size_t i = 0; i < pi.rows(); ++i) {
        std::vector<double> w(m);
        const double wi = pi.source.weights[i];
        for (std::size_t j = 0; j < m; ++j) w[j] = pi.at(i, j) / wi;
        // renormalize round-off so the conditional is a valid measure
        double tot = 0.0;
        for (double x : w) tot += x;
        for (double& x : w) x /= tot;
        out.emplace_back(pi.source.points[i], DiscreteMeasure(pi.target.points, std::move(w)));
    }
    return out;
}

std::string plan_to_json(const TransportPlan& pi) {
    nlohmann::ordered_json j;
    auto measure_json = [](const DiscreteMeasure& mu) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (std::size_t k = 0; k < mu.size(); ++k) {
            nlohmann::ordered_json atom;
            atom["x"] = mu.points[k].c;
            atom["w"] = mu.weights[k];
            arr.push_back(atom);
        }
        return arr;
    };
    j["source"] = measure_json(pi.source);
    j["target"] = measure_json(pi.target);
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < pi.rows(); ++i) {
        std::vector<double> row(pi.coupling.begin() + i * pi.cols(),
                                pi.coupling.begin() + (i + 1) * pi.cols());
        rows.push_back(row);
    }
    j["coupling"] = rows;
    return j.dump(2);
}

}  // namespace wvar
