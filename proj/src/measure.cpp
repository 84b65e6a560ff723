#include "wvar/measure.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace wvar {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

DiscreteMeasure::DiscreteMeasure(std::vector<TorusPoint> pts, std::vector<double> w)
    : points(std::move(pts)), weights(std::move(w)) {
    if (points.empty()) throw std::invalid_argument("DiscreteMeasure: empty support");
    if (points.size() != weights.size())
        throw std::invalid_argument("DiscreteMeasure: points/weights length mismatch");
    const std::size_t d = points[0].dim();
    double total = 0.0;
    for (std::size_t k = 0; k < points.size(); ++k) {
        if (points[k].dim() != d) throw std::invalid_argument("DiscreteMeasure: mixed dimensions");
        if (weights[k] < 0.0) throw std::invalid_argument("DiscreteMeasure: negative weight");
        total += weights[k];
    }
    if (std::fabs(total - 1.0) > 1e-12)
        throw std::invalid_argument("DiscreteMeasure: weights do not sum to 1");
}

DiscreteMeasure DiscreteMeasure::dirac(TorusPoint p) {
    return DiscreteMeasure({std::move(p)}, {1.0});
}

DiscreteMeasure DiscreteMeasure::uniform(std::vector<TorusPoint> pts) {
    std::vector<double> w(pts.size(), 1.0 / static_cast<double>(pts.size()));
    return DiscreteMeasure(std::move(pts), std::move(w));
}

double second_moment(const DiscreteMeasure& mu) {
    double s = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k) {
        double n = 0.0;
        for (double c : mu.points[k].c) n += c * c;
        s += mu.weights[k] * n;
    }
    return s;
}

double integrate(const DiscreteMeasure& mu, const std::function<double(const TorusPoint&)>& phi) {
    double s = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k) s += mu.weights[k] * phi(mu.points[k]);
    return s;
}

std::vector<TestFunction> default_test_dictionary(std::size_t dim) {
    // Enumerate integer frequency vectors with |k_i| <= 2, first nonzero
    // component positive (sign symmetry), k != 0.
    std::vector<std::vector<int>> freqs;
    std::vector<int> cur(dim, -2);
    while (true) {
        bool nonzero = false, canonical = false;
        for (std::size_t i = 0; i < dim; ++i) {
            if (cur[i] != 0) {
                nonzero = true;
                canonical = cur[i] > 0;
                break;
            }
        }
        if (nonzero && canonical) freqs.push_back(cur);
        std::size_t i = 0;
        for (; i < dim; ++i) {
            if (cur[i] < 2) {
                ++cur[i];
                break;
            }
            cur[i] = -2;
        }
        if (i == dim) break;
    }

    std::vector<TestFunction> out;
    for (const auto& k : freqs) {
        double kn = 0.0;
        for (int ki : k) kn += static_cast<double>(ki) * ki;
        kn = std::sqrt(kn);
        const double scale = 1.0 / (kTwoPi * kn);
        auto phase = [k](const TorusPoint& x) {
            double s = 0.0;
            for (std::size_t i = 0; i < x.dim(); ++i) s += k[i] * x.c[i];
            return kTwoPi * s;
        };
        std::string tag;
        for (int ki : k) tag += (tag.empty() ? "" : ",") + std::to_string(ki);
        out.push_back({"sin[" + tag + "]",
                       [phase, scale](const TorusPoint& x) { return scale * std::sin(phase(x)); },
                       [phase, k, kn](const TorusPoint& x) {
                           Vec g(x.dim());
                           double c = std::cos(phase(x)) / kn;
                           for (std::size_t i = 0; i < x.dim(); ++i) g[i] = k[i] * c;
                           return g;
                       }});
        out.push_back({"cos[" + tag + "]",
                       [phase, scale](const TorusPoint& x) { return scale * std::cos(phase(x)); },
                       [phase, k, kn](const TorusPoint& x) {
                           Vec g(x.dim());
                           double s = -std::sin(phase(x)) / kn;
                           for (std::size_t i = 0; i < x.dim(); ++i) g[i] = k[i] * s;
                           return g;
                       }});
    }
    return out;
}

double bounded_lipschitz_gap(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                             const std::vector<TestFunction>& testset) {
    if (testset.empty()) throw std::invalid_argument("bounded_lipschitz_gap: empty testset");
    double worst = 0.0;
    for (const auto& phi : testset) {
        double gap = std::fabs(integrate(mu, phi.value) - integrate(nu, phi.value));
        worst = std::max(worst, gap);
    }
    return worst;
}

DiscreteMeasure load_measure_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open measure CSV: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty measure CSV: " + path);
    std::vector<TorusPoint> pts;
    std::vector<double> w;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() < 2) throw std::runtime_error("bad CSV row in " + path);
        Vec coords(row.begin(), row.end() - 1);
        pts.emplace_back(coords);
        w.push_back(row.back());
    }
    return DiscreteMeasure(std::move(pts), std::move(w));
}

void save_measure_csv(const DiscreteMeasure& mu, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write measure CSV: " + path);
    out.precision(17);
    for (std::size_t i = 0; i < mu.dim(); ++i) out << "x_" << (i + 1) << ",";
    out << "weight\n";
    for (std::size_t k = 0; k < mu.size(); ++k) {
        for (double c : mu.points[k].c) out << c << ",";
        out << mu.weights[k] << "\n";
    }
}

}  // namespace wvar
