#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace arw {

/// Divisible-sandpile relaxation report. The relaxation runs parallel
/// Jacobi sweeps on a box of radius r + pad: every site with mass above 1
/// keeps 1 and splits the excess equally among its 2d lattice neighbors.
struct SandpileReport {
    int dim = 0;
    double r = 0.0;
    double initial_mass = 0.0;
    bool converged = false;
    std::uint64_t sweeps = 0;
    double max_delta = 0.0;        // mass change in the final sweep
    double min_mass_in_ball = 0.0;
    double max_mass = 0.0;
    bool filled = false;           // min mass over B_r >= 1 - fill_tol
    double mass_error = 0.0;       // |box total + leaked - initial|
    double leaked = 0.0;           // mass pushed over the box edge
    double min_odometer = 0.0;
    double max_odometer = 0.0;
};

/// Relax mass * delta_0 on Z^d restricted to a box of radius r + pad.
inline SandpileReport relax_divisible_sandpile(int d, double r, double mass,
                                               double tol = 1e-12,
                                               std::uint64_t max_sweeps = 1'000'000,
                                               int pad = 4, double fill_tol = 1e-9) {
    if (d < 1 || d > 3) throw std::invalid_argument("sandpile: dimension must be in [1,3]");
    if (!(r >= 1.0) || !std::isfinite(r)) throw std::invalid_argument("sandpile: need r >= 1");
    if (mass <= 0.0) throw std::invalid_argument("sandpile: mass must be positive");

    const int c = static_cast<int>(std::ceil(r)) + pad;
    const int side = 2 * c + 1;
    std::size_t cells = 1;
    for (int i = 0; i < d; ++i) cells *= side;
    if (cells > 80'000'000) throw std::invalid_argument("sandpile: box too large");

    std::vector<std::size_t> stride(d, 1);
    for (int i = d - 2; i >= 0; --i) stride[i] = stride[i + 1] * side;
    const std::size_t center = [&] {
        std::size_t idx = 0;
        for (int i = 0; i < d; ++i) idx += stride[i] * c;
        return idx;
    }();

    std::vector<double> m(cells, 0.0), excess(cells, 0.0), odometer(cells, 0.0);
    m[center] = mass;

    SandpileReport report;
    report.dim = d;
    report.r = r;
    report.initial_mass = mass;

    const double share = 1.0 / (2 * d);
    std::vector<int> pt(d);
    auto coord_of = [&](std::size_t idx, std::vector<int>& out) {
        for (int i = 0; i < d; ++i) {
            out[i] = static_cast<int>(idx / stride[i]) - c;
            idx %= stride[i];
        }
    };
    auto on_edge = [&](std::size_t idx) {
        for (int i = 0; i < d; ++i) {
            int x = static_cast<int>(idx / stride[i]) % side;
            if (x == 0 || x == side - 1) return true;
        }
        return false;
    };

    for (std::uint64_t sweep = 1; sweep <= max_sweeps; ++sweep) {
        double moved = 0.0;
        for (std::size_t i = 0; i < cells; ++i) {
            double e = m[i] - 1.0;
            excess[i] = e > 0.0 ? e : 0.0;
            moved = std::max(moved, excess[i]);
        }
        report.sweeps = sweep;
        report.max_delta = moved;
        if (moved <= tol) { report.converged = true; break; }
        for (std::size_t i = 0; i < cells; ++i) {
            if (excess[i] == 0.0) continue;
            m[i] -= excess[i];
            odometer[i] += excess[i];
            double out = excess[i] * share;
            if (!on_edge(i)) {
                for (int k = 0; k < d; ++k) {
                    m[i + stride[k]] += out;
                    m[i - stride[k]] += out;
                }
            } else {
                // Box-edge sites leak across the boundary; the pad keeps the
                // occupied cluster well inside, so this stays zero in practice.
                coord_of(i, pt);
                for (int k = 0; k < d; ++k) {
                    if (pt[k] + 1 <= c) m[i + stride[k]] += out; else report.leaked += out;
                    if (pt[k] - 1 >= -c) m[i - stride[k]] += out; else report.leaked += out;
                }
            }
        }
    }

    const double r2 = r * r;
    double total = 0.0;
    double min_ball = std::numeric_limits<double>::infinity();
    double max_mass = 0.0, min_odo = std::numeric_limits<double>::infinity(), max_odo = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
        total += m[i];
        max_mass = std::max(max_mass, m[i]);
        min_odo = std::min(min_odo, odometer[i]);
        max_odo = std::max(max_odo, odometer[i]);
        coord_of(i, pt);
        double n2 = 0.0;
        for (int k = 0; k < d; ++k) n2 += static_cast<double>(pt[k]) * pt[k];
        if (n2 < r2) min_ball = std::min(min_ball, m[i]);
    }
    report.min_mass_in_ball = min_ball;
    report.max_mass = max_mass;
    report.filled = report.converged && min_ball >= 1.0 - fill_tol;
    report.mass_error = std::abs(total + report.leaked - mass);
    report.min_odometer = min_odo;
    report.max_odometer = max_odo;
    return report;
}

}  // namespace arw
