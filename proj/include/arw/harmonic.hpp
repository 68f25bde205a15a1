#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "arw/chain.hpp"
#include "arw/linalg.hpp"
#include "arw/rng.hpp"

namespace arw {

/// Green matrix and derived hitting probabilities for a chain with sink.
/// green(y, z) = expected visits to z (counting the start when y == z)
/// before absorption; hit(y, z) = P_y(tau_z < tau_sink) with the convention
/// hit(z, z) = 1; exit_time(z) = E_z[tau_sink] = sum_y green(y, z) for
/// reversible chains.
struct HarmonicTable {
    std::uint32_t n = 0;
    Eigen::MatrixXd green;
    Eigen::MatrixXd hit;
    Eigen::VectorXd exit_time;
    double residual = 0.0;
};

/// Dense table by per-column sparse solves of (I - P) g = e_z. Feasible for
/// a few thousand vertices; use exit_sum_row for the diagonal-only path.
inline HarmonicTable harmonic_table(const BaseChain& chain, double residual_tol = 1e-9) {
    const int n = static_cast<int>(chain.num_vertices);
    if (n > 4000) throw std::invalid_argument("harmonic_table: chain too large for a dense table");
    AbsorptionSystem sys(chain);

    HarmonicTable table;
    table.n = chain.num_vertices;
    table.green.resize(n, n);
    for (int z = 0; z < n; ++z) table.green.col(z) = sys.solve_unit(z);

    Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    table.exit_time = sys.solve(ones);
    table.residual = sys.residual(table.exit_time, ones);
    for (int z = 0; z < n; z += std::max(1, n / 8)) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
        e(z) = 1.0;
        table.residual = std::max(table.residual, sys.residual(table.green.col(z), e));
    }
    if (table.residual > residual_tol)
        throw std::runtime_error("harmonic_table: solver residual above tolerance");

    table.hit.resize(n, n);
    for (int z = 0; z < n; ++z) table.hit.col(z) = table.green.col(z) / table.green(z, z);
    return table;
}

struct ExitSumRow {
    double r = 0.0;
    std::uint32_t n = 0;
    double min_ratio = 0.0;            // min_z [sum_y P_y(tau_z < tau_r)] ln r / r
    double max_green_over_logr = 0.0;  // max_z G(z,z) / ln r
    double residual = 0.0;
};

/// Diagonal-only path: needs E_z tau_r (one solve) and G(z, z) (one solve
/// per z), never the full matrix. sum_y P_y = E_z tau_r / G(z, z).
inline ExitSumRow exit_sum_row(const BaseChain& chain, double r, double residual_tol = 1e-9) {
    const int n = static_cast<int>(chain.num_vertices);
    AbsorptionSystem sys(chain);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd exit_time = sys.solve(ones);

    ExitSumRow row;
    row.r = r;
    row.n = chain.num_vertices;
    row.residual = sys.residual(exit_time, ones);
    const double logr = std::log(r);
    double min_ratio = std::numeric_limits<double>::infinity();
    double max_g = 0.0;
    for (int z = 0; z < n; ++z) {
        double gzz = sys.solve_unit(z)(z);
        double sum_hits = exit_time(z) / gzz;
        min_ratio = std::min(min_ratio, sum_hits * logr / r);
        max_g = std::max(max_g, gzz / logr);
    }
    row.min_ratio = min_ratio;
    row.max_green_over_logr = max_g;
    if (row.residual > residual_tol)
        throw std::runtime_error("exit_sum_row: solver residual above tolerance");
    return row;
}

/// Monte Carlo estimate of P_y(tau_z < tau_sink) by direct walks;
/// independent of the linear-algebra route.
inline double mc_hit_probability(const BaseChain& chain, VertexId y, VertexId z,
                                 std::uint64_t walks, std::uint64_t seed) {
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < walks; ++i) {
        SplitMix rng(derive_seed(seed, i));
        VertexId cur = y;
        while (true) {
            if (cur == z) { ++hits; break; }
            cur = chain.sample_target(cur, rng.next());
            if (cur == kSink) break;
        }
    }
    return static_cast<double>(hits) / walks;
}

}  // namespace arw
