#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "arw/chain.hpp"

namespace arw {

/// Sparse I - P restricted to V (the sink row/column is dropped).
inline Eigen::SparseMatrix<double> identity_minus_p(const BaseChain& chain) {
    const int n = static_cast<int>(chain.num_vertices);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(n) * 5);
    for (VertexId v = 0; v < chain.num_vertices; ++v) {
        double diag = 1.0;
        for (const auto& t : chain.transitions[v]) {
            double p = static_cast<double>(t.num) / chain.den[v];
            if (t.target == kSink) continue;
            if (t.target == v) diag -= p;
            else trips.emplace_back(static_cast<int>(v), static_cast<int>(t.target), -p);
        }
        trips.emplace_back(static_cast<int>(v), static_cast<int>(v), diag);
    }
    Eigen::SparseMatrix<double> m(n, n);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

/// Factorized absorption system (I - P) x = b for repeated solves.
class AbsorptionSystem {
  public:
    explicit AbsorptionSystem(const BaseChain& chain)
        : n_(static_cast<int>(chain.num_vertices)), m_(identity_minus_p(chain)) {
        solver_.compute(m_);
        if (solver_.info() != Eigen::Success)
            throw std::runtime_error("AbsorptionSystem: factorization failed");
    }

    int size() const { return n_; }

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
        Eigen::VectorXd x = solver_.solve(rhs);
        if (solver_.info() != Eigen::Success)
            throw std::runtime_error("AbsorptionSystem: solve failed");
        return x;
    }

    Eigen::VectorXd solve_unit(int column) const {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n_);
        e(column) = 1.0;
        return solve(e);
    }

    /// Max-norm residual of a candidate solution.
    double residual(const Eigen::VectorXd& x, const Eigen::VectorXd& rhs) const {
        return (m_ * x - rhs).cwiseAbs().maxCoeff();
    }

    const Eigen::SparseMatrix<double>& matrix() const { return m_; }

  private:
    int n_;
    Eigen::SparseMatrix<double> m_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> solver_;
};

/// Expected steps to absorption from each vertex: (I - P) h = 1.
inline std::vector<double> expected_absorption_times(const BaseChain& chain) {
    AbsorptionSystem sys(chain);
    Eigen::VectorXd h = sys.solve(Eigen::VectorXd::Ones(sys.size()));
    if (sys.residual(h, Eigen::VectorXd::Ones(sys.size())) > 1e-9)
        throw std::runtime_error("expected_absorption_times: residual above 1e-9");
    return {h.data(), h.data() + h.size()};
}

}  // namespace arw
