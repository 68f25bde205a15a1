#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace arw {

/// Per-vertex sleep rates lambda_v in [0, inf], with the derived sleep
/// probability q_v = lambda_v / (1 + lambda_v). q_v = 0 iff lambda_v = 0 and
/// q_v = 1 iff lambda_v = inf (finite rates that would round q to 1 are
/// nudged below it to keep the iff exact).
class SleepRates {
  public:
    SleepRates(std::uint32_t n, double lambda) : lambda_(n, lambda), q_(n, q_from(lambda)) {
        check(lambda);
    }

    explicit SleepRates(std::vector<double> lambda) : lambda_(std::move(lambda)) {
        q_.reserve(lambda_.size());
        for (double l : lambda_) {
            check(l);
            q_.push_back(q_from(l));
        }
    }

    std::uint32_t size() const { return static_cast<std::uint32_t>(lambda_.size()); }
    double lambda(std::uint32_t v) const { return lambda_[v]; }
    double q(std::uint32_t v) const { return q_[v]; }
    bool zero_at(std::uint32_t v) const { return lambda_[v] == 0.0; }
    bool infinite_at(std::uint32_t v) const { return std::isinf(lambda_[v]); }

    bool constant() const {
        for (double l : lambda_)
            if (l != lambda_[0]) return false;
        return true;
    }

    const std::vector<double>& lambdas() const { return lambda_; }

  private:
    static void check(double l) {
        if (std::isnan(l) || l < 0.0)
            throw std::invalid_argument("SleepRates: lambda must be in [0, inf]");
    }
    static double q_from(double l) {
        if (std::isinf(l)) return 1.0;
        double q = l / (1.0 + l);
        if (q >= 1.0) q = std::nextafter(1.0, 0.0);
        return q;
    }

    std::vector<double> lambda_;
    std::vector<double> q_;
};

}  // namespace arw
