#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>

#include "arw/rng.hpp"

namespace arw {

struct BinomialCi {
    double lo = 0.0;
    double hi = 1.0;
};

/// Exact (Clopper-Pearson) two-sided confidence interval for a binomial
/// proportion.
inline BinomialCi clopper_pearson(std::uint64_t successes, std::uint64_t trials,
                                  double confidence = 0.99) {
    if (trials == 0) throw std::invalid_argument("clopper_pearson: zero trials");
    if (successes > trials) throw std::invalid_argument("clopper_pearson: successes > trials");
    const double alpha = 1.0 - confidence;
    using boost::math::binomial_distribution;
    BinomialCi ci;
    ci.lo = binomial_distribution<double>::find_lower_bound_on_p(
        static_cast<double>(trials), static_cast<double>(successes), alpha / 2);
    ci.hi = binomial_distribution<double>::find_upper_bound_on_p(
        static_cast<double>(trials), static_cast<double>(successes), alpha / 2);
    return ci;
}

/// Plug-in total-variation distance between two empirical distributions
/// given as count maps.
template <typename Key>
inline double tv_from_counts(const std::map<Key, std::uint64_t>& a, std::uint64_t na,
                             const std::map<Key, std::uint64_t>& b, std::uint64_t nb) {
    if (na == 0 || nb == 0) throw std::invalid_argument("tv_from_counts: empty sample");
    double tv = 0.0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() || ib != b.end()) {
        double pa = 0.0, pb = 0.0;
        if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
            pa = static_cast<double>(ia->second) / na;
            ++ia;
        } else if (ia == a.end() || ib->first < ia->first) {
            pb = static_cast<double>(ib->second) / nb;
            ++ib;
        } else {
            pa = static_cast<double>(ia->second) / na;
            pb = static_cast<double>(ib->second) / nb;
            ++ia;
            ++ib;
        }
        tv += std::abs(pa - pb);
    }
    return tv / 2.0;
}

/// TV distance between an empirical distribution and an exact law.
template <typename Key>
inline double tv_against_exact(const std::map<Key, std::uint64_t>& counts, std::uint64_t n,
                               const std::map<Key, double>& exact) {
    double tv = 0.0;
    auto ic = counts.begin();
    auto ie = exact.begin();
    while (ic != counts.end() || ie != exact.end()) {
        double pc = 0.0, pe = 0.0;
        if (ie == exact.end() || (ic != counts.end() && ic->first < ie->first)) {
            pc = static_cast<double>(ic->second) / n;
            ++ic;
        } else if (ic == counts.end() || ie->first < ic->first) {
            pe = ie->second;
            ++ie;
        } else {
            pc = static_cast<double>(ic->second) / n;
            pe = ie->second;
            ++ic;
            ++ie;
        }
        tv += std::abs(pc - pe);
    }
    return tv / 2.0;
}

/// Conservative Monte Carlo radius for a plug-in TV estimate between two
/// empirical distributions over `states` cells: the global
/// 2*sqrt(S/(2n)) bound per side, unioned with summed per-cell exact
/// binomial radii (the smaller of the two is reported).
template <typename Key>
inline double tv_radius(const std::map<Key, std::uint64_t>& a, std::uint64_t na,
                        const std::map<Key, std::uint64_t>& b, std::uint64_t nb,
                        std::uint64_t states) {
    double global = 2.0 * std::sqrt(states / (2.0 * na)) + 2.0 * std::sqrt(states / (2.0 * nb));
    auto percell_side = [](const std::map<Key, std::uint64_t>& m, std::uint64_t n) {
        double sum = 0.0;
        for (const auto& [k, c] : m) {
            auto ci = clopper_pearson(c, n, 0.99);
            double p = static_cast<double>(c) / n;
            sum += std::max(ci.hi - p, p - ci.lo);
        }
        return sum / 2.0;
    };
    double percell = percell_side(a, na) + percell_side(b, nb);
    return std::min(global, percell);
}

/// Pearson chi-square statistic for observed counts against expected
/// probabilities (cells with zero expectation must have zero counts).
inline double chi_square_stat(const std::vector<std::uint64_t>& observed,
                              const std::vector<double>& expected_prob, std::uint64_t n) {
    if (observed.size() != expected_prob.size())
        throw std::invalid_argument("chi_square_stat: size mismatch");
    double stat = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        double e = expected_prob[i] * n;
        if (e == 0.0) {
            if (observed[i] != 0) return std::numeric_limits<double>::infinity();
            continue;
        }
        double d = observed[i] - e;
        stat += d * d / e;
    }
    return stat;
}

inline double chi_square_quantile(double p, int df) {
    boost::math::chi_squared_distribution<double> dist(df);
    return boost::math::quantile(dist, p);
}

/// Nearest-rank quantile of a sorted sample.
template <typename T>
inline T quantile_sorted(const std::vector<T>& sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile: empty sample");
    if (p <= 0.0) return sorted.front();
    if (p >= 1.0) return sorted.back();
    std::size_t rank = static_cast<std::size_t>(std::ceil(p * sorted.size()));
    if (rank == 0) rank = 1;
    return sorted[rank - 1];
}

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
};

inline MeanStderr mean_stderr(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("mean_stderr: empty sample");
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= xs.size();
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var = xs.size() > 1 ? var / (xs.size() - 1) : 0.0;
    return {mean, std::sqrt(var / xs.size())};
}

inline double sample_variance(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= xs.size();
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return var / (xs.size() - 1);
}

struct BootstrapCi {
    double lo = 0.0;
    double hi = 0.0;
};

/// Percentile bootstrap CI for the sample variance.
inline BootstrapCi bootstrap_variance_ci(const std::vector<double>& xs, std::uint64_t seed,
                                         int resamples = 1000, double confidence = 0.95) {
    if (xs.size() < 2) return {0.0, 0.0};
    SplitMix rng(seed);
    std::vector<double> vars(resamples);
    std::vector<double> buf(xs.size());
    for (int b = 0; b < resamples; ++b) {
        for (std::size_t i = 0; i < xs.size(); ++i) buf[i] = xs[rng.next_below(xs.size())];
        vars[b] = sample_variance(buf);
    }
    std::sort(vars.begin(), vars.end());
    double alpha = (1.0 - confidence) / 2.0;
    return {quantile_sorted(vars, alpha), quantile_sorted(vars, 1.0 - alpha)};
}

/// Least-squares slope/intercept of y against x.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    bool valid = false;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) return {};
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) { mx += x[i]; my += y[i]; }
    mx /= x.size();
    my /= y.size();
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) return {};
    return {sxy / sxx, my - sxy / sxx * mx, true};
}

}  // namespace arw
