#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace shiftem {

inline double mean(const Eigen::VectorXd& v) {
    return v.size() == 0 ? 0.0 : v.mean();
}

/// Sample variance with the (n-1) denominator; 0 for n < 2.
inline double sample_variance(const Eigen::VectorXd& v) {
    const Eigen::Index n = v.size();
    if (n < 2) return 0.0;
    const double m = v.mean();
    return (v.array() - m).square().sum() / static_cast<double>(n - 1);
}

/// Population variance with the 1/n denominator (used where mse = bias^2 + var must be exact).
inline double population_variance(const Eigen::VectorXd& v) {
    const Eigen::Index n = v.size();
    if (n == 0) return 0.0;
    const double m = v.mean();
    return (v.array() - m).square().sum() / static_cast<double>(n);
}

inline double sample_sd(const Eigen::VectorXd& v) { return std::sqrt(sample_variance(v)); }

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Two-sided p-value for a standard-normal test statistic.
inline double two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

inline double clamp_to(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

}  // namespace shiftem
