#pragma once

#include <Eigen/Dense>

#include <string>

namespace factorbreak {

/// Lag-window choice for the Bartlett HAC estimator.
struct Bandwidth {
    bool automatic = true;
    double value = 0.0;

    [[nodiscard]] static Bandwidth newey_west() { return {true, 0.0}; }
    [[nodiscard]] static Bandwidth fixed(double s) { return {false, s}; }
};

struct LongRunVariance {
    Eigen::MatrixXd omega;
    double bandwidth = 0.0;
    std::string kernel = "bartlett";
};

/// Gamma_j = (1/T) sum_{t>j} u_t u_{t-j}'. The series is used as given (no
/// centering): callers pass moment deviations.
[[nodiscard]] Eigen::MatrixXd autocovariance(const Eigen::MatrixXd& series, Eigen::Index lag);

/// Newey-West (1994) plug-in bandwidth for the Bartlett kernel:
/// S_T = 1.1447 * ((s1/s0)^2)^(1/3) * T^(1/3), pilot lag
/// n = floor(4 (T/100)^(2/9)). The pilot sums use the trace of each sample
/// autocovariance, so flipping the sign of any moment leaves S_T unchanged.
/// No prewhitening.
[[nodiscard]] double newey_west_bandwidth(const Eigen::MatrixXd& series);

/// Omega = Gamma_0 + sum_j k(j/S_T) (Gamma_j + Gamma_j'), k(u) = max(0, 1-u).
/// series is T x d (rows are time).
[[nodiscard]] LongRunVariance hac_omega(const Eigen::MatrixXd& series,
                                        Bandwidth bandwidth = Bandwidth::newey_west());

}  // namespace factorbreak
