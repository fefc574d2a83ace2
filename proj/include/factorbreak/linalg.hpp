#pragma once

#include <Eigen/Dense>

#include <utility>

namespace factorbreak {

/// Column-stacked lower triangle of a square matrix, length r(r+1)/2.
[[nodiscard]] Eigen::VectorXd vech(const Eigen::MatrixXd& m);

/// Column-stacked matrix, length r^2.
[[nodiscard]] Eigen::VectorXd vec(const Eigen::MatrixXd& m);

struct LogDet {
    double value = 0.0;
    /// Smallest eigenvalue fell below the singularity floor; value is -inf.
    bool singular = false;
};

/// Spectral log-determinant of a symmetric PSD matrix. The matrix counts as
/// singular when its smallest eigenvalue is at or below
/// max(1e-300, 64 * eps * reference_scale); reference_scale is the magnitude
/// of the quantities the matrix was formed from, so cancellation noise in
/// prefix-sum differences is not mistaken for a positive eigenvalue.
[[nodiscard]] LogDet log_det_spd(const Eigen::MatrixXd& m, double reference_scale = 0.0);

/// Symmetric square root via spectral decomposition, clipping negative
/// eigenvalues at zero. clipped_mass receives the sum of |clipped eigenvalues|.
[[nodiscard]] Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& m, double* clipped_mass = nullptr);

/// Smallest eigenvalue of a symmetric matrix.
[[nodiscard]] double min_eigenvalue(const Eigen::MatrixXd& m);

/// Split indices [ceil(eps*T), floor((1-eps)*T)] (1-based: k observations in
/// the first segment). Robust to representation error in eps*T.
[[nodiscard]] std::pair<Eigen::Index, Eigen::Index> trim_range(Eigen::Index periods, double epsilon);

/// ceil(eps * T) with the same rounding guard as trim_range.
[[nodiscard]] Eigen::Index min_segment(Eigen::Index periods, double epsilon);

}  // namespace factorbreak
