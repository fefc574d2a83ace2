#include "factorbreak/linalg.hpp"

#include "factorbreak/errors.hpp"

#include <cmath>
#include <limits>

namespace factorbreak {

Eigen::VectorXd vech(const Eigen::MatrixXd& m) {
    const Eigen::Index r = m.rows();
    Eigen::VectorXd out(r * (r + 1) / 2);
    Eigen::Index pos = 0;
    for (Eigen::Index j = 0; j < r; ++j)
        for (Eigen::Index i = j; i < r; ++i) out(pos++) = m(i, j);
    return out;
}

Eigen::VectorXd vec(const Eigen::MatrixXd& m) {
    return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

LogDet log_det_spd(const Eigen::MatrixXd& m, double reference_scale) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double floor =
        std::max(1e-300, 64.0 * std::numeric_limits<double>::epsilon() * std::abs(reference_scale));
    if (es.info() != Eigen::Success || !(ev(0) > floor)) {
        return {-std::numeric_limits<double>::infinity(), true};
    }
    return {ev.array().log().sum(), false};
}

Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& m, double* clipped_mass) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed in sym_sqrt");
    Eigen::VectorXd ev = es.eigenvalues();
    double clipped = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < 0.0) {
            clipped += -ev(i);
            ev(i) = 0.0;
        }
    }
    if (clipped_mass) *clipped_mass = clipped;
    const Eigen::MatrixXd& v = es.eigenvectors();
    return v * ev.cwiseSqrt().asDiagonal() * v.transpose();
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

Eigen::Index min_segment(Eigen::Index periods, double epsilon) {
    return static_cast<Eigen::Index>(std::ceil(epsilon * static_cast<double>(periods) - 1e-9));
}

std::pair<Eigen::Index, Eigen::Index> trim_range(Eigen::Index periods, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw DimensionError("trimming epsilon must lie in (0, 0.5)");
    const auto lo = std::max<Eigen::Index>(1, min_segment(periods, epsilon));
    const auto hi = std::min<Eigen::Index>(
        periods - 1,
        static_cast<Eigen::Index>(std::floor((1.0 - epsilon) * static_cast<double>(periods) + 1e-9)));
    if (lo > hi) throw DimensionError("trimmed split range is empty");
    return {lo, hi};
}

}  // namespace factorbreak
