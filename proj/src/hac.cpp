#include "factorbreak/hac.hpp"

#include "factorbreak/errors.hpp"

#include <algorithm>
#include <cmath>

namespace factorbreak {

Eigen::MatrixXd autocovariance(const Eigen::MatrixXd& u, Eigen::Index lag) {
    const Eigen::Index t = u.rows();
    if (lag >= t) return Eigen::MatrixXd::Zero(u.cols(), u.cols());
    return u.bottomRows(t - lag).transpose() * u.topRows(t - lag) / static_cast<double>(t);
}

double newey_west_bandwidth(const Eigen::MatrixXd& u) {
    const Eigen::Index t = u.rows();
    const auto pilot = std::min<Eigen::Index>(
        t - 1, static_cast<Eigen::Index>(std::floor(4.0 * std::pow(static_cast<double>(t) / 100.0, 2.0 / 9.0))));
    double s0 = 0.0;
    double s1 = 0.0;
    for (Eigen::Index j = 0; j <= pilot; ++j) {
        const double sigma = (u.bottomRows(t - j).array() * u.topRows(t - j).array()).sum() / static_cast<double>(t);
        if (j == 0) {
            s0 += sigma;
        } else {
            s0 += 2.0 * sigma;
            s1 += 2.0 * static_cast<double>(j) * sigma;
        }
    }
    if (!(s0 > 0.0)) return 0.0;
    const double gamma = 1.1447 * std::cbrt((s1 / s0) * (s1 / s0));
    return gamma * std::cbrt(static_cast<double>(t));
}

LongRunVariance hac_omega(const Eigen::MatrixXd& u, Bandwidth bandwidth) {
    if (u.cols() < 1) throw DimensionError("HAC needs at least one moment column");
    if (u.rows() <= 2) throw DimensionError("HAC needs more than two observations");
    if (!bandwidth.automatic && !(bandwidth.value >= 0.0)) throw DimensionError("bandwidth must be nonnegative");

    LongRunVariance out;
    out.bandwidth = bandwidth.automatic ? newey_west_bandwidth(u) : bandwidth.value;
    out.omega = autocovariance(u, 0);
    const double s = out.bandwidth;
    for (Eigen::Index j = 1; j < u.rows(); ++j) {
        const double w = s > 0.0 ? 1.0 - static_cast<double>(j) / s : 0.0;
        if (w <= 0.0) break;
        const Eigen::MatrixXd g = autocovariance(u, j);
        out.omega += w * (g + g.transpose());
    }
    out.omega = 0.5 * (out.omega + out.omega.transpose());
    return out;
}

}  // namespace factorbreak
