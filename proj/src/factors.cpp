#include "factorbreak/factors.hpp"

#include "factorbreak/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

namespace factorbreak {

namespace {

void check_r_max(int r_max, Eigen::Index n, Eigen::Index t) {
    const auto bound = std::min(n, t) - 1;
    if (r_max < 1 || r_max > bound) {
        std::ostringstream msg;
        msg << "r_max must lie in [1, " << bound << "], got " << r_max;
        throw DimensionError(msg.str());
    }
}

}  // namespace

FactorEstimate estimate_factors(const Panel& panel, int r) {
    panel.validate();
    const auto& x = panel.values;
    const Eigen::Index t = x.rows();
    const Eigen::Index n = x.cols();
    if (r < 1 || r > std::min(n, t - 1)) {
        std::ostringstream msg;
        msg << "factor count r=" << r << " outside [1, " << std::min(n, t - 1) << "]";
        throw DimensionError(msg.str());
    }

    const Eigen::MatrixXd gram = x * x.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition of the Gram matrix failed");

    // Eigen returns ascending eigenvalues; the leading ones sit at the end.
    const Eigen::VectorXd& all = es.eigenvalues();
    const double top = all(t - 1);
    const double rth = all(t - r);
    if (!(top > 0.0) || rth <= top * 1e-12) {
        std::ostringstream msg;
        msg << "degenerate eigenvalues: leading " << top << ", r-th " << rth;
        throw NumericalError(msg.str());
    }

    FactorEstimate est;
    est.r = r;
    est.ghat.resize(t, r);
    est.eigvals.resize(r);
    const double scale = static_cast<double>(n) * static_cast<double>(t);
    for (int j = 0; j < r; ++j) {
        est.ghat.col(j) = std::sqrt(static_cast<double>(t)) * es.eigenvectors().col(t - 1 - j);
        est.eigvals(j) = all(t - 1 - j) / scale;
    }
    est.lambda_hat = x.transpose() * est.ghat / static_cast<double>(t);

    for (int j = 0; j < r; ++j) {
        Eigen::Index idx = 0;
        est.lambda_hat.col(j).cwiseAbs().maxCoeff(&idx);
        if (est.lambda_hat(idx, j) < 0.0) {
            est.ghat.col(j) *= -1.0;
            est.lambda_hat.col(j) *= -1.0;
        }
    }

    for (int j = 0; j < r && t - 2 - j >= 0; ++j) {
        const double a = all(t - 1 - j);
        const double b = all(t - 2 - j);
        if (a - b < 1e-6 * std::abs(a)) {
            std::ostringstream msg;
            msg << "eigenvalues " << (j + 1) << " and " << (j + 2) << " are nearly tied (" << a << ", "
                << b << "); factor directions may be unstable";
            est.warnings.push_back(msg.str());
        }
    }
    return est;
}

FactorCriterion parse_criterion(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "icp1") return FactorCriterion::ICp1;
    if (lower == "icp2") return FactorCriterion::ICp2;
    if (lower == "er") return FactorCriterion::ER;
    if (lower == "gr") return FactorCriterion::GR;
    throw ParseError("unknown factor-count criterion: " + std::string(name));
}

std::string_view to_string(FactorCriterion c) {
    switch (c) {
        case FactorCriterion::ICp1: return "icp1";
        case FactorCriterion::ICp2: return "icp2";
        case FactorCriterion::ER: return "er";
        case FactorCriterion::GR: return "gr";
    }
    return "?";
}

Eigen::VectorXd gram_spectrum(const Eigen::MatrixXd& x) {
    // XX' and X'X share their nonzero spectrum; decompose the smaller one.
    const Eigen::MatrixXd small = x.rows() <= x.cols() ? Eigen::MatrixXd(x * x.transpose())
                                                       : Eigen::MatrixXd(x.transpose() * x);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(small, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("eigenvalue computation failed");
    Eigen::VectorXd ev = es.eigenvalues().reverse();
    return ev.cwiseMax(0.0);
}

std::vector<double> criterion_values(const Eigen::VectorXd& mu, Eigen::Index n, Eigen::Index t,
                                     int r_max, FactorCriterion criterion) {
    check_r_max(r_max, n, t);
    if (mu.size() < r_max + 1) throw DimensionError("spectrum shorter than r_max + 1");

    const double nt = static_cast<double>(n) * static_cast<double>(t);
    const double ratio = (static_cast<double>(n) + static_cast<double>(t)) / nt;
    const double total = mu.sum();
    // tail(k) = sum of eigenvalues beyond the k-th.
    auto tail = [&](int k) { return std::max(0.0, total - mu.head(k).sum()); };

    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(r_max));
    const double ninf = -std::numeric_limits<double>::infinity();
    for (int k = 1; k <= r_max; ++k) {
        switch (criterion) {
            case FactorCriterion::ICp1:
                out.push_back(std::log(tail(k) / nt) + k * ratio * std::log(1.0 / ratio));
                break;
            case FactorCriterion::ICp2:
                out.push_back(std::log(tail(k) / nt) +
                              k * ratio * std::log(static_cast<double>(std::min(n, t))));
                break;
            case FactorCriterion::ER: {
                const double den = mu(k);
                out.push_back(den > 0.0 ? mu(k - 1) / den : ninf);
                break;
            }
            case FactorCriterion::GR: {
                const double v_prev = tail(k - 1);
                const double v_k = tail(k);
                const double v_next = tail(k + 1);
                if (v_k <= 0.0 || v_next <= 0.0) {
                    out.push_back(ninf);
                } else {
                    out.push_back(std::log(v_prev / v_k) / std::log(v_k / v_next));
                }
                break;
            }
        }
    }
    return out;
}

int select_num_factors(const Eigen::VectorXd& mu, Eigen::Index n, Eigen::Index t, int r_max,
                       FactorCriterion criterion) {
    const auto vals = criterion_values(mu, n, t, r_max, criterion);
    const bool minimize = criterion == FactorCriterion::ICp1 || criterion == FactorCriterion::ICp2;
    std::size_t best = 0;
    for (std::size_t i = 1; i < vals.size(); ++i) {
        if (minimize ? vals[i] < vals[best] : vals[i] > vals[best]) best = i;
    }
    return static_cast<int>(best) + 1;
}

int select_num_factors(const Panel& panel, int r_max, FactorCriterion criterion) {
    panel.validate();
    check_r_max(r_max, panel.series(), panel.periods());
    return select_num_factors(gram_spectrum(panel.values), panel.series(), panel.periods(), r_max,
                              criterion);
}

}  // namespace factorbreak
