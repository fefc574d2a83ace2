#pragma once

#include "factorbreak/panel.hpp"

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <vector>

namespace factorbreak {

/// Principal-components estimate normalized so that G'G/T = I_r and
/// Lambda'Lambda is diagonal.
struct FactorEstimate {
    Eigen::MatrixXd ghat;        ///< T x r estimated factors, rows g_t.
    Eigen::MatrixXd lambda_hat;  ///< N x r loadings, X'G/T.
    Eigen::VectorXd eigvals;     ///< r largest eigenvalues of XX'/(NT), decreasing.
    int r = 0;
    /// Non-fatal diagnostics, e.g. near-tied eigenvalues.
    std::vector<std::string> warnings;
};

/// Extract r factors from the T x T time-by-time Gram matrix. Each factor's
/// sign is fixed so that the largest-magnitude loading entry is positive.
[[nodiscard]] FactorEstimate estimate_factors(const Panel& panel, int r);

enum class FactorCriterion { ICp1, ICp2, ER, GR };

[[nodiscard]] FactorCriterion parse_criterion(std::string_view name);
[[nodiscard]] std::string_view to_string(FactorCriterion c);

/// Bai-Ng information criteria (argmin) or Ahn-Horenstein ratios (argmax)
/// over k = 1..r_max.
[[nodiscard]] int select_num_factors(const Panel& panel, int r_max, FactorCriterion criterion);

/// Same selection, from the full decreasing spectrum of XX' (all min(N,T)
/// leading eigenvalues) when it is already available.
[[nodiscard]] int select_num_factors(const Eigen::VectorXd& gram_eigvals, Eigen::Index n_series,
                                     Eigen::Index n_periods, int r_max, FactorCriterion criterion);

/// Criterion values for k = 1..r_max (index 0 holds k = 1).
[[nodiscard]] std::vector<double> criterion_values(const Eigen::VectorXd& gram_eigvals,
                                                   Eigen::Index n_series, Eigen::Index n_periods,
                                                   int r_max, FactorCriterion criterion);

/// Decreasing eigenvalues of the T x T matrix XX'.
[[nodiscard]] Eigen::VectorXd gram_spectrum(const Eigen::MatrixXd& x);

}  // namespace factorbreak
