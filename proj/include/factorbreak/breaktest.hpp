#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace factorbreak {

using Index = Eigen::Index;

/// Which side of a split produced a numerically singular second-moment
/// matrix. A singular side sends the likelihood ratio to +infinity.
enum class SingularSide : std::uint8_t { None = 0, First = 1, Second = 2, Both = 3 };

[[nodiscard]] std::string_view to_string(SingularSide s);

/// Pre- and post-split factor second moments at split k (k observations in
/// the first segment).
struct SplitVariances {
    Eigen::MatrixXd sigma1;
    Eigen::MatrixXd sigma2;
    Index k = 0;
    bool demeaned_subsamples = false;
};

/// Plain mode uses raw second moments (no subsample mean removed); demeaned
/// mode removes each subsample's own mean. Requires r <= k <= T - r.
[[nodiscard]] SplitVariances split_variances(const Eigen::MatrixXd& ghat, Index k, bool demean_subsamples);

/// A statistic evaluated over a range of split indices.
struct LrCurve {
    std::vector<Index> ks;
    std::vector<double> values;
    std::vector<SingularSide> singular;  ///< Empty for statistics without log-determinants.
    double sup = 0.0;
    Index argmax_k = 0;  ///< Smallest index attaining sup.
};

struct LrPoint {
    double value = 0.0;
    SingularSide singular = SingularSide::None;
};

/// Cumulative sums of g_t and g_t g_t' for O(r^3) segment second moments.
class SegmentMoments {
public:
    explicit SegmentMoments(const Eigen::MatrixXd& ghat);

    [[nodiscard]] Index periods() const { return periods_; }
    [[nodiscard]] Index dim() const { return dim_; }

    /// Second moment of observations [begin, end) (0-based, half open),
    /// optionally about the segment mean.
    [[nodiscard]] Eigen::MatrixXd second_moment(Index begin, Index end, bool demean) const;

    /// -(end-begin) * log|second_moment|, +infinity if singular.
    [[nodiscard]] double segment_gain(Index begin, Index end, bool demean, bool* singular = nullptr) const;

private:
    Index periods_;
    Index dim_;
    Eigen::MatrixXd sum_g_;   // (T+1) x r
    Eigen::MatrixXd sum_gg_;  // (T+1) x r^2, column-major vec of g g'
};

/// LR(k) = -k log|S1(k)| - (T-k) log|S2(k)| with raw subsample second moments.
[[nodiscard]] LrPoint lr_at(const Eigen::MatrixXd& ghat, Index k);
/// LR_m(k): as lr_at with subsample-demeaned second moments.
[[nodiscard]] LrPoint lr_m_at(const Eigen::MatrixXd& ghat, Index k);

/// sup of LR(k) over [ceil(eps T), floor((1-eps) T)].
[[nodiscard]] LrCurve sup_lr(const Eigen::MatrixXd& ghat, double epsilon);
[[nodiscard]] LrCurve sup_lr_m(const Eigen::MatrixXd& ghat, double epsilon);
/// Variant for factors extracted from data that were not demeaned:
/// adds T log|S~| with S~ the full-sample demeaned second moment.
[[nodiscard]] LrCurve sup_lr_m_nd(const Eigen::MatrixXd& ghat, double epsilon);

struct MultiBreakResult {
    double sup = 0.0;
    std::vector<Index> breaks;           ///< k_1 < ... < k_m.
    std::vector<double> segment_gains;   ///< -len * log|S_j| per segment.
    std::vector<bool> segment_singular;
    bool demeaned_subsamples = false;
};

/// Maximize the segment-additive LR over m breaks with every segment at least
/// ceil(eps T) long, by dynamic programming over segment boundaries.
[[nodiscard]] MultiBreakResult sup_lr_multi(const Eigen::MatrixXd& ghat, int m, double epsilon,
                                            bool demean_subsamples);
/// Brute-force enumeration of every admissible (k_1, k_2); m must be 1 or 2.
[[nodiscard]] MultiBreakResult sup_lr_multi_exhaustive(const Eigen::MatrixXd& ghat, int m, double epsilon,
                                                       bool demean_subsamples);

enum class VarianceKind { White, HAC };

/// Han-Inoue sup-Wald: A(k) = sqrt(T) vech(S1 - S2) weighted by the inverse of
/// Omega1(k)/pi + Omega2(k)/(1-pi), each Omega the White or Bartlett HAC
/// variance of vech(g g' - I) over its own segment. The HAC bandwidth is the
/// Newey-West choice on the full-sample series.
[[nodiscard]] LrCurve sup_wald_hi(const Eigen::MatrixXd& ghat, double epsilon, VarianceKind variance);

/// Han-Inoue sup-LM: partial sums of vech(g g' - I), variance estimated once
/// on the full sample, divided by pi(1-pi).
[[nodiscard]] LrCurve sup_lm_hi(const Eigen::MatrixXd& ghat, double epsilon, VarianceKind variance);

/// k(T-k)/T^2-weighted Wald for a joint mean and variance change, maximized
/// over k = r+1..T-1; nuisance-parameter free.
[[nodiscard]] LrCurve weighted_wald_m(const Eigen::MatrixXd& ghat);

/// Single-break tests exposed to reports and the command line.
enum class TestKind { LR, LRm, LRmND, WaldWhite, WaldHAC, LMWhite, LMHAC, WWald };

/// Accepts the command-line spellings: lr, lrm, lrm-nd, wald-white, wald-hac,
/// lm-white, lm-hac, wwald.
[[nodiscard]] TestKind parse_test_kind(std::string_view name);
[[nodiscard]] std::string_view to_string(TestKind kind);

enum class DateMethod { LR, LRm, Wald };

/// argmax of the chosen curve, smallest index on ties. Wald uses the HAC variant.
[[nodiscard]] Index estimate_break_date(const Eigen::MatrixXd& ghat, double epsilon, DateMethod method);

/// Moment series (rows are time).
[[nodiscard]] Eigen::MatrixXd vec_moments(const Eigen::MatrixXd& ghat);      ///< vec(g g' - I), r^2 columns
[[nodiscard]] Eigen::MatrixXd vech_moments(const Eigen::MatrixXd& ghat);     ///< vech(g g' - I)
[[nodiscard]] Eigen::MatrixXd meanvar_moments(const Eigen::MatrixXd& ghat);  ///< [g; vec(g g' - I)/sqrt 2]
[[nodiscard]] Eigen::MatrixXd wwald_moments(const Eigen::MatrixXd& ghat);    ///< [g; vech(g g' - I)]

}  // namespace factorbreak
