#include "factorbreak/breaktest.hpp"

#include "factorbreak/errors.hpp"
#include "factorbreak/hac.hpp"
#include "factorbreak/linalg.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace factorbreak {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SingularSide combine(bool first, bool second) {
    return static_cast<SingularSide>((first ? 1 : 0) | (second ? 2 : 0));
}

void finish(LrCurve& c) {
    c.sup = -kInf;
    for (std::size_t i = 0; i < c.values.size(); ++i) {
        if (c.values[i] > c.sup) {
            c.sup = c.values[i];
            c.argmax_k = c.ks[i];
        }
    }
}

LrCurve lr_curve(const Eigen::MatrixXd& ghat, double epsilon, bool demean, double offset) {
    const SegmentMoments seg(ghat);
    const auto [lo, hi] = trim_range(seg.periods(), epsilon);
    LrCurve c;
    for (Index k = lo; k <= hi; ++k) {
        bool s1 = false;
        bool s2 = false;
        const double v = seg.segment_gain(0, k, demean, &s1) + seg.segment_gain(k, seg.periods(), demean, &s2);
        c.ks.push_back(k);
        c.values.push_back(v + offset);
        c.singular.push_back(combine(s1, s2));
    }
    finish(c);
    return c;
}

Eigen::MatrixXd solve_psd(const Eigen::MatrixXd& m, const char* what) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const double hi = es.eigenvalues().maxCoeff();
    const double lo = es.eigenvalues().minCoeff();
    if (!(hi > 0.0) || lo <= 1e-14 * hi) {
        std::ostringstream msg;
        msg << what << " is singular (eigenvalues in [" << lo << ", " << hi << "], condition number "
            << (lo > 0.0 ? hi / lo : kInf) << ")";
        throw NumericalError(msg.str());
    }
    return es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd segment_vech_deviation(const Eigen::MatrixXd& g, Index begin, Index end,
                                       const Eigen::MatrixXd& center) {
    const Index r = g.cols();
    Eigen::MatrixXd out(end - begin, r * (r + 1) / 2);
    for (Index t = begin; t < end; ++t) {
        const Eigen::MatrixXd dev = g.row(t).transpose() * g.row(t) - center;
        out.row(t - begin) = vech(dev).transpose();
    }
    return out;
}

void check_ghat(const Eigen::MatrixXd& ghat) {
    if (ghat.rows() < 2 || ghat.cols() < 1) throw DimensionError("factor matrix must be T x r with T >= 2, r >= 1");
}

}  // namespace

std::string_view to_string(SingularSide s) {
    switch (s) {
        case SingularSide::None: return "none";
        case SingularSide::First: return "first";
        case SingularSide::Second: return "second";
        case SingularSide::Both: return "both";
    }
    return "?";
}

namespace {

struct TestName {
    TestKind kind;
    std::string_view name;
};

constexpr TestName kTestNames[] = {
    {TestKind::LR, "lr"},           {TestKind::LRm, "lrm"},          {TestKind::LRmND, "lrm-nd"},
    {TestKind::WaldWhite, "wald-white"}, {TestKind::WaldHAC, "wald-hac"}, {TestKind::LMWhite, "lm-white"},
    {TestKind::LMHAC, "lm-hac"},    {TestKind::WWald, "wwald"},
};

}  // namespace

TestKind parse_test_kind(std::string_view name) {
    for (const auto& t : kTestNames)
        if (t.name == name) return t.kind;
    throw ParseError("unknown test: " + std::string(name));
}

std::string_view to_string(TestKind kind) {
    for (const auto& t : kTestNames)
        if (t.kind == kind) return t.name;
    return "?";
}

SegmentMoments::SegmentMoments(const Eigen::MatrixXd& g)
    : periods_(g.rows()), dim_(g.cols()), sum_g_(g.rows() + 1, g.cols()), sum_gg_(g.rows() + 1, g.cols() * g.cols()) {
    check_ghat(g);
    sum_g_.row(0).setZero();
    sum_gg_.row(0).setZero();
    for (Index t = 0; t < periods_; ++t) {
        sum_g_.row(t + 1) = sum_g_.row(t) + g.row(t);
        for (Index j = 0; j < dim_; ++j)
            for (Index i = 0; i < dim_; ++i) sum_gg_(t + 1, j * dim_ + i) = sum_gg_(t, j * dim_ + i) + g(t, i) * g(t, j);
    }
}

Eigen::MatrixXd SegmentMoments::second_moment(Index begin, Index end, bool demean) const {
    const auto n = static_cast<double>(end - begin);
    Eigen::MatrixXd s(dim_, dim_);
    for (Index j = 0; j < dim_; ++j)
        for (Index i = 0; i < dim_; ++i) s(i, j) = (sum_gg_(end, j * dim_ + i) - sum_gg_(begin, j * dim_ + i)) / n;
    if (demean) {
        const Eigen::VectorXd mu = (sum_g_.row(end) - sum_g_.row(begin)).transpose() / n;
        s -= mu * mu.transpose();
    }
    return 0.5 * (s + s.transpose());
}

double SegmentMoments::segment_gain(Index begin, Index end, bool demean, bool* singular) const {
    const auto n = static_cast<double>(end - begin);
    double scale = 0.0;
    for (Index i = 0; i < dim_; ++i) scale = std::max(scale, sum_gg_(end, i * dim_ + i) / n);
    const LogDet ld = log_det_spd(second_moment(begin, end, demean), scale);
    if (singular) *singular = ld.singular;
    return ld.singular ? kInf : -n * ld.value;
}

SplitVariances split_variances(const Eigen::MatrixXd& ghat, Index k, bool demean_subsamples) {
    check_ghat(ghat);
    const Index t = ghat.rows();
    const Index r = ghat.cols();
    if (k < r || k > t - r) {
        std::ostringstream msg;
        msg << "split index " << k << " outside [" << r << ", " << (t - r) << "]";
        throw DimensionError(msg.str());
    }
    const SegmentMoments seg(ghat);
    return {seg.second_moment(0, k, demean_subsamples), seg.second_moment(k, t, demean_subsamples), k,
            demean_subsamples};
}

LrPoint lr_at(const Eigen::MatrixXd& ghat, Index k) {
    check_ghat(ghat);
    if (k < 1 || k >= ghat.rows()) throw DimensionError("split index outside [1, T-1]");
    const SegmentMoments seg(ghat);
    bool s1 = false;
    bool s2 = false;
    const double v = seg.segment_gain(0, k, false, &s1) + seg.segment_gain(k, ghat.rows(), false, &s2);
    return {v, combine(s1, s2)};
}

LrPoint lr_m_at(const Eigen::MatrixXd& ghat, Index k) {
    check_ghat(ghat);
    if (k < 1 || k >= ghat.rows()) throw DimensionError("split index outside [1, T-1]");
    const SegmentMoments seg(ghat);
    bool s1 = false;
    bool s2 = false;
    const double v = seg.segment_gain(0, k, true, &s1) + seg.segment_gain(k, ghat.rows(), true, &s2);
    return {v, combine(s1, s2)};
}

LrCurve sup_lr(const Eigen::MatrixXd& ghat, double epsilon) { return lr_curve(ghat, epsilon, false, 0.0); }

LrCurve sup_lr_m(const Eigen::MatrixXd& ghat, double epsilon) { return lr_curve(ghat, epsilon, true, 0.0); }

LrCurve sup_lr_m_nd(const Eigen::MatrixXd& ghat, double epsilon) {
    const SegmentMoments seg(ghat);
    bool singular = false;
    // T log|S~| is minus the full-sample segment gain.
    const double full = -seg.segment_gain(0, seg.periods(), true, &singular);
    if (singular) throw NumericalError("full-sample demeaned factor variance is singular");
    return lr_curve(ghat, epsilon, true, full);
}

MultiBreakResult sup_lr_multi(const Eigen::MatrixXd& ghat, int m, double epsilon, bool demean) {
    const SegmentMoments seg(ghat);
    const Index t = seg.periods();
    if (m < 1) throw DimensionError("number of breaks must be at least 1");
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw DimensionError("trimming epsilon must lie in (0, 0.5)");
    const Index h = std::max<Index>(1, min_segment(t, epsilon));
    if ((m + 1) * h > t) throw DimensionError("trimming leaves no admissible break configuration");

    // gain(a, b) for every segment [a, b) with b - a >= h.
    const auto width = static_cast<std::size_t>(t + 1);
    std::vector<double> gain(width * width, -kInf);
    auto at = [&](Index a, Index b) -> double& { return gain[static_cast<std::size_t>(a) * width + static_cast<std::size_t>(b)]; };
    for (Index a = 0; a + h <= t; ++a)
        for (Index b = a + h; b <= t; ++b) at(a, b) = seg.segment_gain(a, b, demean);

    // best[j][b]: max over j breaks of the gain of the first j+1 segments covering [0, b).
    std::vector<std::vector<double>> best(static_cast<std::size_t>(m), std::vector<double>(width, -kInf));
    std::vector<std::vector<Index>> from(static_cast<std::size_t>(m), std::vector<Index>(width, -1));
    for (Index b = h; b <= t; ++b) best[0][static_cast<std::size_t>(b)] = at(0, b);
    for (int j = 1; j < m; ++j) {
        const auto& prev = best[static_cast<std::size_t>(j - 1)];
        auto& cur = best[static_cast<std::size_t>(j)];
        auto& arg = from[static_cast<std::size_t>(j)];
        for (Index b = (j + 1) * h; b <= t; ++b) {
            for (Index a = j * h; a + h <= b; ++a) {
                const double v = prev[static_cast<std::size_t>(a)] + at(a, b);
                if (v > cur[static_cast<std::size_t>(b)]) {
                    cur[static_cast<std::size_t>(b)] = v;
                    arg[static_cast<std::size_t>(b)] = a;
                }
            }
        }
    }
    MultiBreakResult out;
    out.demeaned_subsamples = demean;
    out.sup = -kInf;
    Index last = -1;
    const auto& fin = best[static_cast<std::size_t>(m - 1)];
    for (Index a = m * h; a + h <= t; ++a) {
        const double v = fin[static_cast<std::size_t>(a)] + at(a, t);
        if (v > out.sup) {
            out.sup = v;
            last = a;
        }
    }
    out.breaks.assign(static_cast<std::size_t>(m), 0);
    Index b = last;
    for (int j = m - 1; j >= 0; --j) {
        out.breaks[static_cast<std::size_t>(j)] = b;
        b = from[static_cast<std::size_t>(j)][static_cast<std::size_t>(b)];
    }
    Index begin = 0;
    for (std::size_t j = 0; j <= out.breaks.size(); ++j) {
        const Index end = j < out.breaks.size() ? out.breaks[j] : t;
        bool singular = false;
        out.segment_gains.push_back(seg.segment_gain(begin, end, demean, &singular));
        out.segment_singular.push_back(singular);
        begin = end;
    }
    return out;
}

MultiBreakResult sup_lr_multi_exhaustive(const Eigen::MatrixXd& ghat, int m, double epsilon, bool demean) {
    if (m != 1 && m != 2) throw DimensionError("exhaustive search supports m = 1 or 2 only");
    const SegmentMoments seg(ghat);
    const Index t = seg.periods();
    const Index h = std::max<Index>(1, min_segment(t, epsilon));
    if ((m + 1) * h > t) throw DimensionError("trimming leaves no admissible break configuration");
    MultiBreakResult out;
    out.demeaned_subsamples = demean;
    out.sup = -kInf;
    if (m == 1) {
        for (Index k = h; k <= t - h; ++k) {
            const double v = seg.segment_gain(0, k, demean) + seg.segment_gain(k, t, demean);
            if (v > out.sup) {
                out.sup = v;
                out.breaks = {k};
            }
        }
    } else {
        for (Index k1 = h; k1 + 2 * h <= t; ++k1) {
            const double g1 = seg.segment_gain(0, k1, demean);
            for (Index k2 = k1 + h; k2 + h <= t; ++k2) {
                const double v = g1 + seg.segment_gain(k1, k2, demean) + seg.segment_gain(k2, t, demean);
                if (v > out.sup) {
                    out.sup = v;
                    out.breaks = {k1, k2};
                }
            }
        }
    }
    Index begin = 0;
    for (std::size_t j = 0; j <= out.breaks.size(); ++j) {
        const Index end = j < out.breaks.size() ? out.breaks[j] : t;
        bool singular = false;
        out.segment_gains.push_back(seg.segment_gain(begin, end, demean, &singular));
        out.segment_singular.push_back(singular);
        begin = end;
    }
    return out;
}

Eigen::MatrixXd vec_moments(const Eigen::MatrixXd& g) {
    const Index r = g.cols();
    Eigen::MatrixXd out(g.rows(), r * r);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(r, r);
    for (Index t = 0; t < g.rows(); ++t) {
        const Eigen::MatrixXd dev = g.row(t).transpose() * g.row(t) - eye;
        out.row(t) = vec(dev).transpose();
    }
    return out;
}

Eigen::MatrixXd vech_moments(const Eigen::MatrixXd& g) {
    return segment_vech_deviation(g, 0, g.rows(), Eigen::MatrixXd::Identity(g.cols(), g.cols()));
}

Eigen::MatrixXd meanvar_moments(const Eigen::MatrixXd& g) {
    const Index r = g.cols();
    Eigen::MatrixXd out(g.rows(), r + r * r);
    out.leftCols(r) = g;
    out.rightCols(r * r) = vec_moments(g) / std::sqrt(2.0);
    return out;
}

Eigen::MatrixXd wwald_moments(const Eigen::MatrixXd& g) {
    const Index r = g.cols();
    Eigen::MatrixXd out(g.rows(), r + r * (r + 1) / 2);
    out.leftCols(r) = g;
    out.rightCols(r * (r + 1) / 2) = vech_moments(g);
    return out;
}

LrCurve sup_wald_hi(const Eigen::MatrixXd& ghat, double epsilon, VarianceKind variance) {
    check_ghat(ghat);
    const Index t = ghat.rows();
    const auto [lo, hi] = trim_range(t, epsilon);
    const SegmentMoments seg(ghat);
    const Bandwidth bw =
        variance == VarianceKind::HAC ? Bandwidth::fixed(newey_west_bandwidth(vech_moments(ghat))) : Bandwidth::fixed(0.0);
    const Eigen::MatrixXd u = vech_moments(ghat);
    LrCurve c;
    for (Index k = lo; k <= hi; ++k) {
        const double pi = static_cast<double>(k) / static_cast<double>(t);
        const Eigen::MatrixXd s1 = seg.second_moment(0, k, false);
        const Eigen::MatrixXd s2 = seg.second_moment(k, t, false);
        const Eigen::VectorXd a = std::sqrt(static_cast<double>(t)) * vech(s1 - s2);
        c.ks.push_back(k);
        if (a.isZero(0.0)) {
            c.values.push_back(0.0);
            continue;
        }
        const Eigen::MatrixXd o1 = hac_omega(u.topRows(k), bw).omega;
        const Eigen::MatrixXd o2 = hac_omega(u.bottomRows(t - k), bw).omega;
        const Eigen::MatrixXd inv = solve_psd(o1 / pi + o2 / (1.0 - pi), "Wald variance of A(k)");
        c.values.push_back(a.dot(inv * a));
    }
    finish(c);
    return c;
}

LrCurve sup_lm_hi(const Eigen::MatrixXd& ghat, double epsilon, VarianceKind variance) {
    check_ghat(ghat);
    const Index t = ghat.rows();
    const auto [lo, hi] = trim_range(t, epsilon);
    const Eigen::MatrixXd u = vech_moments(ghat);
    const Eigen::MatrixXd omega =
        variance == VarianceKind::HAC ? hac_omega(u).omega : hac_omega(u, Bandwidth::fixed(0.0)).omega;
    const Eigen::MatrixXd inv = solve_psd(omega, "LM variance");
    LrCurve c;
    Eigen::VectorXd partial = Eigen::VectorXd::Zero(u.cols());
    const double root_t = std::sqrt(static_cast<double>(t));
    for (Index k = 1; k <= hi; ++k) {
        partial += u.row(k - 1).transpose();
        if (k < lo) continue;
        const double pi = static_cast<double>(k) / static_cast<double>(t);
        const Eigen::VectorXd s = partial / root_t;
        c.ks.push_back(k);
        c.values.push_back(s.dot(inv * s) / (pi * (1.0 - pi)));
    }
    finish(c);
    return c;
}

LrCurve weighted_wald_m(const Eigen::MatrixXd& ghat) {
    check_ghat(ghat);
    const Index t = ghat.rows();
    const Index r = ghat.cols();
    if (r + 1 > t - 1) throw DimensionError("weighted Wald needs T > r + 1");
    const Eigen::MatrixXd u = wwald_moments(ghat);
    const Eigen::MatrixXd inv = solve_psd(hac_omega(u).omega, "weighted Wald long-run variance");
    LrCurve c;
    Eigen::VectorXd partial = Eigen::VectorXd::Zero(u.cols());
    const double root_t = std::sqrt(static_cast<double>(t));
    for (Index k = 1; k <= t - 1; ++k) {
        partial += u.row(k - 1).transpose();
        if (k < r + 1) continue;
        const Eigen::VectorXd s = partial / root_t;
        c.ks.push_back(k);
        c.values.push_back(s.dot(inv * s));
    }
    finish(c);
    return c;
}

Index estimate_break_date(const Eigen::MatrixXd& ghat, double epsilon, DateMethod method) {
    switch (method) {
        case DateMethod::LR: return sup_lr(ghat, epsilon).argmax_k;
        case DateMethod::LRm: return sup_lr_m(ghat, epsilon).argmax_k;
        case DateMethod::Wald: return sup_wald_hi(ghat, epsilon, VarianceKind::HAC).argmax_k;
    }
    return 0;
}

}  // namespace factorbreak
