#include "factorbreak/report.hpp"

#include "factorbreak/errors.hpp"

#include <cmath>

namespace factorbreak {

bool TestReport::rejects(double level) const {
    for (const auto& [l, v] : reject)
        if (std::abs(l - level) < 1e-12) return v;
    throw DimensionError("level not in report");
}

LrCurve test_curve(const Eigen::MatrixXd& ghat, TestKind test, double epsilon) {
    switch (test) {
        case TestKind::LR: return sup_lr(ghat, epsilon);
        case TestKind::LRm: return sup_lr_m(ghat, epsilon);
        case TestKind::LRmND: return sup_lr_m_nd(ghat, epsilon);
        case TestKind::WaldWhite: return sup_wald_hi(ghat, epsilon, VarianceKind::White);
        case TestKind::WaldHAC: return sup_wald_hi(ghat, epsilon, VarianceKind::HAC);
        case TestKind::LMWhite: return sup_lm_hi(ghat, epsilon, VarianceKind::White);
        case TestKind::LMHAC: return sup_lm_hi(ghat, epsilon, VarianceKind::HAC);
        case TestKind::WWald: return weighted_wald_m(ghat);
    }
    throw DimensionError("unknown test");
}

void apply_critical_values(TestReport& report, const CvTable& table) {
    report.critical_values = table.quantiles;
    report.reject.clear();
    for (const auto& [level, value] : table.quantiles) report.reject.emplace_back(level, report.statistic > value);
    report.cv = table;
}

TestReport run_test(const Eigen::MatrixXd& ghat, TestKind test, const TestOptions& options) {
    TestReport rep;
    rep.test = test;
    rep.epsilon = options.epsilon;
    rep.r = static_cast<int>(ghat.cols());
    rep.breaks = options.breaks;
    rep.curve = test_curve(ghat, test, options.epsilon);

    if (options.breaks > 1) {
        if (test != TestKind::LR && test != TestKind::LRm)
            throw DimensionError("multiple breaks are supported for lr and lrm only");
        const MultiBreakResult multi = sup_lr_multi(ghat, options.breaks, options.epsilon, test == TestKind::LRm);
        rep.statistic = multi.sup;
        rep.break_dates = multi.breaks;
        for (std::size_t j = 0; j < multi.segment_singular.size(); ++j)
            if (multi.segment_singular[j]) rep.notes.push_back("segment " + std::to_string(j + 1) + " is singular");
    } else {
        rep.statistic = rep.curve.sup;
        rep.break_dates = {rep.curve.argmax_k};
        for (std::size_t i = 0; i < rep.curve.ks.size() && i < rep.curve.singular.size(); ++i) {
            if (rep.curve.ks[i] == rep.curve.argmax_k) rep.singular = rep.curve.singular[i];
        }
        if (rep.singular != SingularSide::None)
            rep.notes.push_back("singular subsample variance (" + std::string(to_string(rep.singular)) +
                                " segment) at the maximizing split");
    }

    if (options.simulate_critical_values) {
        apply_critical_values(rep, cv_for_report(ghat, test, options.epsilon, options.seed, options.sim,
                                                 options.breaks, options.cache));
    }
    return rep;
}

}  // namespace factorbreak
