#pragma once

#include "factorbreak/breaktest.hpp"
#include "factorbreak/limitdist.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace factorbreak {

struct TestReport {
    TestKind test = TestKind::LR;
    double statistic = 0.0;
    std::vector<std::pair<double, double>> critical_values;  ///< level -> value
    std::vector<std::pair<double, bool>> reject;             ///< level -> statistic > value
    std::vector<Index> break_dates;
    double epsilon = 0.15;
    int r = 0;
    int breaks = 1;
    LrCurve curve;  ///< single-break curve, also for multi-break runs
    SingularSide singular = SingularSide::None;
    std::optional<CvTable> cv;
    std::vector<std::string> notes;

    [[nodiscard]] bool rejects(double level) const;
};

struct TestOptions {
    double epsilon = 0.15;
    int breaks = 1;
    std::uint64_t seed = 0;
    SimSettings sim;
    bool simulate_critical_values = true;
    const CvCache* cache = nullptr;
};

/// Curve for a single-break statistic.
[[nodiscard]] LrCurve test_curve(const Eigen::MatrixXd& ghat, TestKind test, double epsilon);

/// Statistic, break date(s) and, unless disabled, plug-in critical values.
[[nodiscard]] TestReport run_test(const Eigen::MatrixXd& ghat, TestKind test, const TestOptions& options = {});

/// Attach critical values from an existing table and set the decisions.
void apply_critical_values(TestReport& report, const CvTable& table);

}  // namespace factorbreak
