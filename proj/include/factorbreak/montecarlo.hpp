#pragma once

#include "factorbreak/breaktest.hpp"
#include "factorbreak/factors.hpp"
#include "factorbreak/limitdist.hpp"
#include "factorbreak/panel.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace factorbreak {

enum class FactorDist { Gaussian, StudentT10 };

/// none: Lambda2 = Lambda1
/// loading-shift: Lambda2 = Lambda1 + N(0, b I)
/// rotational: Lambda2 = a Lambda1
/// diminishing: Lambda2 = Lambda1 C
/// factor-mean: loadings fixed, factors shifted by -d before and +d after the break
enum class BreakType { None, LoadingShift, Rotational, Diminishing, FactorMeanChange };

[[nodiscard]] FactorDist parse_factor_dist(std::string_view name);
[[nodiscard]] std::string_view to_string(FactorDist d);
[[nodiscard]] BreakType parse_break_type(std::string_view name);
[[nodiscard]] std::string_view to_string(BreakType b);

struct DgpConfig {
    Index n = 100;
    Index t = 100;
    int r0 = 3;
    double rho = 0.0;
    FactorDist factor_dist = FactorDist::Gaussian;
    BreakType break_type = BreakType::None;
    double b = 0.0;             ///< loading-shift variance
    double a = 1.0;             ///< rotational scale
    double d = 0.2;             ///< factor mean shift
    Eigen::MatrixXd c;          ///< diminishing matrix; empty means diag(1, .., 1, 0)
    std::vector<Index> breaks;  ///< break dates (last pre-break period); empty means {T/2}
    double noise_variance = -1.0;  ///< negative means r0
    std::uint64_t seed = 0;

    [[nodiscard]] std::vector<Index> break_dates() const;
    [[nodiscard]] double error_variance() const { return noise_variance < 0.0 ? r0 : noise_variance; }
    [[nodiscard]] Eigen::MatrixXd c_matrix() const;
    void validate() const;
};

struct DgpTruth {
    std::vector<Eigen::MatrixXd> loadings;  ///< one N x r0 matrix per regime
    Eigen::MatrixXd factors;                ///< T x r0, after any mean shift
    std::vector<Index> breaks;
};

struct GeneratedPanel {
    Panel panel;
    DgpTruth truth;
};

/// Draw from substream(seed, replication).
[[nodiscard]] GeneratedPanel gen_panel(const DgpConfig& config, std::uint64_t replication = 0);

/// Shared tables use the Gaussian i.i.d. value of omega; plug-in re-estimates
/// it by HAC on every replication.
enum class CvPolicy { PlugIn, Shared };

[[nodiscard]] CvPolicy parse_cv_policy(std::string_view name);
[[nodiscard]] std::string_view to_string(CvPolicy p);

/// Long-run variance of the family's moment vector when g_t is i.i.d. N(0, I).
[[nodiscard]] Eigen::MatrixXd gaussian_iid_omega(CvFamily family, int r);

struct ExperimentConfig {
    DgpConfig dgp;
    int reps = 100;
    std::vector<TestKind> tests{TestKind::LR, TestKind::LRm};
    double epsilon = 0.15;
    CvPolicy cv_policy = CvPolicy::PlugIn;
    SimSettings sim;
    FactorCriterion criterion = FactorCriterion::ICp1;
    int r_max = 10;
    std::optional<int> fixed_r;
    std::uint64_t cv_seed = 0;
    unsigned workers = 0;
    bool keep_tables = false;  ///< retain each replication's critical-value tables
};

struct ReplicationRecord {
    bool ok = false;
    std::string error;
    int r = 0;
    std::vector<double> statistic;      ///< per test
    std::vector<Index> break_date;      ///< per test
    std::vector<std::vector<bool>> reject;  ///< per test, per level
    std::vector<CvTable> tables;        ///< per test when keep_tables
    double seconds = 0.0;
};

struct TestTally {
    TestKind test = TestKind::LR;
    std::vector<double> levels;
    std::vector<int> rejections;
    std::vector<double> frequency;
    int date_exact = 0;  ///< estimated date equals the first true break
    double mean_statistic = 0.0;
};

struct ExperimentResult {
    ExperimentConfig config;
    int completed = 0;
    int failed = 0;
    std::vector<std::string> failures;
    std::vector<TestTally> tallies;
    std::vector<ReplicationRecord> records;
    std::vector<int> selected_r;  ///< count of replications selecting r = index
    double mean_seconds = 0.0;

    [[nodiscard]] const TestTally& tally(TestKind test) const;
};

[[nodiscard]] ExperimentResult run_experiment(const ExperimentConfig& config);

/// One row per result: N, T, break type, magnitude, then test@level columns.
void write_table_csv(std::ostream& out, const std::vector<ExperimentResult>& results);

}  // namespace factorbreak
