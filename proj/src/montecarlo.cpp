#include "factorbreak/montecarlo.hpp"

#include "factorbreak/errors.hpp"
#include "factorbreak/parallel.hpp"
#include "factorbreak/report.hpp"
#include "factorbreak/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <ostream>
#include <random>

namespace factorbreak {

namespace {

constexpr std::uint32_t kPanelStream = 0x5047;
constexpr std::uint32_t kCvSeedStream = 0x4356;

Eigen::MatrixXd normal_matrix(Engine& engine, Index rows, Index cols, double sd) {
    std::normal_distribution<double> normal(0.0, sd);
    Eigen::MatrixXd m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = normal(engine);
    return m;
}

Eigen::MatrixXd ar1_factors(Engine& engine, const DgpConfig& cfg) {
    Eigen::MatrixXd f(cfg.t, cfg.r0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::student_t_distribution<double> student(10.0);
    const double innovation_sd = std::sqrt(1.0 - cfg.rho * cfg.rho);
    const double t_scale = std::sqrt((1.0 - cfg.rho * cfg.rho) / 1.25);
    for (Index k = 0; k < cfg.r0; ++k) f(0, k) = normal(engine);
    for (Index t = 1; t < cfg.t; ++t) {
        for (Index k = 0; k < cfg.r0; ++k) {
            const double u =
                cfg.factor_dist == FactorDist::Gaussian ? innovation_sd * normal(engine) : t_scale * student(engine);
            f(t, k) = cfg.rho * f(t - 1, k) + u;
        }
    }
    return f;
}

}  // namespace

FactorDist parse_factor_dist(std::string_view name) {
    if (name == "gaussian" || name == "normal") return FactorDist::Gaussian;
    if (name == "t10" || name == "student-t10") return FactorDist::StudentT10;
    throw ParseError("unknown factor distribution: " + std::string(name));
}

std::string_view to_string(FactorDist d) { return d == FactorDist::Gaussian ? "gaussian" : "t10"; }

BreakType parse_break_type(std::string_view name) {
    if (name == "none") return BreakType::None;
    if (name == "loading-shift") return BreakType::LoadingShift;
    if (name == "rotational") return BreakType::Rotational;
    if (name == "diminishing") return BreakType::Diminishing;
    if (name == "factor-mean") return BreakType::FactorMeanChange;
    throw ParseError("unknown break type: " + std::string(name));
}

std::string_view to_string(BreakType b) {
    switch (b) {
        case BreakType::None: return "none";
        case BreakType::LoadingShift: return "loading-shift";
        case BreakType::Rotational: return "rotational";
        case BreakType::Diminishing: return "diminishing";
        case BreakType::FactorMeanChange: return "factor-mean";
    }
    return "?";
}

std::vector<Index> DgpConfig::break_dates() const { return breaks.empty() ? std::vector<Index>{t / 2} : breaks; }

Eigen::MatrixXd DgpConfig::c_matrix() const {
    if (c.size() > 0) return c;
    Eigen::MatrixXd out = Eigen::MatrixXd::Identity(r0, r0);
    out(r0 - 1, r0 - 1) = 0.0;
    return out;
}

void DgpConfig::validate() const {
    if (n < 1 || t < 3) throw DimensionError("DGP needs N >= 1 and T >= 3");
    if (r0 < 1) throw DimensionError("DGP needs r0 >= 1");
    if (!(rho >= 0.0 && rho < 1.0)) throw DimensionError("rho must lie in [0, 1)");
    if (!(b >= 0.0)) throw DimensionError("loading-shift variance b must be nonnegative");
    if (!(a > 0.0)) throw DimensionError("rotational scale a must be positive");
    if (!std::isfinite(d)) throw DimensionError("mean shift d must be finite");
    if (c.size() > 0 && (c.rows() != r0 || c.cols() != r0)) throw DimensionError("C must be r0 x r0");
    if (!std::isfinite(noise_variance)) throw DimensionError("noise variance must be finite");
    Index prev = 1;
    for (Index k : break_dates()) {
        if (k <= prev || k >= t) throw DimensionError("break dates must be increasing within (1, T)");
        prev = k;
    }
}

GeneratedPanel gen_panel(const DgpConfig& cfg, std::uint64_t replication) {
    cfg.validate();
    Engine engine = substream(cfg.seed, replication, kPanelStream);
    GeneratedPanel out;
    DgpTruth& truth = out.truth;
    truth.breaks = cfg.break_dates();
    truth.factors = ar1_factors(engine, cfg);
    truth.loadings.push_back(normal_matrix(engine, cfg.n, cfg.r0, 1.0));
    for (std::size_t j = 0; j < truth.breaks.size(); ++j) {
        const Eigen::MatrixXd& prev = truth.loadings.back();
        Eigen::MatrixXd next;
        switch (cfg.break_type) {
            case BreakType::LoadingShift: next = prev + normal_matrix(engine, cfg.n, cfg.r0, std::sqrt(cfg.b)); break;
            case BreakType::Rotational: next = cfg.a * prev; break;
            case BreakType::Diminishing: next = prev * cfg.c_matrix(); break;
            default: next = prev; break;
        }
        truth.loadings.push_back(std::move(next));
    }
    if (cfg.break_type == BreakType::FactorMeanChange) {
        const Index k0 = truth.breaks.front();
        truth.factors.topRows(k0).array() -= cfg.d;
        truth.factors.bottomRows(cfg.t - k0).array() += cfg.d;
    }
    const Eigen::MatrixXd noise = normal_matrix(engine, cfg.t, cfg.n, std::sqrt(cfg.error_variance()));

    Panel& p = out.panel;
    p.values.resize(cfg.t, cfg.n);
    std::size_t regime = 0;
    for (Index t = 0; t < cfg.t; ++t) {
        // period t+1 belongs to the next regime once it passes a break date
        while (regime < truth.breaks.size() && t + 1 > truth.breaks[regime]) ++regime;
        p.values.row(t) = truth.factors.row(t) * truth.loadings[regime].transpose() + noise.row(t);
    }
    return out;
}

CvPolicy parse_cv_policy(std::string_view name) {
    if (name == "plug-in" || name == "plugin") return CvPolicy::PlugIn;
    if (name == "shared") return CvPolicy::Shared;
    throw ParseError("unknown cv policy: " + std::string(name));
}

std::string_view to_string(CvPolicy p) { return p == CvPolicy::PlugIn ? "plug-in" : "shared"; }

Eigen::MatrixXd gaussian_iid_omega(CvFamily family, int r) {
    const Index rr = static_cast<Index>(r) * r;
    Eigen::MatrixXd var_block = Eigen::MatrixXd::Identity(rr, rr);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < r; ++j) var_block(j * r + i, i * r + j) += 1.0;
    switch (family) {
        case CvFamily::LRVar:
        case CvFamily::LRMulti: return var_block;
        case CvFamily::LRMeanVar:
        case CvFamily::LRmMulti: {
            Eigen::MatrixXd out = Eigen::MatrixXd::Zero(r + rr, r + rr);
            out.topLeftCorner(r, r).setIdentity();
            out.bottomRightCorner(rr, rr) = 0.5 * var_block;
            return out;
        }
        default: {
            CvRequest q;
            q.family = family;
            q.r = r;
            const Index d = process_dimension(q);
            return Eigen::MatrixXd::Identity(d, d);
        }
    }
}

const TestTally& ExperimentResult::tally(TestKind test) const {
    for (const auto& t : tallies)
        if (t.test == test) return t;
    throw DimensionError("test not part of the experiment: " + std::string(to_string(test)));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    if (cfg.reps < 1) throw DimensionError("reps must be at least 1");
    if (cfg.tests.empty()) throw DimensionError("no tests requested");
    cfg.dgp.validate();

    ExperimentResult result;
    result.config = cfg;
    result.records.resize(static_cast<std::size_t>(cfg.reps));

    const unsigned outer = cfg.workers == 0 ? default_workers() : cfg.workers;
    SimSettings sim = cfg.sim;
    if (outer > 1) sim.workers = 1;

    // Tables that do not depend on the replication: nuisance-free families,
    // or everything under the shared policy. Keyed by (test, r).
    std::map<std::pair<int, int>, CvTable> shared;
    std::mutex shared_mutex;
    auto shared_table = [&](const Eigen::MatrixXd& g, TestKind test) {
        const int r = static_cast<int>(g.cols());
        const std::pair<int, int> key{static_cast<int>(test), r};
        {
            std::lock_guard lock(shared_mutex);
            if (auto it = shared.find(key); it != shared.end()) return it->second;
        }
        CvRequest q = request_for_test(g, test, cfg.epsilon, cfg.cv_seed, sim);
        if (q.omega.size() > 0) q.omega = gaussian_iid_omega(q.family, r);
        CvTable table = simulate_cv(q);
        std::lock_guard lock(shared_mutex);
        return shared.emplace(key, std::move(table)).first->second;
    };

    const std::size_t n_tests = cfg.tests.size();
    parallel_for(static_cast<std::size_t>(cfg.reps), outer, [&](std::size_t i) {
        ReplicationRecord& rec = result.records[i];
        const auto start = std::chrono::steady_clock::now();
        try {
            const GeneratedPanel gen = gen_panel(cfg.dgp, i);
            const Panel x = demean(gen.panel);
            const Index cap = std::min(x.series(), x.periods()) - 1;
            rec.r = cfg.fixed_r ? *cfg.fixed_r
                                : select_num_factors(x, static_cast<int>(std::min<Index>(cfg.r_max, cap)), cfg.criterion);
            const FactorEstimate fe = estimate_factors(x, rec.r);
            Engine seeds = substream(cfg.cv_seed, i, kCvSeedStream);
            for (std::size_t j = 0; j < n_tests; ++j) {
                const TestKind test = cfg.tests[j];
                const std::uint64_t cv_seed = seeds();
                TestOptions opts;
                opts.epsilon = cfg.epsilon;
                opts.seed = cv_seed;
                opts.sim = sim;
                opts.simulate_critical_values = false;
                TestReport rep = run_test(fe.ghat, test, opts);
                const bool nuisance_free = test != TestKind::LR && test != TestKind::LRm && test != TestKind::LRmND;
                const CvTable table = (cfg.cv_policy == CvPolicy::Shared || nuisance_free)
                                          ? shared_table(fe.ghat, test)
                                          : cv_for_report(fe.ghat, test, cfg.epsilon, cv_seed, sim);
                apply_critical_values(rep, table);
                rec.statistic.push_back(rep.statistic);
                rec.break_date.push_back(rep.break_dates.front());
                std::vector<bool> decisions;
                for (const auto& [level, rejected] : rep.reject) decisions.push_back(rejected);
                rec.reject.push_back(std::move(decisions));
                if (cfg.keep_tables) rec.tables.push_back(table);
            }
            rec.ok = true;
        } catch (const Error& e) {
            rec.ok = false;
            rec.error = e.what();
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    });

    for (TestKind test : cfg.tests) {
        TestTally t;
        t.test = test;
        t.levels = cfg.sim.levels;
        t.rejections.assign(t.levels.size(), 0);
        result.tallies.push_back(std::move(t));
    }
    double total_seconds = 0.0;
    const Index first_break = cfg.dgp.break_dates().front();
    for (std::size_t i = 0; i < result.records.size(); ++i) {
        const ReplicationRecord& rec = result.records[i];
        total_seconds += rec.seconds;
        if (!rec.ok) {
            ++result.failed;
            result.failures.push_back("replication " + std::to_string(i) + ": " + rec.error);
            continue;
        }
        ++result.completed;
        if (result.selected_r.size() <= static_cast<std::size_t>(rec.r)) result.selected_r.resize(rec.r + 1, 0);
        ++result.selected_r[static_cast<std::size_t>(rec.r)];
        for (std::size_t j = 0; j < n_tests; ++j) {
            TestTally& t = result.tallies[j];
            for (std::size_t l = 0; l < t.levels.size(); ++l) t.rejections[l] += rec.reject[j][l] ? 1 : 0;
            if (rec.break_date[j] == first_break) ++t.date_exact;
            t.mean_statistic += rec.statistic[j];
        }
    }
    for (TestTally& t : result.tallies) {
        const double n = std::max(1, result.completed);
        for (int count : t.rejections) t.frequency.push_back(count / n);
        t.mean_statistic /= n;
    }
    result.mean_seconds = total_seconds / static_cast<double>(cfg.reps);
    return result;
}

void write_table_csv(std::ostream& out, const std::vector<ExperimentResult>& results) {
    if (results.empty()) return;
    const auto& head = results.front();
    out << "N,T,break_type,magnitude,reps";
    for (const auto& t : head.tallies)
        for (double level : t.levels) out << ',' << to_string(t.test) << '@' << level;
    out << '\n';
    for (const auto& res : results) {
        const DgpConfig& d = res.config.dgp;
        double magnitude = 0.0;
        switch (d.break_type) {
            case BreakType::LoadingShift: magnitude = d.b; break;
            case BreakType::Rotational: magnitude = d.a; break;
            case BreakType::FactorMeanChange: magnitude = d.d; break;
            default: break;
        }
        out << d.n << ',' << d.t << ',' << to_string(d.break_type) << ',' << magnitude << ',' << res.completed;
        for (const auto& t : res.tallies)
            for (double f : t.frequency) out << ',' << f;
        out << '\n';
    }
}

}  // namespace factorbreak
