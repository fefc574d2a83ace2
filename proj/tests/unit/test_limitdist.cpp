#include "doctest.h"

#include "factorbreak/errors.hpp"
#include "factorbreak/limitdist.hpp"
#include "factorbreak/montecarlo.hpp"

#include "support.hpp"

#include <algorithm>
#include <filesystem>

using namespace factorbreak;

namespace {

CvRequest lr_var(int r, Eigen::MatrixXd omega, int reps = 200, std::uint64_t seed = 1) {
    CvRequest q;
    q.family = CvFamily::LRVar;
    q.r = r;
    q.omega = std::move(omega);
    q.reps = reps;
    q.seed = seed;
    q.grid = 500;
    q.workers = 1;
    return q;
}

std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("factorbreak_unit_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_SUITE("limitdist") {
    TEST_CASE("zero omega gives zero critical values") {
        const CvTable t = simulate_cv(lr_var(2, Eigen::MatrixXd::Zero(4, 4)));
        for (const auto& [level, v] : t.quantiles) CHECK(v == 0.0);
    }

    TEST_CASE("quantiles are monotone and finite for every family") {
        for (CvFamily f : {CvFamily::LRVar, CvFamily::LRMeanVar, CvFamily::LRMulti, CvFamily::LRmMulti,
                           CvFamily::WWald, CvFamily::AndrewsIID}) {
            CvRequest q;
            q.family = f;
            q.r = 2;
            q.m = 2;
            q.grid = 200;
            q.reps = 200;
            q.seed = 3;
            q.omega = gaussian_iid_omega(f, 2);
            INFO(to_string(f));
            const CvTable t = simulate_cv(q);
            REQUIRE(t.quantiles.size() == 3);
            CHECK(std::isfinite(t.at(0.01)));
            CHECK(t.at(0.10) >= 0.0);
            CHECK(t.at(0.10) <= t.at(0.05));
            CHECK(t.at(0.05) <= t.at(0.01));
            CHECK(to_string(parse_family(to_string(f))) == to_string(f));
        }
    }

    TEST_CASE("scale equivariance under common random numbers") {
        std::mt19937_64 rng(4);
        const Eigen::MatrixXd a = fbtest::gaussian(rng, 4, 4);
        const Eigen::MatrixXd omega = a * a.transpose();
        const std::vector<double> base = simulate_draws(lr_var(2, omega));
        const std::vector<double> scaled = simulate_draws(lr_var(2, 3.5 * omega));
        REQUIRE(base.size() == scaled.size());
        for (std::size_t i = 0; i < base.size(); ++i) CHECK(scaled[i] == doctest::Approx(3.5 * base[i]).epsilon(1e-10));
    }

    TEST_CASE("one-break multi family reproduces the single-break draws") {
        std::mt19937_64 rng(5);
        const Eigen::MatrixXd a = fbtest::gaussian(rng, 4, 4);
        CvRequest single = lr_var(2, a * a.transpose());
        CvRequest multi = single;
        multi.family = CvFamily::LRMulti;
        multi.m = 1;
        const std::vector<double> x = simulate_draws(single);
        const std::vector<double> y = simulate_draws(multi);
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == doctest::Approx(x[i]).epsilon(1e-10));
    }

    TEST_CASE("mean-variance family restricted to the variance block matches the variance family") {
        // With Omega = blockdiag(0, 2 Omega_v), LRMeanVar without the 1/2 equals LRVar on Omega_v.
        const int r = 1;
        CvRequest var = lr_var(r, Eigen::MatrixXd::Constant(1, 1, 2.0));
        CvRequest mv = var;
        mv.family = CvFamily::LRMeanVar;
        mv.omega = Eigen::MatrixXd::Zero(2, 2);
        mv.omega(1, 1) = 1.0;
        Engine e2 = substream(9, 0);
        for (int i = 0; i < 20; ++i) {
            const Eigen::MatrixXd p2 = brownian_path(e2, 500, 2);
            Eigen::MatrixXd p1 = p2.rightCols(1);
            const double v = evaluate_functional(var, omega_root(var), p1);
            const double w = evaluate_functional(mv, omega_root(mv), p2);
            CHECK(w == doctest::Approx(v).epsilon(1e-10));
        }
    }

    TEST_CASE("grid refinement changes quantiles by under two percent") {
        for (int r : {1, 3}) {
            const Eigen::MatrixXd omega = gaussian_iid_omega(CvFamily::LRVar, r);
            CvRequest fine = lr_var(r, omega);
            fine.grid = 4000;
            CvRequest coarse = fine;
            coarse.grid = 2000;
            const Eigen::MatrixXd root = omega_root(fine);
            std::vector<double> a, b;
            for (std::uint64_t i = 0; i < 2000; ++i) {
                Engine e = substream(77, i);
                const Eigen::MatrixXd path = brownian_path(e, 4000, r * r);
                a.push_back(evaluate_functional(fine, root, path));
                b.push_back(evaluate_functional(coarse, root, coarsen_path(path, 2)));
            }
            for (double level : {0.10, 0.05, 0.01}) {
                const double qa = nearest_rank_quantile(a, level);
                const double qb = nearest_rank_quantile(b, level);
                INFO("r=" << r << " level=" << level);
                CHECK(std::abs(qa - qb) < 0.02 * qa);
            }
        }
    }

    TEST_CASE("coarsening keeps every second point") {
        Engine e = substream(1, 2);
        const Eigen::MatrixXd p = brownian_path(e, 200, 3);
        CHECK(p.rows() == 201);
        CHECK(p.row(0).isZero(0.0));
        const Eigen::MatrixXd c = coarsen_path(p, 4);
        CHECK(c.rows() == 51);
        CHECK((c.row(50) - p.row(200)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((c.row(7) - p.row(28)).cwiseAbs().maxCoeff() < 1e-12);
    }

    TEST_CASE("nearest-rank quantile") {
        std::vector<double> d;
        for (int i = 1; i <= 100; ++i) d.push_back(i);
        CHECK(nearest_rank_quantile(d, 0.05) == 95.0);
        CHECK(nearest_rank_quantile(d, 0.10) == 90.0);
        CHECK(nearest_rank_quantile(d, 0.01) == 99.0);
    }

    TEST_CASE("results do not depend on worker count") {
        CvRequest q = lr_var(2, gaussian_iid_omega(CvFamily::LRVar, 2));
        q.keep_draws = true;
        const CvTable one = simulate_cv(q);
        q.workers = 4;
        const CvTable four = simulate_cv(q);
        CHECK(one.draws == four.draws);
        CHECK(one.quantiles == four.quantiles);
        q.seed = 2;
        CHECK(simulate_cv(q).draws != one.draws);
    }

    TEST_CASE("single-parameter law matches a fine-grid simulation") {
        const auto& ref = fbtest::oracle()["cv_fine_grid"];
        CvRequest q = lr_var(1, Eigen::MatrixXd::Constant(1, 1, 2.0), 5000, 20240611);
        q.grid = 2000;
        q.workers = 0;
        const CvTable t = simulate_cv(q);
        for (const char* key : {"0.10", "0.05", "0.01"}) {
            const double expect = ref["quantiles"][key].get<double>();
            INFO(key << " simulated " << t.at(std::stod(key)) << " reference " << expect);
        }
        CHECK(std::abs(t.at(0.05) - ref["quantiles"]["0.05"].get<double>()) < 0.3);
    }

    TEST_CASE("two seeds agree within order-statistic noise") {
        CvRequest q = lr_var(1, Eigen::MatrixXd::Constant(1, 1, 2.0), 2000, 1);
        q.keep_draws = true;
        const CvTable a = simulate_cv(q);
        q.seed = 99;
        const CvTable b = simulate_cv(q);
        for (double level : {0.10, 0.05}) {
            // Standard error of the order statistic through the density estimated from the pooled draws.
            std::vector<double> pooled = a.draws;
            pooled.insert(pooled.end(), b.draws.begin(), b.draws.end());
            const double n = static_cast<double>(q.reps);
            const double se_p = std::sqrt(level * (1.0 - level) / n);
            const double width = nearest_rank_quantile(pooled, level - 2 * se_p) - nearest_rank_quantile(pooled, level + 2 * se_p);
            const double se_q = width / 4.0;
            INFO("level " << level << " a " << a.at(level) << " b " << b.at(level) << " se " << se_q);
            CHECK(std::abs(a.at(level) - b.at(level)) < 3.0 * std::sqrt(2.0) * se_q);
        }
    }

    TEST_CASE("invalid requests") {
        CHECK_THROWS_AS(validate(lr_var(2, Eigen::MatrixXd::Identity(3, 3))), DimensionError);
        Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(4, 4);
        bad(0, 0) = -1.0;
        CHECK_THROWS_AS(validate(lr_var(2, bad)), NumericalError);
        CvRequest q = lr_var(1, Eigen::MatrixXd::Identity(1, 1));
        q.grid = 50;
        CHECK_THROWS_AS(validate(q), DimensionError);
        q.grid = 500;
        q.reps = 10;
        CHECK_THROWS_AS(validate(q), DimensionError);
        q.reps = 200;
        q.epsilon = 0.5;
        CHECK_THROWS_AS(validate(q), DimensionError);
        q.epsilon = 0.3;
        q.family = CvFamily::LRMulti;
        q.m = 3;
        CHECK_THROWS_AS(validate(q), DimensionError);
    }

    TEST_CASE("marginally indefinite omega is clipped with a warning") {
        Eigen::MatrixXd om = Eigen::MatrixXd::Identity(4, 4);
        om(3, 3) = -1e-5;
        std::vector<std::string> warnings;
        const Eigen::MatrixXd root = omega_root(lr_var(2, om), &warnings);
        CHECK(root(3, 3) == 0.0);
        CHECK(warnings.size() == 1);
    }

    TEST_CASE("cache serves repeated requests") {
        const auto dir = scratch_dir("cache");
        const CvCache cache(dir / "cv.jsonl");
        const CvRequest q = lr_var(1, Eigen::MatrixXd::Constant(1, 1, 2.0));
        const CvTable first = simulate_cv(q, &cache);
        CHECK_FALSE(first.from_cache);
        const CvTable second = simulate_cv(q, &cache);
        CHECK(second.from_cache);
        CHECK(second.quantiles == first.quantiles);
        CvRequest other = q;
        other.omega(0, 0) = 2.5;
        CHECK_FALSE(cache.lookup(other).has_value());
        CHECK(cache_key(q) != cache_key(other));
        std::filesystem::remove_all(dir);
    }

    TEST_CASE("report tables carry the matching plug-in dimension") {
        std::mt19937_64 rng(8);
        DgpConfig cfg;
        cfg.n = 60;
        cfg.t = 80;
        cfg.seed = 3;
        const Panel p = demean(gen_panel(cfg).panel);
        const Eigen::MatrixXd g = estimate_factors(p, 3).ghat;
        SimSettings s;
        s.grid = 200;
        s.reps = 100;
        s.workers = 1;
        const CvTable lr = cv_for_report(g, TestKind::LR, 0.15, 1, s);
        const CvTable lrm = cv_for_report(g, TestKind::LRm, 0.15, 1, s);
        CHECK(lr.request.omega.rows() == 9);
        CHECK(lrm.request.omega.rows() == 12);
        CHECK(lr.hac_bandwidth > 0.0);
        const CvTable again = cv_for_report(g, TestKind::LR, 0.15, 1, s);
        CHECK(again.quantiles == lr.quantiles);
        const CvTable w = cv_for_report(g, TestKind::WWald, 0.15, 1, s);
        CHECK(process_dimension(w.request) == 9);
        const CvTable a = cv_for_report(g, TestKind::WaldHAC, 0.15, 1, s);
        CHECK(process_dimension(a.request) == 6);
        const CvTable m2 = cv_for_report(g, TestKind::LR, 0.15, 1, s, 2);
        CHECK(m2.request.family == CvFamily::LRMulti);
        CHECK_THROWS((void)cv_for_report(g, TestKind::WaldHAC, 0.15, 1, s, 2));
    }
}
