#include "factorbreak/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>

namespace factorbreak {

Json number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

Json matrix_json(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string level_key(double level) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", level);
    if (std::abs(std::strtod(buf, nullptr) - level) > 1e-12) std::snprintf(buf, sizeof buf, "%.10g", level);
    return buf;
}

Json to_json(const LrCurve& curve) {
    Json ks = Json::array();
    Json values = Json::array();
    for (Index k : curve.ks) ks.push_back(k);
    for (double v : curve.values) values.push_back(number(v));
    Json j;
    j["k"] = std::move(ks);
    j["value"] = std::move(values);
    j["sup"] = number(curve.sup);
    j["argmax_k"] = curve.argmax_k;
    return j;
}

Json to_json(const CvTable& t) {
    const CvRequest& q = t.request;
    Json j;
    j["family"] = std::string(to_string(q.family));
    j["r"] = q.r;
    if (q.family == CvFamily::LRMulti || q.family == CvFamily::LRmMulti) j["m"] = q.m;
    j["epsilon"] = q.epsilon;
    j["dimension"] = process_dimension(q);
    j["grid"] = q.grid;
    j["reps"] = q.reps;
    j["seed"] = q.seed;
    if (q.omega.size() > 0 && q.family != CvFamily::WWald && q.family != CvFamily::AndrewsIID)
        j["omega"] = matrix_json(q.omega);
    if (t.hac_bandwidth >= 0.0) j["hac_bandwidth"] = t.hac_bandwidth;
    Json quantiles = Json::object();
    for (const auto& [level, value] : t.quantiles) quantiles[level_key(level)] = number(value);
    j["quantiles"] = std::move(quantiles);
    j["from_cache"] = t.from_cache;
    j["warnings"] = t.warnings;
    if (!t.draws.empty()) {
        Json draws = Json::array();
        for (double d : t.draws) draws.push_back(number(d));
        j["draws"] = std::move(draws);
    }
    return j;
}

Json to_json(const TestReport& rep) {
    Json j;
    j["test"] = std::string(to_string(rep.test));
    j["statistic"] = number(rep.statistic);
    Json cv = Json::object();
    Json reject = Json::object();
    for (const auto& [level, value] : rep.critical_values) cv[level_key(level)] = number(value);
    for (const auto& [level, value] : rep.reject) reject[level_key(level)] = value;
    j["critical_values"] = std::move(cv);
    j["reject"] = std::move(reject);
    j["break_dates"] = rep.break_dates;
    j["epsilon"] = rep.epsilon;
    j["r"] = rep.r;
    j["breaks"] = rep.breaks;
    j["singular"] = std::string(to_string(rep.singular));
    j["curve"] = to_json(rep.curve);
    if (rep.cv) j["cv_table"] = to_json(*rep.cv);
    j["notes"] = rep.notes;
    return j;
}

Json to_json(const FactorEstimate& fe) {
    Json j;
    j["r"] = fe.r;
    Json eig = Json::array();
    for (Index i = 0; i < fe.eigvals.size(); ++i) eig.push_back(fe.eigvals(i));
    j["eigvals"] = std::move(eig);
    j["warnings"] = fe.warnings;
    return j;
}

Json to_json(const DgpConfig& d) {
    Json j;
    j["N"] = d.n;
    j["T"] = d.t;
    j["r0"] = d.r0;
    j["rho"] = d.rho;
    j["factor_dist"] = std::string(to_string(d.factor_dist));
    j["break_type"] = std::string(to_string(d.break_type));
    switch (d.break_type) {
        case BreakType::LoadingShift: j["b"] = d.b; break;
        case BreakType::Rotational: j["a"] = d.a; break;
        case BreakType::Diminishing: j["C"] = matrix_json(d.c_matrix()); break;
        case BreakType::FactorMeanChange: j["d"] = d.d; break;
        case BreakType::None: break;
    }
    j["breaks"] = d.break_dates();
    j["noise_variance"] = d.error_variance();
    j["seed"] = d.seed;
    return j;
}

Json to_json(const ExperimentResult& res) {
    const ExperimentConfig& c = res.config;
    Json j;
    j["dgp"] = to_json(c.dgp);
    Json tests = Json::array();
    for (TestKind t : c.tests) tests.push_back(std::string(to_string(t)));
    j["tests"] = std::move(tests);
    j["epsilon"] = c.epsilon;
    j["cv_policy"] = std::string(to_string(c.cv_policy));
    j["cv_grid"] = c.sim.grid;
    j["cv_reps"] = c.sim.reps;
    j["cv_seed"] = c.cv_seed;
    if (c.fixed_r) {
        j["r"] = *c.fixed_r;
    } else {
        j["criterion"] = std::string(to_string(c.criterion));
        j["r_max"] = c.r_max;
    }
    j["reps"] = c.reps;
    j["completed"] = res.completed;
    j["failed"] = res.failed;
    j["failures"] = res.failures;
    j["selected_r"] = res.selected_r;
    j["mean_seconds_per_rep"] = res.mean_seconds;
    Json rejection = Json::object();
    for (const auto& t : res.tallies) {
        Json row;
        Json freq = Json::object();
        for (std::size_t l = 0; l < t.levels.size(); ++l) freq[level_key(t.levels[l])] = t.frequency[l];
        row["rejection_frequency"] = std::move(freq);
        row["date_exact_fraction"] = res.completed > 0 ? static_cast<double>(t.date_exact) / res.completed : 0.0;
        row["mean_statistic"] = number(t.mean_statistic);
        rejection[std::string(to_string(t.test))] = std::move(row);
    }
    j["results"] = std::move(rejection);
    return j;
}

void write_curve_csv(std::ostream& out, const TestReport& rep) {
    out << "k," << to_string(rep.test);
    for (const auto& [level, value] : rep.critical_values) out << ",cv_" << level_key(level);
    out << '\n';
    out.precision(17);
    for (std::size_t i = 0; i < rep.curve.ks.size(); ++i) {
        out << rep.curve.ks[i] << ',' << rep.curve.values[i];
        for (const auto& [level, value] : rep.critical_values) out << ',' << value;
        out << '\n';
    }
}

}  // namespace factorbreak
