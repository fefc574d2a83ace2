#include "cli.hpp"

#include "factorbreak/errors.hpp"
#include "factorbreak/factors.hpp"
#include "factorbreak/limitdist.hpp"
#include "factorbreak/montecarlo.hpp"
#include "factorbreak/panel.hpp"
#include "factorbreak/report.hpp"
#include "factorbreak/serialize.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace factorbreak::cli {

namespace {

constexpr const char* kVersion = "0.1.0";

struct DataOptions {
    std::string path;
    bool header = false;
    std::string delimiter = ",";
    bool transpose = false;
};

struct FactorOptions {
    std::optional<int> r;
    std::string select = "icp1";
    int rmax = 10;
};

struct TestArgs {
    DataOptions data;
    FactorOptions factors;
    double epsilon = 0.15;
    std::vector<std::string> tests{"lr", "lrm"};
    int breaks = 1;
    int cv_grid = 2000;
    int cv_reps = 1000;
    std::uint64_t seed = 0;
    std::string out;
    std::string curve_out;
    bool fail_on_reject = false;
    double fail_level = 0.05;
    bool no_cache = false;
    unsigned workers = 0;
};

struct CvArgs {
    std::string family = "LR_var";
    int r = 1;
    int m = 1;
    int p = 0;
    double epsilon = 0.15;
    std::vector<double> omega;
    std::string omega_file;
    int cv_grid = 2000;
    int cv_reps = 1000;
    std::uint64_t seed = 0;
    std::vector<double> levels{0.10, 0.05, 0.01};
    bool keep_draws = false;
    bool no_cache = false;
    unsigned workers = 0;
    std::string out;
};

struct ExperimentArgs {
    Index n = 100;
    Index t = 100;
    int r0 = 3;
    double rho = 0.0;
    std::string dist = "gaussian";
    std::string break_type = "none";
    double b = 0.0;
    double a = 1.0;
    double d = 0.2;
    std::vector<Index> break_dates;
    double noise_var = -1.0;
    int reps = 100;
    std::vector<std::string> tests{"lr", "lrm"};
    double epsilon = 0.15;
    std::string cv_policy = "plug-in";
    int cv_grid = 2000;
    int cv_reps = 1000;
    std::uint64_t seed = 0;
    FactorOptions factors;
    unsigned workers = 0;
    std::string out;
    std::string table_out;
};

struct FactorsArgs {
    DataOptions data;
    FactorOptions factors;
    std::string out;
    std::string ghat_out;
    std::string lambda_out;
};

class OutputFile {
public:
    OutputFile(const std::string& path, std::ostream& fallback) {
        if (path.empty() || path == "-") {
            stream_ = &fallback;
        } else {
            file_.open(path);
            if (!file_) throw Error("cannot open output file: " + path);
            stream_ = &file_;
        }
    }
    std::ostream& stream() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream* stream_ = nullptr;
};

void add_data_options(CLI::App* cmd, DataOptions& d) {
    cmd->add_option("--data", d.path, "Panel CSV (rows are periods, columns are series)")->required();
    cmd->add_flag("--header", d.header, "First row holds series labels");
    cmd->add_option("--delimiter", d.delimiter, "Field delimiter")->capture_default_str();
    cmd->add_flag("--transpose", d.transpose, "Rows are series, columns are periods");
}

void add_factor_options(CLI::App* cmd, FactorOptions& f) {
    auto* r = cmd->add_option("--r", f.r, "Number of factors (overrides --select)");
    auto* sel = cmd->add_option("--select", f.select, "Factor-count criterion: icp1, icp2, er, gr")
                    ->check(CLI::IsMember({"icp1", "icp2", "er", "gr"}))
                    ->capture_default_str();
    r->excludes(sel);
    cmd->add_option("--rmax", f.rmax, "Largest factor count considered by --select")->capture_default_str();
}

std::uint64_t file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::uint64_t h = 1469598103934665603ULL;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    return h;
}

std::string hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Panel read_panel(const DataOptions& d) {
    if (d.delimiter.size() != 1) throw ParseError("delimiter must be a single character");
    CsvOptions opts;
    opts.has_header = d.header;
    opts.delimiter = d.delimiter[0];
    opts.transpose = d.transpose;
    return load_panel(std::filesystem::path(d.path), opts);
}

Json data_json(const DataOptions& d, const Panel& p) {
    Json j;
    j["path"] = d.path;
    j["fnv1a64"] = hex(file_hash(d.path));
    j["header"] = d.header;
    j["delimiter"] = d.delimiter;
    j["transpose"] = d.transpose;
    j["T"] = p.periods();
    j["N"] = p.series();
    return j;
}

struct FactorChoice {
    FactorEstimate estimate;
    Json info;
};

FactorChoice choose_factors(const Panel& x, const FactorOptions& f) {
    FactorChoice out;
    int r = 0;
    if (f.r) {
        r = *f.r;
        out.info["method"] = "fixed";
    } else {
        const FactorCriterion crit = parse_criterion(f.select);
        const Index cap = std::min(x.series(), x.periods()) - 1;
        const int rmax = static_cast<int>(std::min<Index>(f.rmax, cap));
        r = select_num_factors(x, rmax, crit);
        out.info["method"] = std::string(to_string(crit));
        out.info["rmax"] = rmax;
        Json values = Json::array();
        for (double v : criterion_values(gram_spectrum(x.values), x.series(), x.periods(), rmax, crit))
            values.push_back(number(v));
        out.info["criterion_values"] = std::move(values);
    }
    out.estimate = estimate_factors(x, r);
    const Json fe = to_json(out.estimate);
    for (auto it = fe.begin(); it != fe.end(); ++it) out.info[it.key()] = it.value();
    return out;
}

Json header(const char* command, int argc, const char* const* argv) {
    Json j;
    j["tool"] = "factorbreak";
    j["version"] = kVersion;
    j["command"] = command;
    std::vector<std::string> args(argv, argv + argc);
    j["argv"] = args;
    return j;
}

void write_curves(const std::string& path, const std::vector<TestReport>& reports) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open curve output file: " + path);
    std::map<Index, std::vector<std::optional<double>>> rows;
    for (std::size_t j = 0; j < reports.size(); ++j) {
        const LrCurve& c = reports[j].curve;
        for (std::size_t i = 0; i < c.ks.size(); ++i) {
            auto& row = rows[c.ks[i]];
            row.resize(reports.size());
            row[j] = c.values[i];
        }
    }
    out << 'k';
    for (const auto& rep : reports) {
        out << ',' << to_string(rep.test);
        for (const auto& [level, value] : rep.critical_values) out << ',' << to_string(rep.test) << "_cv" << level_key(level);
    }
    out << '\n';
    out.precision(17);
    for (auto& [k, values] : rows) {
        values.resize(reports.size());
        out << k;
        for (std::size_t j = 0; j < reports.size(); ++j) {
            out << ',';
            if (values[j]) out << *values[j];
            for (const auto& [level, value] : reports[j].critical_values) out << ',' << value;
        }
        out << '\n';
    }
}

int cmd_test(const TestArgs& a, int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    const Panel raw = read_panel(a.data);
    const Panel x = demean(raw);
    const FactorChoice fc = choose_factors(x, a.factors);
    const std::optional<CvCache> cache =
        a.no_cache ? std::nullopt : std::optional<CvCache>(CvCache(CvCache::default_file()));

    TestOptions opts;
    opts.epsilon = a.epsilon;
    opts.breaks = a.breaks;
    opts.seed = a.seed;
    opts.sim.grid = a.cv_grid;
    opts.sim.reps = a.cv_reps;
    opts.sim.workers = a.workers;
    opts.cache = cache ? &*cache : nullptr;

    std::vector<TestReport> reports;
    std::optional<FactorEstimate> raw_factors;
    for (const std::string& name : a.tests) {
        const TestKind kind = parse_test_kind(name);
        if (kind == TestKind::LRmND) {
            // factors from the panel as given, without removing series means
            if (!raw_factors) raw_factors = estimate_factors(raw, fc.estimate.r);
            reports.push_back(run_test(raw_factors->ghat, kind, opts));
        } else {
            reports.push_back(run_test(fc.estimate.ghat, kind, opts));
        }
    }

    Json j = header("test", argc, argv);
    j["data"] = data_json(a.data, raw);
    Json cfg;
    cfg["epsilon"] = a.epsilon;
    cfg["tests"] = a.tests;
    cfg["breaks"] = a.breaks;
    cfg["cv_grid"] = a.cv_grid;
    cfg["cv_reps"] = a.cv_reps;
    cfg["seed"] = a.seed;
    cfg["cache"] = cache ? cache->file().string() : std::string();
    j["config"] = std::move(cfg);
    j["factors"] = fc.info;
    Json reps = Json::array();
    for (const auto& rep : reports) reps.push_back(to_json(rep));
    j["reports"] = std::move(reps);

    OutputFile sink(a.out, out);
    sink.stream() << j.dump(2) << '\n';
    if (!a.curve_out.empty()) write_curves(a.curve_out, reports);
    for (const auto& rep : reports)
        for (const auto& w : rep.notes) err << to_string(rep.test) << ": " << w << '\n';

    if (a.fail_on_reject) {
        for (const auto& rep : reports)
            for (const auto& [level, rejected] : rep.reject)
                if (rejected && std::abs(level - a.fail_level) < 1e-12) return kRejected;
    }
    return kOk;
}

Eigen::MatrixXd read_matrix(const std::string& path) {
    return load_panel(std::filesystem::path(path)).values;
}

int cmd_simulate_cv(const CvArgs& a, std::ostream& out) {
    CvRequest q;
    q.family = parse_family(a.family);
    q.r = a.r;
    q.m = a.m;
    q.p = a.p;
    q.epsilon = a.epsilon;
    q.grid = a.cv_grid;
    q.reps = a.cv_reps;
    q.seed = a.seed;
    q.levels = a.levels;
    q.keep_draws = a.keep_draws;
    q.workers = a.workers;
    const Index d = process_dimension(q);
    if (!a.omega_file.empty()) {
        q.omega = read_matrix(a.omega_file);
    } else if (!a.omega.empty()) {
        if (static_cast<Index>(a.omega.size()) != d * d) {
            throw DimensionError("--omega needs " + std::to_string(d * d) + " values (row-major), got " +
                                 std::to_string(a.omega.size()));
        }
        q.omega = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            a.omega.data(), d, d);
    } else {
        q.omega = gaussian_iid_omega(q.family, q.r);
    }
    const std::optional<CvCache> cache =
        a.no_cache ? std::nullopt : std::optional<CvCache>(CvCache(CvCache::default_file()));
    const CvTable table = simulate_cv(q, cache ? &*cache : nullptr);
    Json j = to_json(table);
    if (cache) j["cache"] = cache->file().string();
    OutputFile sink(a.out, out);
    sink.stream() << j.dump(2) << '\n';
    return kOk;
}

int cmd_experiment(const ExperimentArgs& a, int argc, const char* const* argv, std::ostream& out) {
    ExperimentConfig cfg;
    cfg.dgp.n = a.n;
    cfg.dgp.t = a.t;
    cfg.dgp.r0 = a.r0;
    cfg.dgp.rho = a.rho;
    cfg.dgp.factor_dist = parse_factor_dist(a.dist);
    cfg.dgp.break_type = parse_break_type(a.break_type);
    cfg.dgp.b = a.b;
    cfg.dgp.a = a.a;
    cfg.dgp.d = a.d;
    cfg.dgp.breaks = a.break_dates;
    cfg.dgp.noise_variance = a.noise_var;
    cfg.dgp.seed = a.seed;
    cfg.reps = a.reps;
    cfg.tests.clear();
    for (const auto& name : a.tests) cfg.tests.push_back(parse_test_kind(name));
    cfg.epsilon = a.epsilon;
    cfg.cv_policy = parse_cv_policy(a.cv_policy);
    cfg.sim.grid = a.cv_grid;
    cfg.sim.reps = a.cv_reps;
    cfg.cv_seed = a.seed;
    cfg.fixed_r = a.factors.r;
    cfg.criterion = parse_criterion(a.factors.select);
    cfg.r_max = a.factors.rmax;
    cfg.workers = a.workers;

    const ExperimentResult res = run_experiment(cfg);
    Json j = header("experiment", argc, argv);
    const Json body = to_json(res);
    for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
    OutputFile sink(a.out, out);
    sink.stream() << j.dump(2) << '\n';
    if (!a.table_out.empty()) {
        std::ofstream table(a.table_out);
        if (!table) throw Error("cannot open table output file: " + a.table_out);
        write_table_csv(table, {res});
    }
    return kOk;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open output file: " + path);
    Panel p;
    p.values = m;
    write_panel(out, p);
}

int cmd_factors(const FactorsArgs& a, int argc, const char* const* argv, std::ostream& out) {
    const Panel raw = read_panel(a.data);
    const Panel x = demean(raw);
    const FactorChoice fc = choose_factors(x, a.factors);
    Json j = header("factors", argc, argv);
    j["data"] = data_json(a.data, raw);
    j["factors"] = fc.info;
    OutputFile sink(a.out, out);
    sink.stream() << j.dump(2) << '\n';
    if (!a.ghat_out.empty()) write_matrix_csv(a.ghat_out, fc.estimate.ghat);
    if (!a.lambda_out.empty()) write_matrix_csv(a.lambda_out, fc.estimate.lambda_hat);
    return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Structural-break tests for factor loadings in large panels", "factorbreak"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    TestArgs test;
    auto* t = app.add_subcommand("test", "Estimate factors and test for a loading break");
    add_data_options(t, test.data);
    add_factor_options(t, test.factors);
    t->add_option("--epsilon", test.epsilon, "Trimming fraction")->capture_default_str();
    t->add_option("--test", test.tests, "lr, lrm, lrm-nd, wald-white, wald-hac, lm-white, lm-hac, wwald")
        ->delimiter(',')
        ->capture_default_str();
    t->add_option("--breaks", test.breaks, "Number of breaks (lr and lrm only when > 1)")->capture_default_str();
    t->add_option("--cv-grid", test.cv_grid, "Brownian grid steps per unit time")->capture_default_str();
    t->add_option("--cv-reps", test.cv_reps, "Critical-value replications")->capture_default_str();
    t->add_option("--seed", test.seed, "Simulation seed")->capture_default_str();
    t->add_option("--out", test.out, "JSON report path (default stdout)");
    t->add_option("--curve-out", test.curve_out, "CSV of k against each statistic and its critical values");
    t->add_flag("--fail-on-reject", test.fail_on_reject, "Exit with status 2 when any test rejects");
    t->add_option("--fail-level", test.fail_level, "Level used by --fail-on-reject")->capture_default_str();
    t->add_flag("--no-cache", test.no_cache, "Do not read or write the critical-value cache");
    t->add_option("--workers", test.workers, "Simulation threads (0 = all cores)");

    CvArgs cv;
    auto* s = app.add_subcommand("simulate-cv", "Simulate critical values of a limiting null law");
    s->add_option("--family", cv.family, "LR_var, LR_meanvar, LR_multi, LR_m_multi, WWald, AndrewsIID")
        ->capture_default_str();
    s->add_option("--r", cv.r, "Number of factors")->capture_default_str();
    s->add_option("--breaks", cv.m, "Number of breaks (multi families)")->capture_default_str();
    s->add_option("--p", cv.p, "AndrewsIID dimension (default r(r+1)/2)");
    s->add_option("--epsilon", cv.epsilon, "Trimming fraction")->capture_default_str();
    auto* om = s->add_option("--omega", cv.omega, "Long-run variance, row-major, comma separated")->delimiter(',');
    s->add_option("--omega-file", cv.omega_file, "Long-run variance as a CSV matrix")->excludes(om);
    s->add_option("--cv-grid", cv.cv_grid, "Brownian grid steps per unit time")->capture_default_str();
    s->add_option("--cv-reps", cv.cv_reps, "Replications")->capture_default_str();
    s->add_option("--seed", cv.seed, "Simulation seed")->capture_default_str();
    s->add_option("--levels", cv.levels, "Tail probabilities")->delimiter(',')->capture_default_str();
    s->add_flag("--keep-draws", cv.keep_draws, "Include the simulated suprema in the output");
    s->add_flag("--no-cache", cv.no_cache, "Do not read or write the critical-value cache");
    s->add_option("--workers", cv.workers, "Simulation threads (0 = all cores)");
    s->add_option("--out", cv.out, "JSON output path (default stdout)");

    ExperimentArgs ex;
    auto* e = app.add_subcommand("experiment", "Monte Carlo size and power");
    e->add_option("--n", ex.n, "Number of series")->capture_default_str();
    e->add_option("--t", ex.t, "Number of periods")->capture_default_str();
    e->add_option("--r0", ex.r0, "True number of factors")->capture_default_str();
    e->add_option("--rho", ex.rho, "AR(1) coefficient of the factors")->capture_default_str();
    e->add_option("--dist", ex.dist, "Factor innovations: gaussian or t10")->capture_default_str();
    e->add_option("--break-type", ex.break_type, "none, loading-shift, rotational, diminishing, factor-mean")
        ->capture_default_str();
    e->add_option("--b", ex.b, "Loading-shift variance")->capture_default_str();
    e->add_option("--a", ex.a, "Rotational scale")->capture_default_str();
    e->add_option("--d", ex.d, "Factor mean shift")->capture_default_str();
    e->add_option("--break-dates", ex.break_dates, "Break dates (default T/2)")->delimiter(',');
    e->add_option("--noise-var", ex.noise_var, "Idiosyncratic variance (default r0)");
    e->add_option("--reps", ex.reps, "Replications")->capture_default_str();
    e->add_option("--test", ex.tests, "Tests to run")->delimiter(',')->capture_default_str();
    e->add_option("--epsilon", ex.epsilon, "Trimming fraction")->capture_default_str();
    e->add_option("--cv-policy", ex.cv_policy, "plug-in or shared")->capture_default_str();
    e->add_option("--cv-grid", ex.cv_grid, "Brownian grid steps per unit time")->capture_default_str();
    e->add_option("--cv-reps", ex.cv_reps, "Critical-value replications")->capture_default_str();
    e->add_option("--seed", ex.seed, "Seed for panels and critical values")->capture_default_str();
    add_factor_options(e, ex.factors);
    e->add_option("--workers", ex.workers, "Threads (0 = all cores)");
    e->add_option("--out", ex.out, "JSON output path (default stdout)");
    e->add_option("--table-out", ex.table_out, "CSV of rejection frequencies by test and level");

    FactorsArgs fa;
    auto* f = app.add_subcommand("factors", "Estimate factors and report the factor count");
    add_data_options(f, fa.data);
    add_factor_options(f, fa.factors);
    f->add_option("--out", fa.out, "JSON output path (default stdout)");
    f->add_option("--ghat-out", fa.ghat_out, "CSV of the T x r factors");
    f->add_option("--lambda-out", fa.lambda_out, "CSV of the N x r loadings");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kInputError;
    }

    try {
        if (*t) return cmd_test(test, argc, argv, out, err);
        if (*s) return cmd_simulate_cv(cv, out);
        if (*e) return cmd_experiment(ex, argc, argv, out);
        if (*f) return cmd_factors(fa, argc, argv, out);
    } catch (const NumericalError& ex_) {
        err << "numerical error: " << ex_.what() << '\n';
        return kNumericalError;
    } catch (const std::exception& ex_) {
        err << "error: " << ex_.what() << '\n';
        return kInputError;
    }
    return kInputError;
}

}  // namespace factorbreak::cli
