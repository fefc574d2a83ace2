#include "factorbreak/limitdist.hpp"

#include "factorbreak/errors.hpp"
#include "factorbreak/hac.hpp"
#include "factorbreak/linalg.hpp"
#include "factorbreak/parallel.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace factorbreak {

namespace {

constexpr std::uint32_t kBrownianStream = 0x4c44;

struct FamilyName {
    CvFamily family;
    std::string_view name;
};

constexpr FamilyName kFamilies[] = {
    {CvFamily::LRVar, "LR_var"},   {CvFamily::LRMeanVar, "LR_meanvar"}, {CvFamily::LRMulti, "LR_multi"},
    {CvFamily::LRmMulti, "LR_m_multi"}, {CvFamily::WWald, "WWald"},   {CvFamily::AndrewsIID, "AndrewsIID"},
};

bool uses_omega(CvFamily f) { return f != CvFamily::WWald && f != CvFamily::AndrewsIID; }

bool is_multi(CvFamily f) { return f == CvFamily::LRMulti || f == CvFamily::LRmMulti; }

double half_factor(CvFamily f) { return (f == CvFamily::LRVar || f == CvFamily::LRMulti) ? 0.5 : 1.0; }

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::uint64_t fnv1a(const Eigen::MatrixXd& m) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    };
    const std::int64_t dims[2] = {m.rows(), m.cols()};
    mix(dims, sizeof dims);
    mix(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
    return h;
}

// sup over m-break tuples on the grid of sum_j scale |Y_b - Y_a|^2 / ((b-a)/G).
double multi_break_sup(const Eigen::MatrixXd& yt, int m, double epsilon, double scale) {
    const Index grid = yt.cols() - 1;
    const Index h = std::max<Index>(1, min_segment(grid, epsilon));
    const double g = static_cast<double>(grid);
    auto cost = [&](Index a, Index b) {
        return scale * g * (yt.col(b) - yt.col(a)).squaredNorm() / static_cast<double>(b - a);
    };
    const double ninf = -std::numeric_limits<double>::infinity();
    std::vector<double> prev(static_cast<std::size_t>(grid + 1), ninf);
    std::vector<double> cur(static_cast<std::size_t>(grid + 1), ninf);
    for (Index b = h; b + m * h <= grid; ++b) prev[static_cast<std::size_t>(b)] = cost(0, b);
    for (int j = 2; j <= m; ++j) {
        std::fill(cur.begin(), cur.end(), ninf);
        for (Index b = j * h; b + (m - j + 1) * h <= grid; ++b) {
            double best = ninf;
            for (Index a = (j - 1) * h; a + h <= b; ++a) best = std::max(best, prev[static_cast<std::size_t>(a)] + cost(a, b));
            cur[static_cast<std::size_t>(b)] = best;
        }
        std::swap(prev, cur);
    }
    double out = ninf;
    for (Index b = m * h; b + h <= grid; ++b) out = std::max(out, prev[static_cast<std::size_t>(b)] + cost(b, grid));
    return out;
}

}  // namespace

CvFamily parse_family(std::string_view name) {
    for (const auto& f : kFamilies)
        if (f.name == name) return f.family;
    throw ParseError("unknown critical-value family: " + std::string(name));
}

std::string_view to_string(CvFamily family) {
    for (const auto& f : kFamilies)
        if (f.family == family) return f.name;
    return "?";
}

Index process_dimension(const CvRequest& q) {
    const Index r = q.r;
    switch (q.family) {
        case CvFamily::LRVar:
        case CvFamily::LRMulti: return r * r;
        case CvFamily::LRMeanVar:
        case CvFamily::LRmMulti: return r + r * r;
        case CvFamily::WWald: return r * (r + 3) / 2;
        case CvFamily::AndrewsIID: return q.p > 0 ? q.p : r * (r + 1) / 2;
    }
    return 0;
}

void validate(const CvRequest& q) {
    if (q.r < 1) throw DimensionError("r must be at least 1");
    if (q.grid < 100) throw DimensionError("grid must be at least 100");
    if (q.reps < 100) throw DimensionError("reps must be at least 100");
    if (q.family != CvFamily::WWald && !(q.epsilon > 0.0 && q.epsilon < 0.5))
        throw DimensionError("trimming epsilon must lie in (0, 0.5)");
    if (is_multi(q.family)) {
        if (q.m < 1) throw DimensionError("number of breaks must be at least 1");
        const Index h = std::max<Index>(1, min_segment(q.grid, q.epsilon));
        if ((q.m + 1) * h > q.grid) throw DimensionError("trimming leaves no admissible break fractions");
    }
    for (double level : q.levels)
        if (!(level > 0.0 && level < 1.0)) throw DimensionError("levels must lie in (0, 1)");
    if (!uses_omega(q.family)) return;
    const Index d = process_dimension(q);
    if (q.omega.rows() != d || q.omega.cols() != d) {
        std::ostringstream msg;
        msg << to_string(q.family) << " with r = " << q.r << " needs a " << d << " x " << d << " omega, got "
            << q.omega.rows() << " x " << q.omega.cols();
        throw DimensionError(msg.str());
    }
    if (!q.omega.allFinite()) throw NumericalError("omega has non-finite entries");
    const Eigen::MatrixXd sym = 0.5 * (q.omega + q.omega.transpose());
    const double lo = min_eigenvalue(sym);
    if (lo < -1e-6 * std::max(1.0, std::abs(sym.trace()))) {
        std::ostringstream msg;
        msg << "omega is not positive semidefinite (smallest eigenvalue " << lo << ")";
        throw NumericalError(msg.str());
    }
}

double CvTable::at(double level) const {
    for (const auto& [l, v] : quantiles)
        if (std::abs(l - level) < 1e-12) return v;
    throw DimensionError("level " + format_double(level) + " not in table");
}

Eigen::MatrixXd brownian_path(Engine& engine, int grid, Index d) {
    std::normal_distribution<double> normal(0.0, std::sqrt(1.0 / grid));
    Eigen::MatrixXd path(grid + 1, d);
    path.row(0).setZero();
    for (int i = 1; i <= grid; ++i)
        for (Index c = 0; c < d; ++c) path(i, c) = path(i - 1, c) + normal(engine);
    return path;
}

Eigen::MatrixXd coarsen_path(const Eigen::MatrixXd& path, int factor) {
    const Index fine = path.rows() - 1;
    if (factor < 1 || fine % factor != 0) throw DimensionError("coarsening factor must divide the grid");
    Eigen::MatrixXd out(fine / factor + 1, path.cols());
    for (Index i = 0; i < out.rows(); ++i) out.row(i) = path.row(i * factor);
    return out;
}

Eigen::MatrixXd omega_root(const CvRequest& q, std::vector<std::string>* warnings) {
    const Index d = process_dimension(q);
    if (!uses_omega(q.family)) return Eigen::MatrixXd::Identity(d, d);
    double clipped = 0.0;
    Eigen::MatrixXd root = sym_sqrt(0.5 * (q.omega + q.omega.transpose()), &clipped);
    if (warnings && clipped > 1e-6 * std::abs(q.omega.trace()) && clipped > 0.0) {
        warnings->push_back("clipped negative omega eigenvalues with total mass " + format_double(clipped));
    }
    return root;
}

double evaluate_functional(const CvRequest& q, const Eigen::MatrixXd& root, const Eigen::MatrixXd& path) {
    const Index grid = path.rows() - 1;
    const double g = static_cast<double>(grid);
    Eigen::MatrixXd bridge = path;
    for (Index i = 0; i <= grid; ++i) bridge.row(i) -= (static_cast<double>(i) / g) * path.row(grid);
    const Eigen::MatrixXd yt = root * bridge.transpose();  // d x (grid+1)

    if (is_multi(q.family)) return multi_break_sup(yt, q.m, q.epsilon, half_factor(q.family));

    if (q.family == CvFamily::WWald) return yt.colwise().squaredNorm().maxCoeff();

    const auto [lo, hi] = trim_range(grid, q.epsilon);
    const double scale = q.family == CvFamily::AndrewsIID ? 1.0 : half_factor(q.family);
    double best = -std::numeric_limits<double>::infinity();
    for (Index i = lo; i <= hi; ++i) {
        const double pi = static_cast<double>(i) / g;
        best = std::max(best, scale * yt.col(i).squaredNorm() / (pi * (1.0 - pi)));
    }
    return best;
}

std::vector<double> simulate_draws(const CvRequest& q, std::vector<std::string>* warnings) {
    validate(q);
    const Index d = process_dimension(q);
    const Eigen::MatrixXd root = omega_root(q, warnings);
    std::vector<double> draws(static_cast<std::size_t>(q.reps));
    parallel_for(draws.size(), q.workers, [&](std::size_t i) {
        Engine engine = substream(q.seed, i, kBrownianStream);
        const Eigen::MatrixXd path = brownian_path(engine, q.grid, d);
        draws[i] = evaluate_functional(q, root, path);
    });
    return draws;
}

double nearest_rank_quantile(std::vector<double> draws, double level) {
    if (draws.empty()) throw DimensionError("no draws");
    const auto n = static_cast<double>(draws.size());
    auto rank = static_cast<std::size_t>(std::ceil((1.0 - level) * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, draws.size());
    std::nth_element(draws.begin(), draws.begin() + static_cast<std::ptrdiff_t>(rank - 1), draws.end());
    return draws[rank - 1];
}

CvTable simulate_cv(const CvRequest& q) {
    CvTable table;
    table.request = q;
    std::vector<double> draws = simulate_draws(q, &table.warnings);
    for (double level : q.levels) table.quantiles.emplace_back(level, nearest_rank_quantile(draws, level));
    if (q.keep_draws) table.draws = std::move(draws);
    return table;
}

std::string cache_key(const CvRequest& q) {
    std::ostringstream key;
    key << to_string(q.family) << "|r=" << q.r << "|m=" << (is_multi(q.family) ? q.m : 0)
        << "|eps=" << (q.family == CvFamily::WWald ? std::string("-") : format_double(q.epsilon))
        << "|grid=" << q.grid << "|reps=" << q.reps << "|seed=" << q.seed << "|d=" << process_dimension(q)
        << "|levels=";
    for (double l : q.levels) key << format_double(l) << ';';
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(uses_omega(q.family) ? fnv1a(q.omega) : 0ULL));
    key << "|omega=" << hash;
    return key.str();
}

CvCache::CvCache(std::filesystem::path file) : file_(std::move(file)) {}

std::filesystem::path CvCache::default_file() {
    std::filesystem::path dir;
    if (const char* env = std::getenv("FACTORBREAK_CACHE_DIR"); env && *env) {
        dir = env;
    } else if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg) {
        dir = std::filesystem::path(xdg) / "factorbreak";
    } else if (const char* home = std::getenv("HOME"); home && *home) {
        dir = std::filesystem::path(home) / ".cache" / "factorbreak";
    } else {
        dir = ".factorbreak-cache";
    }
    return dir / "cv_tables.jsonl";
}

std::optional<CvTable> CvCache::lookup(const CvRequest& q) const {
    std::ifstream in(file_);
    if (!in) return std::nullopt;
    const std::string key = cache_key(q);
    std::optional<CvTable> found;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || j.value("key", "") != key) continue;
        CvTable t;
        t.request = q;
        t.from_cache = true;
        for (const auto& pair : j.at("quantiles")) t.quantiles.emplace_back(pair.at(0).get<double>(), pair.at(1).get<double>());
        for (const auto& w : j.value("warnings", nlohmann::json::array())) t.warnings.push_back(w.get<std::string>());
        found = std::move(t);
    }
    return found;
}

bool CvCache::store(const CvTable& t) const {
    std::error_code ec;
    if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path(), ec);
    std::ofstream out(file_, std::ios::app);
    if (!out) return false;
    nlohmann::json j;
    j["key"] = cache_key(t.request);
    j["quantiles"] = nlohmann::json::array();
    for (const auto& [l, v] : t.quantiles) j["quantiles"].push_back({l, v});
    j["warnings"] = t.warnings;
    out << j.dump() << '\n';
    return static_cast<bool>(out);
}

CvTable simulate_cv(const CvRequest& q, const CvCache* cache) {
    if (cache && !q.keep_draws) {
        validate(q);
        if (auto hit = cache->lookup(q)) return *hit;
    }
    CvTable table = simulate_cv(q);
    if (cache && !cache->store(table)) table.warnings.push_back("could not write cache file " + cache->file().string());
    return table;
}

CvRequest request_for_test(const Eigen::MatrixXd& ghat, TestKind test, double epsilon, std::uint64_t seed,
                           const SimSettings& settings, int breaks, double* bandwidth) {
    CvRequest q;
    q.r = static_cast<int>(ghat.cols());
    q.m = breaks;
    q.epsilon = epsilon;
    q.seed = seed;
    q.grid = settings.grid;
    q.reps = settings.reps;
    q.levels = settings.levels;
    q.workers = settings.workers;
    if (breaks < 1) throw DimensionError("number of breaks must be at least 1");
    auto plug_in = [&](const Eigen::MatrixXd& moments) {
        LongRunVariance lrv = hac_omega(moments);
        if (bandwidth) *bandwidth = lrv.bandwidth;
        q.omega = std::move(lrv.omega);
    };
    switch (test) {
        case TestKind::LR:
            q.family = breaks > 1 ? CvFamily::LRMulti : CvFamily::LRVar;
            plug_in(vec_moments(ghat));
            return q;
        case TestKind::LRm:
        case TestKind::LRmND:
            q.family = breaks > 1 ? CvFamily::LRmMulti : CvFamily::LRMeanVar;
            plug_in(meanvar_moments(ghat));
            return q;
        default: break;
    }
    if (breaks > 1) throw DimensionError("multiple breaks are supported for lr and lrm only");
    q.family = test == TestKind::WWald ? CvFamily::WWald : CvFamily::AndrewsIID;
    return q;
}

CvTable cv_for_report(const Eigen::MatrixXd& ghat, TestKind test, double epsilon, std::uint64_t seed,
                      const SimSettings& settings, int breaks, const CvCache* cache) {
    double bandwidth = -1.0;
    const CvRequest q = request_for_test(ghat, test, epsilon, seed, settings, breaks, &bandwidth);
    CvTable table = simulate_cv(q, cache);
    table.hac_bandwidth = bandwidth;
    return table;
}

}  // namespace factorbreak
