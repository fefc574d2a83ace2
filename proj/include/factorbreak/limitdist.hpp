#pragma once

#include "factorbreak/breaktest.hpp"
#include "factorbreak/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace factorbreak {

/// Limiting null laws, all built from a Brownian bridge B(pi) = W(pi) - pi W(1).
///   LRVar      sup (1/2) |Om^(1/2) B|^2 / (pi(1-pi)) over [eps, 1-eps], d = r^2
///   LRMeanVar  as LRVar without the 1/2, d = r + r^2
///   LRMulti    sup over m-break fraction tuples of sum_j |Om^(1/2) dB_j|^2 / (2 dpi_j)
///   LRmMulti   as LRMulti without the 1/2
///   WWald      sup over [0, 1] of |B|^2, d = r(r+3)/2, no nuisance matrix
///   AndrewsIID sup |B|^2 / (pi(1-pi)) over [eps, 1-eps], d = p
enum class CvFamily { LRVar, LRMeanVar, LRMulti, LRmMulti, WWald, AndrewsIID };

[[nodiscard]] CvFamily parse_family(std::string_view name);
[[nodiscard]] std::string_view to_string(CvFamily family);

struct CvRequest {
    CvFamily family = CvFamily::LRVar;
    int r = 1;
    int m = 1;                 ///< breaks, multi families only
    double epsilon = 0.15;
    Eigen::MatrixXd omega;     ///< ignored by WWald and AndrewsIID
    int grid = 2000;
    int reps = 1000;
    std::uint64_t seed = 0;
    std::vector<double> levels{0.10, 0.05, 0.01};
    int p = 0;                 ///< AndrewsIID dimension; 0 means r(r+1)/2
    bool keep_draws = false;
    unsigned workers = 0;      ///< 0 means hardware concurrency
};

/// Dimension of the Brownian motion the family needs.
[[nodiscard]] Eigen::Index process_dimension(const CvRequest& request);

/// Throws DimensionError/NumericalError when the request is invalid.
void validate(const CvRequest& request);

struct CvTable {
    CvRequest request;
    std::vector<std::pair<double, double>> quantiles;  ///< (level, critical value) in request order
    std::vector<double> draws;                         ///< simulated suprema when keep_draws
    std::vector<std::string> warnings;
    double hac_bandwidth = -1.0;                       ///< bandwidth behind omega, -1 if not a plug-in
    bool from_cache = false;

    [[nodiscard]] double at(double level) const;
};

/// Standard Brownian motion on i/grid, i = 0..grid: (grid+1) x d, first row zero.
[[nodiscard]] Eigen::MatrixXd brownian_path(Engine& engine, int grid, Eigen::Index d);

/// Sum consecutive increments in blocks of `factor`, giving the same path on a
/// coarser grid.
[[nodiscard]] Eigen::MatrixXd coarsen_path(const Eigen::MatrixXd& path, int factor);

/// Value of the family's functional on one Brownian path (rows i/grid).
/// omega_root is the symmetric square root of omega (identity for the
/// nuisance-free families).
[[nodiscard]] double evaluate_functional(const CvRequest& request, const Eigen::MatrixXd& omega_root,
                                         const Eigen::MatrixXd& path);

/// Symmetric square root used for the request; appends a warning when more
/// than 1e-6 of the trace had to be clipped.
[[nodiscard]] Eigen::MatrixXd omega_root(const CvRequest& request, std::vector<std::string>* warnings = nullptr);

/// Simulated suprema in replication order. Replication i draws from
/// substream(seed, i), so results do not depend on worker count.
[[nodiscard]] std::vector<double> simulate_draws(const CvRequest& request, std::vector<std::string>* warnings = nullptr);

/// The ceil((1-level) n)-th order statistic of draws.
[[nodiscard]] double nearest_rank_quantile(std::vector<double> draws, double level);

[[nodiscard]] CvTable simulate_cv(const CvRequest& request);

/// JSON-lines store of previously simulated tables.
class CvCache {
public:
    explicit CvCache(std::filesystem::path file);

    /// $FACTORBREAK_CACHE_DIR, else $XDG_CACHE_HOME/factorbreak, else
    /// ~/.cache/factorbreak; the file inside is cv_tables.jsonl.
    [[nodiscard]] static std::filesystem::path default_file();

    [[nodiscard]] const std::filesystem::path& file() const { return file_; }
    [[nodiscard]] std::optional<CvTable> lookup(const CvRequest& request) const;
    /// Appends one line; false if the file could not be written.
    bool store(const CvTable& table) const;

private:
    std::filesystem::path file_;
};

/// Identity of a request: family, r, m, eps, grid, reps, seed, p, levels and
/// an FNV-1a hash of omega's bytes.
[[nodiscard]] std::string cache_key(const CvRequest& request);

/// Cached lookup, simulating and storing on a miss. cache may be null.
[[nodiscard]] CvTable simulate_cv(const CvRequest& request, const CvCache* cache);

struct SimSettings {
    int grid = 2000;
    int reps = 1000;
    std::vector<double> levels{0.10, 0.05, 0.01};
    unsigned workers = 0;
};

/// Request matching a test on the given factors, with the plug-in HAC
/// estimate where the family needs one. breaks > 1 selects the multi-break
/// families and is valid for LR and LRm only.
[[nodiscard]] CvRequest request_for_test(const Eigen::MatrixXd& ghat, TestKind test, double epsilon,
                                         std::uint64_t seed, const SimSettings& settings = {}, int breaks = 1,
                                         double* bandwidth = nullptr);

[[nodiscard]] CvTable cv_for_report(const Eigen::MatrixXd& ghat, TestKind test, double epsilon, std::uint64_t seed,
                                    const SimSettings& settings = {}, int breaks = 1, const CvCache* cache = nullptr);

}  // namespace factorbreak
