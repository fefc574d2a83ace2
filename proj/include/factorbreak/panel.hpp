#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace factorbreak {

/// A balanced T x N panel: rows are time periods, columns are series.
struct Panel {
    Eigen::MatrixXd values;
    std::vector<std::string> time_labels;
    std::vector<std::string> series_labels;
    bool demeaned = false;

    [[nodiscard]] Eigen::Index periods() const { return values.rows(); }
    [[nodiscard]] Eigen::Index series() const { return values.cols(); }

    /// Throws ParseError/DimensionError if the invariants do not hold
    /// (finite entries, T >= 2, N >= 1, label counts matching).
    void validate() const;
};

struct CsvOptions {
    bool has_header = false;
    char delimiter = ',';
    /// Read rows as series and columns as periods.
    bool transpose = false;
};

/// Parse delimited numeric text. A leading label column is detected when the
/// first field of the first data row does not parse as a number.
[[nodiscard]] Panel load_panel(std::istream& in, const CsvOptions& options = {});
[[nodiscard]] Panel load_panel(const std::filesystem::path& path, const CsvOptions& options = {});

/// Write with 17 significant digits. Header and label column are emitted when
/// the panel carries labels.
void write_panel(std::ostream& out, const Panel& panel, char delimiter = ',');

/// Subtract each column's time mean. Idempotent.
[[nodiscard]] Panel demean(const Panel& panel);

}  // namespace factorbreak
