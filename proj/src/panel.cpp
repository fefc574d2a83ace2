#include "factorbreak/panel.hpp"

#include "factorbreak/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string_view>

namespace factorbreak {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

std::optional<double> parse_number(std::string_view s) {
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

}  // namespace

void Panel::validate() const {
    if (values.rows() < 2) throw DimensionError("panel needs at least 2 time periods");
    if (values.cols() < 1) throw DimensionError("panel needs at least 1 series");
    if (!values.allFinite()) throw ParseError("panel contains non-finite values");
    if (!time_labels.empty() && static_cast<Eigen::Index>(time_labels.size()) != values.rows())
        throw DimensionError("time label count does not match the number of periods");
    if (!series_labels.empty() && static_cast<Eigen::Index>(series_labels.size()) != values.cols())
        throw DimensionError("series label count does not match the number of series");
}

Panel load_panel(std::istream& in, const CsvOptions& options) {
    std::vector<std::string> header;
    std::vector<std::string> row_labels;
    std::vector<std::vector<double>> rows;
    std::optional<bool> label_column;
    std::size_t width = 0;

    std::string line;
    std::size_t line_no = 0;
    bool header_pending = options.has_header;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(line, options.delimiter);
        if (header_pending) {
            for (auto f : fields) header.emplace_back(f);
            header_pending = false;
            continue;
        }
        if (!label_column) {
            label_column = !parse_number(fields.front()).has_value() && fields.size() > 1;
            width = fields.size();
        }
        if (fields.size() != width) {
            std::ostringstream msg;
            msg << "ragged row at line " << line_no << ": expected " << width << " fields, found "
                << fields.size();
            throw ParseError(msg.str());
        }
        std::vector<double> row;
        row.reserve(width);
        for (std::size_t j = 0; j < fields.size(); ++j) {
            if (j == 0 && *label_column) {
                row_labels.emplace_back(fields[0]);
                continue;
            }
            const auto v = parse_number(fields[j]);
            if (!v) {
                std::ostringstream msg;
                msg << "non-numeric cell at line " << line_no << ", column " << (j + 1) << ": '"
                    << fields[j] << "'";
                throw ParseError(msg.str());
            }
            if (!std::isfinite(*v)) {
                std::ostringstream msg;
                msg << "non-finite value at line " << line_no << ", column " << (j + 1);
                throw ParseError(msg.str());
            }
            row.push_back(*v);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("empty input: no data rows");

    const auto n_rows = static_cast<Eigen::Index>(rows.size());
    const auto n_cols = static_cast<Eigen::Index>(rows.front().size());
    Eigen::MatrixXd m(n_rows, n_cols);
    for (Eigen::Index i = 0; i < n_rows; ++i)
        for (Eigen::Index j = 0; j < n_cols; ++j) m(i, j) = rows[i][j];

    std::vector<std::string> col_labels;
    if (!header.empty()) {
        const std::size_t skip = (*label_column && header.size() == width) ? 1 : 0;
        if (header.size() - skip != static_cast<std::size_t>(n_cols))
            throw ParseError("header has " + std::to_string(header.size()) +
                             " fields but data rows have " + std::to_string(width));
        col_labels.assign(header.begin() + static_cast<std::ptrdiff_t>(skip), header.end());
    }

    Panel p;
    if (options.transpose) {
        p.values = m.transpose();
        p.time_labels = std::move(col_labels);
        p.series_labels = std::move(row_labels);
    } else {
        p.values = std::move(m);
        p.time_labels = std::move(row_labels);
        p.series_labels = std::move(col_labels);
    }
    p.validate();
    return p;
}

Panel load_panel(const std::filesystem::path& path, const CsvOptions& options) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open panel file: " + path.string());
    return load_panel(in, options);
}

void write_panel(std::ostream& out, const Panel& panel, char delimiter) {
    const bool labels = !panel.time_labels.empty();
    const auto old_precision = out.precision(17);
    if (!panel.series_labels.empty()) {
        if (labels) out << "time" << delimiter;
        for (std::size_t j = 0; j < panel.series_labels.size(); ++j) {
            if (j) out << delimiter;
            out << panel.series_labels[j];
        }
        out << '\n';
    }
    for (Eigen::Index i = 0; i < panel.values.rows(); ++i) {
        if (labels) out << panel.time_labels[static_cast<std::size_t>(i)] << delimiter;
        for (Eigen::Index j = 0; j < panel.values.cols(); ++j) {
            if (j) out << delimiter;
            out << panel.values(i, j);
        }
        out << '\n';
    }
    out.precision(old_precision);
}

Panel demean(const Panel& panel) {
    Panel out = panel;
    out.values.rowwise() -= panel.values.colwise().mean();
    out.demeaned = true;
    return out;
}

}  // namespace factorbreak
