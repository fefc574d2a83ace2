#pragma once

#include "json.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace fbtest {

inline std::filesystem::path data_path(const std::string& name) { return std::filesystem::path(FB_TEST_DATA) / name; }

inline const nlohmann::json& oracle() {
    static const nlohmann::json j = [] {
        std::ifstream in(data_path("oracle_values.json"));
        return nlohmann::json::parse(in);
    }();
    return j;
}

inline Eigen::MatrixXd to_matrix(const nlohmann::json& rows) {
    Eigen::MatrixXd m(rows.size(), rows.at(0).size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j].get<double>();
    return m;
}

inline Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n(rng);
    return m;
}

inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

}  // namespace fbtest
