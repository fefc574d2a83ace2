#pragma once

#include "factorbreak/factors.hpp"
#include "factorbreak/limitdist.hpp"
#include "factorbreak/montecarlo.hpp"
#include "factorbreak/report.hpp"

#include "json.hpp"

#include <iosfwd>

namespace factorbreak {

using Json = nlohmann::ordered_json;

/// Finite values as numbers; +-infinity and NaN as the strings "inf", "-inf", "nan".
[[nodiscard]] Json number(double x);
[[nodiscard]] Json matrix_json(const Eigen::MatrixXd& m);
/// Level keys as they appear in reports: "0.10", "0.05", "0.01".
[[nodiscard]] std::string level_key(double level);

[[nodiscard]] Json to_json(const LrCurve& curve);
[[nodiscard]] Json to_json(const CvTable& table);
[[nodiscard]] Json to_json(const TestReport& report);
[[nodiscard]] Json to_json(const FactorEstimate& estimate);
[[nodiscard]] Json to_json(const DgpConfig& config);
[[nodiscard]] Json to_json(const ExperimentResult& result);

/// Two columns k,value; a third column per critical value when given.
void write_curve_csv(std::ostream& out, const TestReport& report);

}  // namespace factorbreak
