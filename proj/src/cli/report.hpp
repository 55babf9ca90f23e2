#pragma once

#include <string>
#include <vector>

#include "simflow/calibration.hpp"
#include "simflow/cli.hpp"
#include "simflow/compare.hpp"
#include "simflow/predictive.hpp"
#include "simflow/simtest.hpp"

namespace simflow::cli {

json to_json(const UniformityVerdict& v);
json to_json(const CalibrationResult& r);
json to_json(const TestReport& r);
json to_json(const PredictiveResult& r);
json to_json(const EvidenceEstimate& e);
json summarize_draws(const ParamDraws& draws);
json summarize_values(const std::vector<double>& values);

std::string pvalues_csv(const CalibrationResult& r);
std::string column_csv(const std::string& header, const std::vector<double>& values);
std::string draws_csv(const ParamDraws& draws);

}  // namespace simflow::cli
