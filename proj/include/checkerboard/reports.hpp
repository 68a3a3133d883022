#pragma once

#include <json.hpp>

#include "checkerboard/complexity.hpp"
#include "checkerboard/defense.hpp"
#include "checkerboard/separability.hpp"
#include "checkerboard/trigger.hpp"

namespace checkerboard {

/// {direction_norm, empirical_fdr, analytic_jstat, ridge, sample_count};
/// an infinite ratio serializes as the string "inf".
nlohmann::json report_to_json(const SeparabilityReport& r);

/// {class, entries: [{index, score}], ranking: [index]}
nlohmann::json report_to_json(const CgeReport& r);

/// {classes: [{class, median, mad, s}], flagged_class, t, eps}
nlohmann::json report_to_json(const DetectionReport& r);

/// {height, width, max, maximizer_count, checkerboard_phases_only}
nlohmann::json report_to_json(const OptimumResult& r, std::size_t height, std::size_t width);

}  // namespace checkerboard
