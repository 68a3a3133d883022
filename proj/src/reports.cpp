#include "checkerboard/reports.hpp"

#include <algorithm>

namespace checkerboard {

nlohmann::json report_to_json(const SeparabilityReport& r) {
  nlohmann::json fdr = r.empirical_fdr.infinite ? nlohmann::json("inf")
                                                : nlohmann::json(r.empirical_fdr.value);
  return {{"direction_norm", r.direction.norm()},
          {"empirical_fdr", fdr},
          {"analytic_jstat", r.analytic_jstat},
          {"ridge", r.ridge},
          {"sample_count", r.sample_count}};
}

nlohmann::json report_to_json(const CgeReport& r) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : r.entries) entries.push_back({{"index", e.index}, {"score", e.score}});
  return {{"class", r.class_index}, {"entries", entries}, {"ranking", r.ranking}};
}

nlohmann::json report_to_json(const DetectionReport& r) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& c : r.per_class) {
    classes.push_back({{"class", c.class_index},
                       {"median", c.median},
                       {"mad", c.mad},
                       {"s", c.outlier_fraction}});
  }
  return {{"classes", classes},
          {"flagged_class", r.flagged_class},
          {"t", r.config.t},
          {"eps", r.config.eps}};
}

nlohmann::json report_to_json(const OptimumResult& r, std::size_t height, std::size_t width) {
  const auto g = checkerboard_template(height, width);
  std::vector<LuminanceTemplate> phases = {g, g.negated()};
  std::sort(phases.begin(), phases.end());
  return {{"height", height},
          {"width", width},
          {"max", static_cast<long long>(r.max_value)},
          {"maximizer_count", r.maximizers.size()},
          {"checkerboard_phases_only", r.maximizers == phases}};
}

}  // namespace checkerboard
