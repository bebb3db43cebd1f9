#include "fracdelay/analysis.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace fracdelay {
namespace {

using nlohmann::json;

json matrix_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

// JSON has no infinity; non-finite values become null.
json number_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json positivity_json(const PositivityReport& r) {
  json j;
  j["verdict"] = to_string(r.verdict);
  json checks = json::array();
  for (const auto& c : r.checks) {
    json cj{{"name", c.name}, {"passed", c.passed}, {"skipped", c.skipped}};
    if (!c.note.empty()) cj["note"] = c.note;
    checks.push_back(cj);
  }
  j["checks"] = checks;
  if (r.witness) {
    const Witness& w = *r.witness;
    j["witness"] = {{"construction", w.construction},
                    {"time", w.time},
                    {"component", static_cast<int>(w.component)},
                    {"value", w.value}};
  } else {
    j["witness"] = nullptr;
  }
  return j;
}

json stability_json(const StabilityReport& r) {
  json j;
  j["verdict"] = to_string(r.verdict);
  j["route"] = to_string(r.route);
  j["criterion"] = r.criterion;
  j["mu2"] = number_json(r.mu2);
  j["threshold"] = number_json(r.threshold);
  j["stacked_norm"] = number_json(r.stacked_norm);
  j["beta"] = r.beta;
  j["guard"] = {{"passed", r.guard_passed}, {"description", r.guard}};
  if (r.transform) {
    j["canonical"] = {{"T", matrix_json(r.transform->T)},
                      {"J_d", matrix_json(r.transform->J_d)},
                      {"J_off", matrix_json(r.transform->J_off)},
                      {"condition", number_json(r.transform->condition)},
                      {"ill_conditioned", r.transform->ill_conditioned}};
  }
  j["notes"] = r.notes;
  return j;
}

json advisory_json(const AdvisoryReport& r) {
  return {{"verdict", to_string(r.verdict)},
          {"required_zero", r.required_zero},
          {"nonzero_required", r.nonzero_required},
          {"reason", r.reason},
          {"canonical", stability_json(r.canonical)}};
}

}  // namespace

std::string to_json(const PositivityReport& r, int indent) { return positivity_json(r).dump(indent); }
std::string to_json(const StabilityReport& r, int indent) { return stability_json(r).dump(indent); }
std::string to_json(const AdvisoryReport& r, int indent) { return advisory_json(r).dump(indent); }

std::string analysis_json(const PositivityReport& pos, const StabilityReport& stab,
                          const std::optional<AdvisoryReport>& advisory, int indent) {
  json j{{"positivity", positivity_json(pos)}, {"stability", stability_json(stab)}};
  j["advisory"] = advisory ? advisory_json(*advisory) : json(nullptr);
  return j.dump(indent);
}

}  // namespace fracdelay
