#include "equibound/report.hpp"

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "equibound/errors.hpp"
#include "equibound/version.hpp"

namespace equibound {

std::string report_to_json(const InequityReport& report,
                           const std::string& resolved_config_json) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["config"] = nlohmann::json::parse(resolved_config_json);
  j["gamma_grid"] = report.gamma_grid;
  j["groups"] = nlohmann::json::array();
  for (const GroupCurve& c : report.curves) {
    nlohmann::json points = nlohmann::json::array();
    for (std::size_t i = 0; i < c.points.size(); ++i) {
      const IntervalEstimate& p = c.points[i];
      points.push_back({{"gamma", report.gamma_grid[i]},
                        {"lower", p.lower_point},
                        {"upper", p.upper_point},
                        {"ci_lo", p.ci_lo},
                        {"ci_hi", p.ci_hi}});
    }
    j["groups"].push_back({{"group", c.group}, {"points", std::move(points)}});
  }
  j["pairs"] = nlohmann::json::array();
  for (const PairVerdict& pv : report.pairs) {
    nlohmann::json e = {{"a", pv.g_a}, {"b", pv.g_b}, {"overlap", pv.overlap}};
    if (pv.gamma_star)
      e["gamma_star"] = *pv.gamma_star;
    else
      e["gamma_star"] = nullptr;
    j["pairs"].push_back(std::move(e));
  }
  j["failed_groups"] = nlohmann::json::array();
  for (const auto& [g, msg] : report.failed_groups)
    j["failed_groups"].push_back({{"group", g}, {"error", msg}});
  return j.dump(2);
}

void write_report_json(const InequityReport& report,
                       const std::string& resolved_config_json,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write file: " + path.string());
  out << report_to_json(report, resolved_config_json) << '\n';
}

void write_curves_csv(const InequityReport& report,
                      const std::string& resolved_config_json,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write file: " + path.string());
  out << "# equibound " << kVersion << "\n# config " << resolved_config_json << '\n';
  out << "group,gamma,lower,upper,ci_lo,ci_hi\n";
  char buf[160];
  for (const GroupCurve& c : report.curves) {
    for (std::size_t i = 0; i < c.points.size(); ++i) {
      const IntervalEstimate& p = c.points[i];
      std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%.6f,%.6f\n", c.group,
                    report.gamma_grid[i], p.lower_point, p.upper_point, p.ci_lo,
                    p.ci_hi);
      out << buf;
    }
  }
}

}  // namespace equibound
