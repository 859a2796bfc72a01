#pragma once

#include <filesystem>
#include <string>

#include "equibound/inference.hpp"

namespace equibound {

// Full report as JSON text; resolved_config_json is embedded verbatim along
// with the library version.
std::string report_to_json(const InequityReport& report,
                           const std::string& resolved_config_json);

void write_report_json(const InequityReport& report,
                       const std::string& resolved_config_json,
                       const std::filesystem::path& path);

// Long-format curve table (group, gamma, lower, upper, ci_lo, ci_hi), fixed
// 6-decimal formatting; the version and resolved config ride along as '#'
// comment lines.
void write_curves_csv(const InequityReport& report,
                      const std::string& resolved_config_json,
                      const std::filesystem::path& path);

}  // namespace equibound
