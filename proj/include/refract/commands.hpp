#pragma once

#include "refract/config.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace refract {

/// Library version embedded in every output.
std::string version();

/// Header lines for CSV outputs: tool version and the resolved config, each prefixed by "# ".
std::string csv_preamble(const RunConfig& cfg);

/// {"version", "config"} object merged into every JSON output.
nlohmann::json run_echo(const RunConfig& cfg);

nlohmann::json roots_report(const RunConfig& cfg);

/// CSV "u,phi,side" for the configured capitals. A non-empty list is followed by the
/// boundary pair (b, phi1(b)) and (b+, phi2(b+)).
std::string phi_csv(const RunConfig& cfg);

struct DensityReport {
    double u = 0.0;
    std::string csv;
    nlohmann::json summary;
};

/// One report per configured capital. Rows are written for the configured claim counts
/// (all counts up to grid.n_max when the list is empty); totals and the transform residual
/// always use every count up to grid.n_max.
std::vector<DensityReport> density_reports(const RunConfig& cfg);

struct SimulationReport {
    std::string histogram_csv;
    nlohmann::json estimates;
};

SimulationReport simulation_report(const RunConfig& cfg);

}  // namespace refract
