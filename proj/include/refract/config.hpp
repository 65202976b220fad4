#pragma once

#include "refract/density.hpp"
#include "refract/lundberg.hpp"
#include "refract/model.hpp"
#include "refract/simulator.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace refract {

struct GridConfig {
    double t_max = 20.0;           // time units
    std::size_t time_points = 4000;
    double amount_step = 0.05;     // capital grid of the density engine (money units)
    double phi_step = 1e-3;        // capital grid of the transform solvers (money units)
    int n_max = 20;
};

struct HistogramConfig {
    std::uint64_t paths = 1'000'000;
    double t_end = 10.0;
    std::size_t bins = 50;
    int n_max = 3;
};

/// Fully resolved run description. Parsing validates every block and reports the key at fault.
struct RunConfig {
    RiskModel model;
    TransformParams transform;
    GridConfig grid;
    SimConfig sim;
    HistogramConfig histogram;
    std::vector<double> u;
    std::vector<int> m;

    /// JSON text; // and /* */ comments are allowed. Relative claim-table paths resolve
    /// against `base_dir`.
    static RunConfig parse(const std::string& text, const std::filesystem::path& base_dir = {});
    static RunConfig load(const std::filesystem::path& path);
    static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

    nlohmann::json to_json() const;
};

nlohmann::json claims_to_json(const ClaimDistribution& d);
ClaimDistribution claims_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

/// The reference model used throughout the documentation and tests:
/// lambda = 1, c1 = 1.5, c2 = 1.2, b = 2, Exponential(1) claims, delta = 0.5, r = 0.9.
RunConfig reference_config();

}  // namespace refract
