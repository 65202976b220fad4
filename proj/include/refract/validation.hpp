#pragma once

#include "refract/config.hpp"

#include <json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace refract {

/// Outcome of one acceptance check. `measured` is compared against `limit` (smaller is
/// better) unless the check says otherwise in `detail`.
struct Verdict {
    int id = 0;
    std::string name;
    bool passed = false;
    double measured = 0.0;
    double limit = 0.0;
    double seconds = 0.0;
    double time_limit = 0.0;
    std::string detail;
};

nlohmann::json to_json(const Verdict& v);

/// Single-line "PASS [id] name: detail" summary.
std::string format_line(const Verdict& v);

struct ValidationOptions {
    /// Paths for the determinism check (capped; only equality of outputs matters there).
    std::uint64_t determinism_paths = 200'000;
    unsigned determinism_threads = 8;
    /// Runs only these criteria when non-empty.
    std::vector<int> only;
};

/// Runs the acceptance checks on the model, transform and grid of `cfg`. Checks that fix
/// their own parameters (root sweep, operator identity, classical closed form) ignore the
/// config. `on_verdict` is called as soon as each check finishes.
std::vector<Verdict> validate(const RunConfig& cfg, const ValidationOptions& opt = {},
                              const std::function<void(const Verdict&)>& on_verdict = {});

}  // namespace refract
