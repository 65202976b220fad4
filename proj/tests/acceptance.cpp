#include "refract/config.hpp"
#include "refract/validation.hpp"

#include <cstdio>
#include <cstdlib>
#include <string>

// Runs every acceptance check on the reference model at the settings the checks call for
// and prints one line per check. Pass check ids as arguments to run a subset.
int main(int argc, char** argv) {
    refract::RunConfig cfg = refract::reference_config();
    cfg.grid.t_max = 50.0;
    cfg.grid.n_max = 20;
    cfg.sim.paths = 1'000'000;
    cfg.histogram.paths = 10'000'000;

    refract::ValidationOptions opt;
    for (int i = 1; i < argc; ++i) opt.only.push_back(std::atoi(argv[i]));

    int failed = 0;
    refract::validate(cfg, opt, [&](const refract::Verdict& v) {
        std::printf("%s\n", refract::format_line(v).c_str());
        std::fflush(stdout);
        if (!v.passed) ++failed;
    });
    std::printf("%s: %d check(s) failed\n", failed ? "FAILED" : "OK", failed);
    return failed ? 1 : 0;
}
