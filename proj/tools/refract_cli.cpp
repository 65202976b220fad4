#include "refract/commands.hpp"
#include "refract/config.hpp"
#include "refract/errors.hpp"
#include "refract/parallel.hpp"
#include "refract/validation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { ok = 0, config_error = 2, numerical_error = 3, validation_failed = 4 };

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    std::vector<int> only;
};

refract::RunConfig resolve(const Options& o) {
    refract::RunConfig cfg = o.config.empty() ? refract::reference_config() : refract::RunConfig::load(o.config);
    if (o.seed) cfg.sim.seed = *o.seed;
    return cfg;
}

void write_file(const Options& o, const std::string& name, const std::string& text) {
    if (o.out.empty()) return;
    fs::create_directories(o.out);
    const fs::path p = fs::path(o.out) / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw refract::ConfigError("cannot write " + p.string());
    f << text;
}

std::string label(double u) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", u);
    return buf;
}

int run_roots(const Options& o) {
    const auto report = refract::roots_report(resolve(o));
    std::cout << report.dump(2) << '\n';
    write_file(o, "roots.json", report.dump(2) + "\n");
    return ok;
}

int run_phi(const Options& o) {
    const std::string csv = refract::phi_csv(resolve(o));
    std::cout << csv;
    write_file(o, "phi.csv", csv);
    return ok;
}

int run_density(const Options& o) {
    const auto cfg = resolve(o);
    json all = json::array();
    for (const auto& rep : refract::density_reports(cfg)) {
        write_file(o, "density_u" + label(rep.u) + ".csv", rep.csv);
        write_file(o, "density_u" + label(rep.u) + ".json", rep.summary.dump(2) + "\n");
        all.push_back(rep.summary);
    }
    std::cout << all.dump(2) << '\n';
    if (o.out.empty()) std::cerr << "note: pass --out DIR to write the density tables\n";
    return ok;
}

int run_simulate(const Options& o) {
    const auto rep = refract::simulation_report(resolve(o));
    write_file(o, "histogram.csv", rep.histogram_csv);
    write_file(o, "estimates.json", rep.estimates.dump(2) + "\n");
    std::cout << rep.estimates.dump(2) << '\n';
    if (o.out.empty()) std::cerr << "note: pass --out DIR to write the histogram\n";
    return ok;
}

int run_validate(const Options& o) {
    const auto cfg = resolve(o);
    refract::ValidationOptions vo;
    vo.only = o.only;
    const auto verdicts = refract::validate(cfg, vo, [](const refract::Verdict& v) {
        std::cerr << refract::format_line(v) << std::endl;
    });
    json report = refract::run_echo(cfg);
    report["criteria"] = json::array();
    bool all = true;
    for (const auto& v : verdicts) {
        report["criteria"].push_back(refract::to_json(v));
        all = all && v.passed;
    }
    report["passed"] = all;
    std::cout << report.dump(2) << '\n';
    write_file(o, "validation.json", report.dump(2) + "\n");
    return all ? ok : validation_failed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Joint law of ruin time and claim count for a compound Poisson risk process with a threshold "
                 "dividend strategy"};
    app.set_version_flag("--version", refract::version());
    app.require_subcommand(1);

    Options o;
    std::uint64_t seed = 0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON run configuration (default: built-in reference model)")
            ->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "Directory for output files");
        sub->add_option("--seed", seed, "Random seed, overrides sim.seed");
        sub->add_option("--threads", o.threads, "Worker threads (default: all cores)")->check(CLI::PositiveNumber);
    };
    auto* roots = app.add_subcommand("roots", "Positive roots of the Lundberg equation for both premium rates");
    auto* phi = app.add_subcommand("phi", "Joint transform of ruin time and claim count for the configured capitals");
    auto* density = app.add_subcommand("density", "Joint density tables w(u, n, t) with summaries");
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimates and joint histograms");
    auto* validate = app.add_subcommand("validate", "Run the acceptance checks and report a verdict per check");
    for (auto* sub : {roots, phi, density, simulate, validate}) add_common(sub);
    validate->add_option("--only", o.only, "Run only these check ids")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        for (auto* sub : {roots, phi, density, simulate, validate})
            if (sub->count("--seed") > 0) o.seed = seed;
        if (o.threads > 0) refract::set_thread_count(o.threads);
        if (*roots) return run_roots(o);
        if (*phi) return run_phi(o);
        if (*density) return run_density(o);
        if (*simulate) return run_simulate(o);
        if (*validate) return run_validate(o);
    } catch (const refract::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const refract::UsageError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return numerical_error;
    }
    return ok;
}
