#include "refract/config.hpp"

#include "refract/errors.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace refract {

using nlohmann::json;

namespace {

void allow_keys(const json& j, const std::string& block, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw ConfigError(block + ": expected an object");
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) throw ConfigError(block + ": unknown key '" + it.key() + "'");
}

template <class T>
T get(const json& j, const std::string& block, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(block + "." + key + ": wrong type");
    }
}

template <class T>
T require(const json& j, const std::string& block, const char* key) {
    if (!j.contains(key)) throw ConfigError(block + ": missing key '" + key + "'");
    return get<T>(j, block, key, T{});
}

}  // namespace

ClaimDistribution claims_from_json(const json& j, const std::filesystem::path& base_dir) {
    const std::string block = "model.claims";
    if (!j.is_object()) throw ConfigError(block + ": expected an object");
    const auto type = require<std::string>(j, block, "type");
    try {
        if (type == "exponential") {
            allow_keys(j, block, {"type", "rate"});
            return ClaimDistribution::exponential(require<double>(j, block, "rate"));
        }
        if (type == "erlang") {
            allow_keys(j, block, {"type", "shape", "rate"});
            return ClaimDistribution::erlang(require<int>(j, block, "shape"), require<double>(j, block, "rate"));
        }
        if (type == "mixture") {
            allow_keys(j, block, {"type", "weights", "rates"});
            return ClaimDistribution::mixture(require<std::vector<double>>(j, block, "weights"),
                                              require<std::vector<double>>(j, block, "rates"));
        }
        if (type == "tabulated") {
            allow_keys(j, block, {"type", "file", "step", "samples", "x", "f"});
            if (j.contains("x"))
                return ClaimDistribution(TabulatedDensity{require<std::vector<double>>(j, block, "x"),
                                                          require<std::vector<double>>(j, block, "f")});
            if (j.contains("file")) {
                std::filesystem::path p = require<std::string>(j, block, "file");
                if (p.is_relative()) p = base_dir / p;
                return ClaimDistribution::load_csv(p);
            }
            return ClaimDistribution::tabulated(require<double>(j, block, "step"),
                                                require<std::vector<double>>(j, block, "samples"));
        }
    } catch (const DomainError& e) {
        throw ConfigError(block + ": " + e.what());
    } catch (const UsageError& e) {
        throw ConfigError(block + ": " + e.what());
    }
    throw ConfigError(block + ".type: expected exponential, erlang, mixture or tabulated, got '" + type + "'");
}

json claims_to_json(const ClaimDistribution& d) {
    struct V {
        json operator()(const Exponential& e) const { return {{"type", "exponential"}, {"rate", e.rate}}; }
        json operator()(const Erlang& e) const { return {{"type", "erlang"}, {"shape", e.shape}, {"rate", e.rate}}; }
        json operator()(const ExponentialMixture& m) const {
            return {{"type", "mixture"}, {"weights", m.weights}, {"rates", m.rates}};
        }
        json operator()(const TabulatedDensity& t) const { return {{"type", "tabulated"}, {"x", t.x}, {"f", t.f}}; }
    };
    return std::visit(V{}, d.law());
}

RunConfig RunConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
    allow_keys(j, "config", {"model", "transform", "grid", "sim", "histogram", "u", "m"});
    if (!j.contains("model")) throw ConfigError("config: missing 'model' block");
    const json& mj = j.at("model");
    allow_keys(mj, "model", {"lambda", "c1", "c2", "b", "claims"});
    if (!mj.contains("claims")) throw ConfigError("model: missing 'claims' block");
    RiskModel model{require<double>(mj, "model", "lambda"), require<double>(mj, "model", "c1"),
                    require<double>(mj, "model", "c2"), require<double>(mj, "model", "b"),
                    claims_from_json(mj.at("claims"), base_dir)};
    model.validate();

    TransformParams tp{0.5, 1.0};
    if (j.contains("transform")) {
        const json& t = j.at("transform");
        allow_keys(t, "transform", {"delta", "r"});
        tp.delta = get<double>(t, "transform", "delta", tp.delta);
        tp.r = get<double>(t, "transform", "r", tp.r);
    }
    tp.validate();

    RunConfig cfg{std::move(model), tp, {}, {}, {}, {}, {}};
    if (j.contains("grid")) {
        const json& g = j.at("grid");
        allow_keys(g, "grid", {"t_max", "time_points", "amount_step", "phi_step", "n_max"});
        cfg.grid.t_max = get<double>(g, "grid", "t_max", cfg.grid.t_max);
        cfg.grid.time_points = get<std::size_t>(g, "grid", "time_points", cfg.grid.time_points);
        cfg.grid.amount_step = get<double>(g, "grid", "amount_step", cfg.grid.amount_step);
        cfg.grid.phi_step = get<double>(g, "grid", "phi_step", cfg.grid.phi_step);
        cfg.grid.n_max = get<int>(g, "grid", "n_max", cfg.grid.n_max);
    }
    if (!(cfg.grid.t_max > 0.0)) throw ConfigError("grid.t_max must be > 0");
    if (cfg.grid.time_points < 10) throw ConfigError("grid.time_points must be >= 10");
    if (!(cfg.grid.amount_step > 0.0)) throw ConfigError("grid.amount_step must be > 0");
    if (!(cfg.grid.phi_step > 0.0)) throw ConfigError("grid.phi_step must be > 0");
    if (cfg.grid.n_max < 1 || cfg.grid.n_max > 200) throw ConfigError("grid.n_max must lie in [1, 200]");

    if (j.contains("sim")) {
        const json& s = j.at("sim");
        allow_keys(s, "sim", {"paths", "seed", "horizon", "block_size"});
        cfg.sim.paths = get<std::uint64_t>(s, "sim", "paths", cfg.sim.paths);
        cfg.sim.seed = get<std::uint64_t>(s, "sim", "seed", cfg.sim.seed);
        cfg.sim.horizon = get<double>(s, "sim", "horizon", cfg.sim.horizon);
        cfg.sim.block_size = get<std::uint64_t>(s, "sim", "block_size", cfg.sim.block_size);
    }
    if (cfg.sim.paths == 0) throw ConfigError("sim.paths must be > 0");
    if (!(cfg.sim.horizon > 0.0)) throw ConfigError("sim.horizon must be > 0");
    if (cfg.sim.block_size == 0) throw ConfigError("sim.block_size must be > 0");

    if (j.contains("histogram")) {
        const json& h = j.at("histogram");
        allow_keys(h, "histogram", {"paths", "t_end", "bins", "n_max"});
        cfg.histogram.paths = get<std::uint64_t>(h, "histogram", "paths", cfg.histogram.paths);
        cfg.histogram.t_end = get<double>(h, "histogram", "t_end", cfg.histogram.t_end);
        cfg.histogram.bins = get<std::size_t>(h, "histogram", "bins", cfg.histogram.bins);
        cfg.histogram.n_max = get<int>(h, "histogram", "n_max", cfg.histogram.n_max);
    }
    if (cfg.histogram.paths == 0 || !(cfg.histogram.t_end > 0.0) || cfg.histogram.bins == 0 ||
        cfg.histogram.n_max < 1)
        throw ConfigError("histogram: paths, t_end, bins and n_max must be positive");

    cfg.u = get<std::vector<double>>(j, "config", "u", {});
    for (double u : cfg.u)
        if (!(u >= 0.0)) throw ConfigError("u: initial capitals must be >= 0");
    cfg.m = get<std::vector<int>>(j, "config", "m", {});
    for (int m : cfg.m)
        if (m < 1 || m > cfg.grid.n_max) throw ConfigError("m: claim counts must lie in [1, grid.n_max]");
    return cfg;
}

RunConfig RunConfig::parse(const std::string& text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return from_json(j, base_dir);
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.parent_path());
}

json RunConfig::to_json() const {
    return {
        {"model",
         {{"lambda", model.lambda}, {"c1", model.c1}, {"c2", model.c2}, {"b", model.b},
          {"claims", claims_to_json(model.claims)}}},
        {"transform", {{"delta", transform.delta}, {"r", transform.r}}},
        {"grid",
         {{"t_max", grid.t_max},
          {"time_points", grid.time_points},
          {"amount_step", grid.amount_step},
          {"phi_step", grid.phi_step},
          {"n_max", grid.n_max}}},
        {"sim", {{"paths", sim.paths}, {"seed", sim.seed}, {"horizon", sim.horizon}, {"block_size", sim.block_size}}},
        {"histogram",
         {{"paths", histogram.paths}, {"t_end", histogram.t_end}, {"bins", histogram.bins}, {"n_max", histogram.n_max}}},
        {"u", u},
        {"m", m},
    };
}

RunConfig reference_config() {
    return RunConfig::from_json(json{
        {"model", {{"lambda", 1.0}, {"c1", 1.5}, {"c2", 1.2}, {"b", 2.0}, {"claims", {{"type", "exponential"}, {"rate", 1.0}}}}},
        {"transform", {{"delta", 0.5}, {"r", 0.9}}},
        {"u", {1.0, 3.0}},
        {"m", {1, 2, 3}},
    });
}

}  // namespace refract
