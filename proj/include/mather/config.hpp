#pragma once

// Run configuration: one JSON document, schema_version 1.
//
//   {
//     "schema_version": 1,
//     "model":       { "amplitude": 1.0 },
//     "integrator":  { "dt": 1e-3, "max_T": 1000 },
//     "variational": { "nodes": 64, "restarts": 2, "max_iters": 4000, "grad_tol": 1e-6,
//                      "seed": 1, "q_max": 2, "period_scale": 20, "max_dt": 0.02 },
//     "grid":        { "h_box": [-2, 2, -2, 2], "steps": 33 },
//     "tolerances":  { "corner_gap_tol": 0.05, "subdiff_tol": 0.05,
//                      "invariance_tol": 1e-5, "flat_tol": 2e-3 },
//     "output":      { "directory": "out", "format": "csv" }
//   }
//
// Every key is optional; missing keys take the defaults above. Unknown keys
// are rejected so that typos do not silently fall back to defaults.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>

#include <json.hpp>

#include "mather/convex.hpp"
#include "mather/errors.hpp"
#include "mather/io.hpp"
#include "mather/loop.hpp"
#include "mather/torus.hpp"

namespace mather {

/// Malformed or invalid configuration; the message names the field.
class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

enum class OutputFormat { csv, json };

struct RunConfig {
    struct Model {
        double amplitude = 1.0;
    } model;
    struct Integrator {
        double dt = 1e-3;
        double max_T = 1000.0;
    } integrator;
    struct Variational {
        std::size_t nodes = 64;
        int restarts = 2;
        int max_iters = 4000;
        double grad_tol = 1e-6;
        std::uint64_t seed = 1;
        int q_max = 2;
        double period_scale = 20.0;
        double max_dt = 0.02;
    } variational;
    struct Grid {
        double h1_min = -2.0;
        double h1_max = 2.0;
        double h2_min = -2.0;
        double h2_max = 2.0;
        std::size_t steps = 33;
    } grid;
    struct Tolerances {
        double corner_gap_tol = 5e-2;
        double subdiff_tol = 5e-2;
        double invariance_tol = 1e-5;
        double flat_tol = 2e-3;
    } tolerances;
    struct Output {
        std::string directory = "out";
        OutputFormat format = OutputFormat::csv;
    } output;

    void validate() const;

    MagneticModel magnetic_model() const { return MagneticModel(model.amplitude); }

    BetaOptions beta_options() const {
        BetaOptions b;
        b.q_max = variational.q_max;
        b.period_scale = variational.period_scale;
        b.nodes = variational.nodes;
        b.max_dt = variational.max_dt;
        b.restarts = variational.restarts;
        b.seed = variational.seed;
        b.minimize.max_iters = variational.max_iters;
        b.minimize.grad_tol = variational.grad_tol;
        return b;
    }

    GridBox grid_box() const {
        return {grid.h1_min, grid.h1_max, grid.h2_min, grid.h2_max, grid.steps, grid.steps};
    }

    /// Canonical JSON of the resolved configuration (sorted keys).
    nlohmann::json to_json() const;

    /// FNV-1a of the canonical JSON.
    std::uint64_t hash() const { return fnv1a64(to_json().dump()); }
};

inline void RunConfig::validate() const {
    auto need = [](bool ok, const char* field, const char* what) {
        if (!ok) throw ConfigError(std::string(field) + ": " + what);
    };
    need(std::isfinite(model.amplitude) && model.amplitude > 0.0, "model.amplitude", "must be > 0");
    need(integrator.dt > 0.0, "integrator.dt", "must be > 0");
    need(integrator.max_T > 0.0, "integrator.max_T", "must be > 0");
    need(variational.nodes >= DiscreteLoop::kMinNodes, "variational.nodes", "must be >= 8");
    need(variational.restarts >= 1, "variational.restarts", "must be >= 1");
    need(variational.max_iters >= 1, "variational.max_iters", "must be >= 1");
    need(variational.grad_tol > 0.0, "variational.grad_tol", "must be > 0");
    need(variational.q_max >= 1, "variational.q_max", "must be >= 1");
    need(variational.period_scale > 0.0, "variational.period_scale", "must be > 0");
    need(variational.max_dt > 0.0, "variational.max_dt", "must be > 0");
    need(grid.h1_max > grid.h1_min && grid.h2_max > grid.h2_min, "grid.h_box", "must be [h1_min, h1_max, h2_min, h2_max] with min < max");
    need(grid.steps >= 8, "grid.steps", "must be >= 8");
    need(tolerances.corner_gap_tol > 0.0, "tolerances.corner_gap_tol", "must be > 0");
    need(tolerances.subdiff_tol > 0.0, "tolerances.subdiff_tol", "must be > 0");
    need(tolerances.invariance_tol > 0.0, "tolerances.invariance_tol", "must be > 0");
    need(tolerances.flat_tol > 0.0, "tolerances.flat_tol", "must be > 0");
    need(!output.directory.empty(), "output.directory", "must not be empty");
}

inline nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["model"] = {{"amplitude", model.amplitude}};
    j["integrator"] = {{"dt", integrator.dt}, {"max_T", integrator.max_T}};
    j["variational"] = {{"nodes", variational.nodes},         {"restarts", variational.restarts},
                        {"max_iters", variational.max_iters}, {"grad_tol", variational.grad_tol},
                        {"seed", variational.seed},           {"q_max", variational.q_max},
                        {"period_scale", variational.period_scale}, {"max_dt", variational.max_dt}};
    j["grid"] = {{"h_box", {grid.h1_min, grid.h1_max, grid.h2_min, grid.h2_max}}, {"steps", grid.steps}};
    j["tolerances"] = {{"corner_gap_tol", tolerances.corner_gap_tol},
                       {"subdiff_tol", tolerances.subdiff_tol},
                       {"invariance_tol", tolerances.invariance_tol},
                       {"flat_tol", tolerances.flat_tol}};
    j["output"] = {{"directory", output.directory},
                   {"format", output.format == OutputFormat::csv ? "csv" : "json"}};
    return j;
}

namespace detail {

inline std::string line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

class Reader {
public:
    Reader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        const auto& v = j_.at(key);
        const std::string field = path_.empty() ? key : path_ + "." + key;
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) throw ConfigError(field + ": expected a number");
                out = v.get<double>();
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer()) throw ConfigError(field + ": expected an integer");
                if (std::is_unsigned_v<T> && !v.is_number_unsigned() && v.get<long long>() < 0) {
                    throw ConfigError(field + ": expected a non-negative integer");
                }
                out = v.get<T>();
            } else {
                if (!v.is_string()) throw ConfigError(field + ": expected a string");
                out = v.get<std::string>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(field + ": " + e.what());
        }
    }

    Reader child(const char* key) {
        seen_.insert(key);
        static const nlohmann::json empty = nlohmann::json::object();
        return Reader(j_.contains(key) ? j_.at(key) : empty, path_.empty() ? key : path_ + "." + key);
    }

    const nlohmann::json* raw(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void reject_unknown() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) {
                throw ConfigError((path_.empty() ? it.key() : path_ + "." + it.key()) + ": unknown key");
            }
        }
    }

private:
    std::string where() const { return path_.empty() ? "config" : path_; }

    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace detail

/// Parses a config document; keys it omits keep their values from `defaults`.
inline RunConfig parse_config(const std::string& text, const RunConfig& defaults = RunConfig{}) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config: JSON syntax error at " + detail::line_col(text, e.byte > 0 ? e.byte - 1 : 0) +
                          ": " + e.what());
    }
    RunConfig c = defaults;
    detail::Reader root(j, "");
    int version = 1;
    root.get("schema_version", version);
    if (version != 1) throw ConfigError("schema_version: unsupported version " + std::to_string(version));

    auto model = root.child("model");
    model.get("amplitude", c.model.amplitude);
    model.reject_unknown();

    auto integ = root.child("integrator");
    integ.get("dt", c.integrator.dt);
    integ.get("max_T", c.integrator.max_T);
    integ.reject_unknown();

    auto var = root.child("variational");
    var.get("nodes", c.variational.nodes);
    var.get("restarts", c.variational.restarts);
    var.get("max_iters", c.variational.max_iters);
    var.get("grad_tol", c.variational.grad_tol);
    var.get("seed", c.variational.seed);
    var.get("q_max", c.variational.q_max);
    var.get("period_scale", c.variational.period_scale);
    var.get("max_dt", c.variational.max_dt);
    var.reject_unknown();

    auto grid = root.child("grid");
    if (const auto* box = grid.raw("h_box")) {
        if (!box->is_array() || box->size() != 4) throw ConfigError("grid.h_box: expected [h1_min, h1_max, h2_min, h2_max]");
        for (const auto& v : *box) {
            if (!v.is_number()) throw ConfigError("grid.h_box: expected numbers");
        }
        c.grid.h1_min = (*box)[0].get<double>();
        c.grid.h1_max = (*box)[1].get<double>();
        c.grid.h2_min = (*box)[2].get<double>();
        c.grid.h2_max = (*box)[3].get<double>();
    }
    grid.get("steps", c.grid.steps);
    grid.reject_unknown();

    auto tol = root.child("tolerances");
    tol.get("corner_gap_tol", c.tolerances.corner_gap_tol);
    tol.get("subdiff_tol", c.tolerances.subdiff_tol);
    tol.get("invariance_tol", c.tolerances.invariance_tol);
    tol.get("flat_tol", c.tolerances.flat_tol);
    tol.reject_unknown();

    auto out = root.child("output");
    out.get("directory", c.output.directory);
    std::string format = c.output.format == OutputFormat::csv ? "csv" : "json";
    out.get("format", format);
    if (format == "csv") {
        c.output.format = OutputFormat::csv;
    } else if (format == "json") {
        c.output.format = OutputFormat::json;
    } else {
        throw ConfigError("output.format: expected \"csv\" or \"json\"");
    }
    out.reject_unknown();
    root.reject_unknown();

    c.validate();
    return c;
}

inline RunConfig load_config(const std::string& path, const RunConfig& defaults = RunConfig{}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), defaults);
}

}  // namespace mather
