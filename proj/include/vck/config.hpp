#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vck/evolve.hpp"

namespace vck {

// Run configuration parsed from a line-oriented `key = value` file. Unknown
// keys are rejected; all invariants are checked eagerly on parse.
struct RunConfig {
    double v_F = 1.0, v_E = 2.0, y_L = 1.0;
    double a_star = 1.0, y_star = 1.0, c = 0.0;
    int n_v = 64, n_y = 128;
    double y_max = 8.0;
    double dt = 0.0; // 0 = auto (cfl_safety * dv / max|J|)
    double t_end = 10.0;
    std::string scheme = "imex";
    double cfl_safety = 0.5;
    std::string weight_kind = "polynomial";
    double weight_k = 2.0;
    double weight_alpha = 0.5;
    bool twist = false;
    uint64_t seed = 1;
    int n_neurons = 10000;
    double harris_T = 2.0;
    std::vector<double> harris_eps_ladder{0.2, 0.1, 0.05};
    std::string out_dir = "out";

    std::vector<std::string> warnings; // populated during validation

    ModelParams model_params() const;
    WeightSpec weight_spec() const;
    Scheme scheme_enum() const;
    EvolveConfig evolve_config() const;
};

// Throws std::runtime_error with the offending line or key on failure.
// VCK_OUT_DIR in the environment overrides out_dir.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<memory>");

// Canonical serialization; parse_config_text(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& cfg);

} // namespace vck
