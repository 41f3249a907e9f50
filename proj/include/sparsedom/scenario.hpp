#pragma once

#include <string>
#include <vector>

#include "sparsedom/coefficient.hpp"
#include "sparsedom/data.hpp"
#include "sparsedom/weights.hpp"

namespace sparsedom {

struct ScenarioConfig {
    std::string scenario;
    int n = 2;
    int level = 5;
    CoefficientSpec coefficient;
    std::string domain = "full-cube";
    DataSpec data;
    double theta = 0.5;
    double q_l = 2.0;
    double q_h = 4.0;
    double p = 2.0;
    // 0 means "measure"
    double A = 0.0;
    double B = 0.0;
    double C_w = 0.0;
    double C_S = 0.0;
    double threshold_scale = 1.0;
    int s_depth_cap = 4;
    int trials = 20;
    WeightSpec weight;
    std::string output;  // directory under the output root; defaults to the scenario name
};

struct ScenarioInfo {
    std::string name;
    std::string statement;
    std::string summary;
};
const std::vector<ScenarioInfo>& list_scenarios();

// INI sections: scenario, grid, coefficient, domain, data, sparse, weight, output.
ScenarioConfig parse_config(const std::string& path);
ScenarioConfig parse_config_text(const std::string& text);
// Resolves every spec on a small grid; throws ConfigError.
void validate_config(const ScenarioConfig& cfg);

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ScenarioResult {
    int exit_code = 0;
    std::string output_dir;
    std::vector<CheckResult> checks;
    std::string failure;  // first failing check or the error that stopped the run
};

// SPARSEDOM_OUTPUT_ROOT, or the working directory.
std::string output_root();
// Config errors give exit 2 before anything is written.
ScenarioResult run_scenario(const ScenarioConfig& cfg, const std::string& root);

}  // namespace sparsedom
