#ifndef FLOQPATCH_CONFIG_HPP
#define FLOQPATCH_CONFIG_HPP

// Line-oriented analysis configuration: [section] headers and key = value
// pairs, expressions in double quotes, lists comma-separated.

#include "floqpatch/common.hpp"

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace floq::app {

struct ModelConfig {
    std::string builtin;                       // e.g. "holling_tanner"; empty for DSL models
    std::vector<std::string> vars;             // DSL route
    std::vector<std::pair<std::string, double>> params;
    std::map<std::string, std::string> equations;  // var name -> RHS source
};

struct PatchConfig {
    int n = 2;
    std::vector<double> deltas;  // one or more coupling strengths
    Eigen::MatrixXd E;           // m x m, row-major in the file
};

struct CycleConfig {
    std::vector<double> seed;
    double burn_in = 200.0;
    double scan_time = 100.0;
    double max_return_time = 1000.0;
    double rtol = 1e-10;
    double atol = 1e-12;
    std::optional<int> section_index;
    std::optional<double> section_level;
};

struct AnalysisConfig {
    ModelConfig model;
    PatchConfig patch;
    CycleConfig cycle;
    std::vector<double> probes = {1e-3, 2e-3, 4e-3};
    std::vector<double> fd_eps = {1e-3, 5e-4};
    double lle_burn_in = 500.0;
    double lle_horizon = 20000.0;
    double lle_delta = 0.01;
    int urabe_samples = 4096;
    std::string alpha = "s";   // bifurcation parameter for hopf analyses
    int hopf_k = 1, hopf_k1 = 1;
    std::string source_text;   // raw config bytes
    std::string hash;          // FNV-1a of source_text, hex

    bool has_patch = false;
    bool has_model = false;
};

AnalysisConfig parse_config_text(const std::string& text, const std::string& origin);
AnalysisConfig parse_config_file(const std::string& path);

std::string fnv1a_hex(const std::string& bytes);

} // namespace floq::app

#endif
