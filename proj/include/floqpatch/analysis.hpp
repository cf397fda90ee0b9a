#ifndef FLOQPATCH_ANALYSIS_HPP
#define FLOQPATCH_ANALYSIS_HPP

// Analysis orchestration behind the command-line front end: builds models
// from configuration, runs the requested analysis and writes artifacts
// (structured-text summaries, CSV data, plot scripts).

#include "floqpatch/config.hpp"
#include "floqpatch/cycles.hpp"
#include "floqpatch/patch.hpp"

#include <optional>
#include <ostream>
#include <string>

namespace floq::app {

struct RunOptions {
    std::string out_dir = "out";
    std::optional<double> tol;                    // overrides the cycle rtol
    bool fixed_step = false;
    bool strict = false;                          // inconclusive verdicts exit 4
    std::optional<std::vector<double>> probes;    // overrides [analysis] probes
    std::string grid;                             // sweep grid, e.g. "delta=1e-3,2e-3" or "E12=0:10:11"
    std::ostream* log = nullptr;                  // summary sink in addition to the file
};

// Exit status: 0 ok, 2 config error, 3 numerical/analysis error,
// 4 inconclusive verdict under --strict.
int run(const std::string& subcommand, const std::string& config_path, const RunOptions& opts);

// The canned reproduction configs used by the example1/example2 subcommands.
const std::string& example1_config();
const std::string& example2_config();

kinetics::KineticSystem build_model(const AnalysisConfig& cfg);
cycles::LimitCycle build_cycle(const kinetics::KineticSystem& ks, const AnalysisConfig& cfg,
                               const RunOptions& opts);

// Orbit CSV + equilibrium CSV + a gnuplot script referencing them.
void emit_orbit_plot(const cycles::LimitCycle& cycle, const Eigen::VectorXd& equilibrium,
                     const std::string& out_dir, const std::string& stem);
// LLE running-estimate trace + script.
void emit_lle_trace(const patch::LleResult& lle, const std::string& out_dir,
                    const std::string& stem);

const char* version();

} // namespace floq::app

#endif
