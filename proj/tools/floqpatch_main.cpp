// Command-line front end. Links only the C API of the shared library.

#include <floqpatch.h>

#include <CLI11.hpp>

#include <string>

int main(int argc, char** argv)
{
    CLI::App app{std::string("floqpatch ") + fq_version() +
                 " - destabilization analysis of synchronous periodic solutions in patch models"};
    app.require_subcommand(1);

    std::string out_dir = "out";
    double tol = 0.0;
    bool fixed_step = false;
    bool strict = false;
    std::string probes;
    std::string grid;
    bool quiet = false;
    app.add_option("--out", out_dir, "output directory for artifacts")->capture_default_str();
    app.add_option("--tol", tol, "override the cycle-search relative tolerance");
    app.add_flag("--fixed-step", fixed_step, "fixed-step RK4 fallback (reproducibility)");
    app.add_flag("--strict", strict, "exit 4 on an inconclusive verdict");
    app.add_option("--probes", probes, "coupling probe list, e.g. \"1e-3,2e-3,4e-3\"");
    app.add_flag("--quiet", quiet, "suppress the stdout summary");

    struct Sub {
        const char* name;
        const char* help;
        bool needs_config;
    };
    const Sub subs[] = {
        {"cycle", "locate a limit cycle and report period/multipliers", true},
        {"period", "P'(0) of the coupling-perturbed period function (both routes)", true},
        {"hopf", "planar Hopf report: equilibrium, Jacobian, C1, conditions", true},
        {"floquet", "Floquet multipliers of the coupled patch system", true},
        {"lle", "largest Lyapunov exponent of the synchronous-cycle linearization", true},
        {"verdict", "predict (P'(0)) and verify (multipliers, LLE) destabilization", true},
        {"sweep", "multiplier/LLE sweep over delta or an E entry", true},
        {"example1", "reproduce the large-amplitude two-patch Holling-Tanner example", false},
        {"example2", "reproduce the weak-focus two-patch Holling-Tanner example", false},
    };

    std::string config_path;
    for (const Sub& s : subs) {
        auto* c = app.add_subcommand(s.name, s.help);
        c->fallthrough();  // global flags may follow the subcommand
        if (s.needs_config)
            c->add_option("config", config_path, "analysis configuration file")->required();
        if (std::string(s.name) == "sweep")
            c->add_option("--grid", grid, "sweep grid: delta=v1,v2,... or E12=start:stop:count");
    }

    CLI11_PARSE(app, argc, argv);

    fq_run_options opts;
    fq_run_options_init(&opts);
    opts.out_dir = out_dir.c_str();
    opts.tol = tol;
    opts.fixed_step = fixed_step ? 1 : 0;
    opts.strict = strict ? 1 : 0;
    if (!probes.empty()) opts.probes = probes.c_str();
    if (!grid.empty()) opts.grid = grid.c_str();
    opts.quiet = quiet ? 1 : 0;

    const std::string sub = app.get_subcommands().front()->get_name();
    return fq_run(sub.c_str(), config_path.c_str(), &opts);
}
