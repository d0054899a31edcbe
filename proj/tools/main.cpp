#include "commands.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <iostream>

int main(int argc, char** argv)
{
    using namespace sbie::cli;

    CLI::App app{"Boundary integral operators and solvers on suspensions of spheres"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    int threads = 0;
    std::uint64_t seed = 0;
    bool seed_given = false;

    const std::vector<std::pair<std::string, std::string>> commands{
        {"transform", "spherical harmonic transform diagnostics"},
        {"spectra", "eigenvalue tables of the layer operators"},
        {"convergence", "near-singular and smooth quadrature error sweeps"},
        {"solve", "solve one boundary integral problem"},
        {"bench", "near-path and composite-apply timings"},
        {"simulate", "squirmer or magnetic bead dynamics"}};
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "JSON run configuration (defaults when omitted)")
            ->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory")->capture_default_str();
        sub->add_option("--threads", threads, "worker thread cap")->check(CLI::PositiveNumber);
        sub->add_option_function<std::uint64_t>(
            "--seed",
            [&](const std::uint64_t& s) {
                seed = s;
                seed_given = true;
            },
            "override the configured seed");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = config_path.empty() ? parse_config(nlohmann::json{{"version", kConfigVersion}})
                                            : load_config(config_path);
        if (seed_given)
            cfg.seed = seed;
        if (threads > 0)
            omp_set_num_threads(threads);
        return run_command(app.get_subcommands().front()->get_name(), cfg, out_dir, std::cout);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeFailure;
    }
}
