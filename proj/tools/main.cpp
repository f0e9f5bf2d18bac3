#include <CLI11.hpp>

#include <iostream>

#include "infl/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Decoherence and entanglement from branched worldlines in EM and linearized gravity"};
    app.require_subcommand(1);
    app.fallthrough();
    int workers = infl::default_workers();
    std::string out = ".";
    app.add_option("--workers", workers, "Worker thread cap (default: INFL_WORKERS, else 1)")
        ->check(CLI::PositiveNumber);
    app.add_option("--out", out, "Output directory");

    std::string config;
    auto* run = app.add_subcommand("run", "Run a scenario file end to end");
    run->add_option("config", config, "Scenario file")->required();

    infl::ScanOptions scan;
    auto* sc = app.add_subcommand("scan", "Scan F or G over the unit cube, or check the inclusion chain");
    sc->add_option("which", scan.which, "F, G or chain")->required()->check(CLI::IsMember({"F", "G", "chain"}));
    sc->add_option("--grid", scan.grid, "Points per axis")->check(CLI::Range(2, 100000));
    sc->add_option("--margin", scan.margin, "Distance kept from the cube faces");
    sc->add_option("--n", scan.samples, "Chain samples");
    sc->add_option("--seed", scan.seed, "Chain seed");

    infl::FigureOptions fig;
    auto* fg = app.add_subcommand("figure", "Emit plot-ready CSV");
    fg->add_option("which", fig.which, "fig3, fig4 or fig5")->required()->check(CLI::IsMember({"fig3", "fig4", "fig5"}));
    fg->add_option("--grid", fig.grid, "Points per slice axis")->check(CLI::Range(2, 100000));
    fg->add_option("--margin", fig.margin, "Distance kept from the slice edges");
    fg->add_option("--n", fig.samples, "fig3 samples");
    fg->add_option("--seed", fig.seed, "fig3 seed");
    fg->add_option("--x", fig.x_coord, "fig3 horizontal coordinate");
    fg->add_option("--y", fig.y_coord, "fig3 vertical coordinate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : infl::kExitUsage;
    }
    try {
        if (*run) return infl::run_command(config, out, workers, std::cout);
        if (*sc) {
            scan.workers = workers;
            return infl::scan_command(scan, out, std::cout);
        }
        return infl::figure_command(fig, out, std::cout);
    } catch (const infl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return infl::kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return infl::kExitUsage;
    }
}
