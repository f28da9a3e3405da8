// polaron_lab — command-line front end for the polaron lab shared library.
//
// Every subcommand runs one experiment kind; results land in --out as CSV,
// plot-data and a manifest. Without --config the built-in defaults for the
// subcommand are used.

#include "CLI11.hpp"

#include <cstdio>
#include <string>
#include <vector>

#include "polaron/polaron.h"

int main(int argc, char** argv) {
    CLI::App app{"polaron lab: Hartree / Bogoliubov / Fock numerics"};
    app.require_subcommand(1);

    const std::vector<std::string> kinds = {
        "check-identities",  "hartree-study",        "bogoliubov-study",
        "z0-study",          "bf-convergence",       "infinite-volume-study",
        "tracer-localization", "polaron-dispersion", "excitation-growth"};

    std::string config_path;
    std::string out_dir = "polaron_out";
    long seed = -1;
    int threads = -1;
    bool print_config = false;

    std::vector<CLI::App*> subs;
    for (const auto& kind : kinds) {
        CLI::App* sub = app.add_subcommand(kind, "run the " + kind + " experiment");
        sub->add_option("--config", config_path, "config file (key = value sections)");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "override experiment.seed");
        sub->add_option("--threads", threads, "override experiment.threads");
        sub->add_flag("--print-config", print_config, "print the effective default config and exit");
        subs.push_back(sub);
    }

    CLI11_PARSE(app, argc, argv);

    std::string kind;
    for (std::size_t i = 0; i < kinds.size(); ++i)
        if (subs[i]->parsed()) kind = kinds[i];

    if (print_config) {
        std::vector<char> buf(1 << 16);
        if (plc_experiment_default_config(kind.c_str(), buf.data(), buf.size()) != PLC_OK) {
            std::fprintf(stderr, "error: %s\n", plc_last_error());
            return 2;
        }
        std::fputs(buf.data(), stdout);
        return 0;
    }

    plc_status st;
    if (!config_path.empty()) {
        st = plc_experiment_run_file(config_path.c_str(), out_dir.c_str(), seed, threads);
    } else {
        std::vector<char> buf(1 << 16);
        if (plc_experiment_default_config(kind.c_str(), buf.data(), buf.size()) != PLC_OK) {
            std::fprintf(stderr, "error: %s\n", plc_last_error());
            return 2;
        }
        st = plc_experiment_run_text(buf.data(), out_dir.c_str(), seed, threads);
    }

    if (st == PLC_OK) {
        std::printf("%s: ok (outputs in %s)\n", kind.c_str(), out_dir.c_str());
        return 0;
    }
    if (st == PLC_ERR_CHECKS_FAILED) {
        std::fprintf(stderr, "%s: checks failed\n%s\n", kind.c_str(), plc_last_error());
        return 1;
    }
    std::fprintf(stderr, "%s: error: %s\n", kind.c_str(), plc_last_error());
    return 2;
}
