// runner.hpp — experiment orchestration: dispatch on the configured kind,
// produce labeled tables, named scalar results and pass/fail messages, and
// write CSV / plot-data / manifest files.

#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "experiments/config.hpp"
#include "experiments/table.hpp"

namespace polaron {

struct RunOutput {
    bool ok = true;
    std::vector<std::pair<std::string, Table>> tables;
    std::map<std::string, double> scalars;
    std::vector<std::string> messages;

    double scalar(const std::string& key) const;
    void note(const std::string& line) { messages.push_back(line); }
    void check(const std::string& name, double value, double bound);  // value <= bound
};

// Built-in defaults for a subcommand; overridable through the config file.
ExperimentConfig default_config(const std::string& kind);

// Runs the experiment named by experiment.kind. Deterministic given
// experiment.seed; experiment.threads bounds the sweep worker count.
RunOutput run_experiment(const ExperimentConfig& cfg);

// Writes manifest.txt, one CSV per table and x/y plot-data files.
void write_outputs(const RunOutput& out, const ExperimentConfig& cfg,
                   const std::string& out_dir);

}  // namespace polaron
