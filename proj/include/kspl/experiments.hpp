#pragma once

#include <string>

#include "kspl/config.hpp"

namespace kspl {

/// Executes an experiment config end to end, writing manifest.json, result
/// CSVs, and surrogate binaries under cfg.out_dir. Returns the process exit
/// code contract of the CLI: 0 success (for oracle-check, all agreements
/// hold), 1 check failure.
int run_experiment(const ExperimentConfig& cfg);

/// Prints the phi / f catalog with parameter schemas to stdout.
void print_catalog();

} // namespace kspl
