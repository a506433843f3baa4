#pragma once

#include <string>

#include "config.hpp"

namespace qrelax::cli {

/// Where a command writes: <dir>/<prefix>.csv and <dir>/<prefix>_summary.json, plus
/// <dir>/<prefix>_<part>.csv for commands with more than one table.
struct Output {
    std::string dir = ".";
    std::string prefix;

    std::string path(const std::string& suffix) const;
};

void run_simulate(const json& config, const Output& out);
void run_hseries(const json& config, const Output& out);
void run_scaling_modes(const json& config, const Output& out);
void run_scaling_cells(const json& config, const Output& out);
void run_recurrence(const json& config, const Output& out);
void run_typicality(const json& config, const Output& out);
void run_signal(const json& config, const Output& out);
void run_cosmo(const json& config, const Output& out);

}  // namespace qrelax::cli
