#pragma once

#include "json.hpp"

namespace lethe {

// Command bodies, exposed so tests can drive them without a process spawn.
// Each takes the fully merged configuration (file + flag overrides), writes a
// run directory, and returns the process exit code (0 iff the manifest ends
// with status "completed").
int cmd_discriminate(const nlohmann::json& config);
int cmd_unlearn(const nlohmann::json& config);
int cmd_evaluate(const nlohmann::json& config);
int cmd_demo(const nlohmann::json& config);

int run_cli(int argc, char** argv);

}  // namespace lethe
