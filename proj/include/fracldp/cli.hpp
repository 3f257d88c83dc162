#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fracldp/config.hpp"
#include "fracldp/io.hpp"

namespace fracldp {

enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1,
    exit_config_invalid = 2,
    exit_validation_failed = 3,
    exit_blow_up_dominated = 4,
    exit_not_converged = 5,
};

std::string artifact_version();

/// Records produced by one experiment, before they are written.
struct ExperimentOutput {
    /// File stem -> records; written as <stem>.ndjson or <stem>.csv by the configured format.
    std::vector<std::pair<std::string, std::vector<Json>>> tables;
    /// Extra CSV matrices written regardless of the format (name includes the extension).
    std::vector<std::pair<std::string, std::string>> extra_files;
    std::size_t blow_ups = 0;
    Json tolerances = Json::object();
    int exit_code = exit_ok;
    std::string message;
};

/// Runs the configured experiment without touching the filesystem.
ExperimentOutput run_experiment(const RunConfig& cfg);

struct RunOutcome {
    int exit_code = exit_ok;
    std::string message;
    std::vector<std::filesystem::path> files;
    RunManifest manifest;
};

/// run_experiment plus persistence: every output file, then manifest.json referencing all of them
/// with SHA-256 checksums. Errors are mapped to exit codes rather than thrown.
RunOutcome run(const RunConfig& cfg);

/// Entry point of the command-line tool.
int cli_main(int argc, char** argv);

}  // namespace fracldp
