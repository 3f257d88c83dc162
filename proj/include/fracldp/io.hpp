#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fracldp/config.hpp"

namespace fracldp {

std::string sha256_hex(std::string_view data);

/// Writes to a sibling temporary file and renames it over the target.
void atomic_write(const std::filesystem::path& path, std::string_view content);

/// One compact JSON object per line, keys in insertion order.
std::string to_ndjson(const std::vector<Json>& records);

/// Flat records as CSV; the header is the union of keys in first-seen order, missing cells empty.
std::string to_csv(const std::vector<Json>& records);

struct OutputFile {
    std::string name;
    std::string sha256;
    std::size_t bytes = 0;
};

struct RunManifest {
    std::string config_hash;
    std::string version;
    double wall_clock_seconds = 0.0;
    std::vector<OutputFile> outputs;
    std::size_t blow_ups = 0;
    int exit_code = 0;
    /// Slack and tolerance values in force for the run.
    Json tolerances = Json::object();
    /// The consumed config with all defaults.
    Json config = Json::object();

    Json to_json() const;
};

}  // namespace fracldp
