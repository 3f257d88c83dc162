#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fracldp/dynamics.hpp"
#include "fracldp/errors.hpp"
#include "fracldp/model.hpp"

namespace fracldp {

using Json = nlohmann::ordered_json;

struct ConfigIssue {
    std::string key;
    std::string expected;
    std::string found;
};

class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<ConfigIssue> issues);
    const std::vector<ConfigIssue>& issues() const { return issues_; }

private:
    std::vector<ConfigIssue> issues_;
};

enum class OutputFormat { ndjson, csv };

/// Model section. Noise and forcing follow the default construction with adjustable strengths;
/// reduction = "scalar" selects the one-mode linear model and ignores drift and noise.
struct ModelConfig {
    std::string reduction = "none";
    int scalar_mode = 1;
    std::optional<double> support;
    DriftSpec drift = DriftSpec::cubic_minus_linear();
    int n_modes = 4;
    double q = 3.0;
    NoiseShape shape = NoiseShape::smooth_power;
    double sigma1_scale = 0.2;
    double noise_amplitude = 0.3;
    double tail_bound = 0.0;
    double forcing_amplitude = 0.2;
};

ModelSpec build_model(const GridSpec& grid, const ModelConfig& cfg);

struct RunConfig {
    std::string experiment;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    OutputFormat format = OutputFormat::ndjson;
    int workers = 1;
    GridSpec grid = default_grid();
    TimeGrid timegrid{1.0, 128};
    ModelConfig model;
    /// Experiment parameters, validated and with every default filled in.
    Json params = Json::object();
};

const std::vector<std::string>& experiment_names();

/// Parses and validates a JSON config. Unknown keys, missing required keys, type and range
/// violations are all collected and raised together as ConfigError.
RunConfig parse_config(std::string_view text);

/// Full echo of a config with all defaults; parse_config(serialize_config(c)) == c.
Json config_to_json(const RunConfig& cfg);
std::string serialize_config(const RunConfig& cfg);

bool operator==(const RunConfig& a, const RunConfig& b);

}  // namespace fracldp
