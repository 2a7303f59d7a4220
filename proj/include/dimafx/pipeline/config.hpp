#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "dimafx/data/synthetic.hpp"
#include "dimafx/pipeline/experiment.hpp"

namespace dimafx::pipeline {

inline constexpr const char* kVersion = "0.1.0";

/// Every key the run configuration accepts, with its default value.
nlohmann::json default_config();

/**
 * Resolves a run configuration: defaults, then the file, then each KEY=VALUE
 * override (dotted keys; VALUE parsed as JSON, falling back to a string).
 * Unknown keys and type mismatches raise ConfigError.
 */
nlohmann::json resolve_config(const std::filesystem::path& file, const std::vector<std::string>& overrides);

/// Typed views of a resolved configuration. All throw ConfigError on invalid values.
data::SyntheticConfig synthetic_config(const nlohmann::json& config);
ExperimentConfig experiment_config(const nlohmann::json& config);
std::filesystem::path output_dir(const nlohmann::json& config);
std::uint64_t run_seed(const nlohmann::json& config);

/// Manifest path: data.manifest if set, else <out>/cohort/manifest.json.
std::filesystem::path manifest_path(const nlohmann::json& config);

struct ExplainSettings {
    std::size_t fold = 0;
    std::size_t samples = 8;
    int permutations = 32;
    Index top_k = 3;
};
ExplainSettings explain_settings(const nlohmann::json& config);

Index top_m(const nlohmann::json& config);

} // namespace dimafx::pipeline
