#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "vralpr/pipeline.hpp"
#include "vralpr/synth.hpp"

namespace vralpr {

// JSON documents mirroring PipelineConfig and SceneSpec field names. Parsing
// rejects unknown keys and ill-typed values with ConfigError.

PipelineConfig pipeline_config_from_json(std::string_view text);
std::string pipeline_config_to_json(const PipelineConfig& cfg);

/// Relative source, output and dump paths are resolved against the
/// directory holding the file.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

SceneSpec scene_spec_from_json(std::string_view text);
std::string scene_spec_to_json(const SceneSpec& spec);

}  // namespace vralpr
