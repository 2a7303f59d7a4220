#pragma once

#include <filesystem>
#include <string>

#include "dimafx/model/params.hpp"

namespace dimafx::model {

inline constexpr int kCheckpointVersion = 1;

/// JSON checkpoint: format tag, version, config, init seed and every
/// parameter as {name, shape, row-major data}. Doubles round-trip bit-exactly.
std::string checkpoint_json(const ModelParams& model);
ModelParams parse_checkpoint(const std::string& text);

void save_checkpoint(const ModelParams& model, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

/// Bitwise equality of configs and every parameter array.
bool identical(const ModelParams& a, const ModelParams& b);

} // namespace dimafx::model
