#pragma once

#include <filesystem>
#include <utility>

#include "vawe/alignnet.hpp"

namespace vawe {

// Binary checkpoint: magic "VAWE", format version u32, little-endian layer
// dimensions, raw little-endian 64-bit float weight payload, then the
// training config as a key=value text block. Round-trips are bit-exact.
void save_checkpoint(const MlpParams& params, const TrainConfig& cfg,
                     const std::filesystem::path& path);

std::pair<MlpParams, TrainConfig> load_checkpoint(const std::filesystem::path& path);

}  // namespace vawe
