#pragma once

#include "attnlens/model/transformer.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace attnlens::model {

inline constexpr std::string_view kCheckpointVersion = "attnlens-model/1";

// Self-describing JSON: version, config, vocabulary (in id order) and the
// flat parameter vector. Doubles are written with round-trip precision.
std::string checkpoint_to_json(const Transformer& model);
Transformer checkpoint_from_json(std::string_view text);

void save_checkpoint(const Transformer& model, const std::filesystem::path& path);
Transformer load_checkpoint(const std::filesystem::path& path);

} // namespace attnlens::model
