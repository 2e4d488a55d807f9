#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "dialogen/neural/autodiff.hpp"

namespace dialogen::nn {

// Binary layout: 8-byte magic, u32 little-endian manifest length, JSON
// manifest, then every array as little-endian float64 in row-major order.
// The manifest holds {"version", "header", "arrays": [{name, rows, cols, offset}]}
// with offsets counted in doubles from the start of the data block.
inline constexpr char kCheckpointMagic[8] = {'D', 'L', 'G', 'C', 'K', 'P', 'T', '1'};
inline constexpr int kCheckpointVersion = 1;

struct CheckpointFile {
  nlohmann::json header;
  std::map<std::string, Mat> arrays;
};

// Writes to a temporary file and renames it into place.
void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& header,
                     std::span<const ParamStore* const> stores);
CheckpointFile read_checkpoint(const std::filesystem::path& path);

// Copies stored arrays into params by name. Every parameter must be present
// with a matching shape.
void restore_params(ParamStore& params, const CheckpointFile& file);

}  // namespace dialogen::nn
