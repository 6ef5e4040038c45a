#pragma once

// NET1 model container (little-endian):
//   "NET1" | u32 count | count x (u32 name_len | name | u32 rank | u32 dims[rank]
//   | f32 payload)
// The first tensor, "__config__", holds the MiniSpawnConfig integers so a
// checkpoint is self-describing. Parameters and BN running statistics follow.

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "sscvox/net/mini_spawn.hpp"

namespace sscvox::net {

std::string encode_checkpoint(MiniSpawn& net);
std::unique_ptr<MiniSpawn> decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, MiniSpawn& net);
std::unique_ptr<MiniSpawn> load_checkpoint(const std::filesystem::path& path);

}  // namespace sscvox::net
