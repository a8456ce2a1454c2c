#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dgr/types.hpp"

namespace dgr {

// IDX container (big-endian dims, ubyte payload). Magic 2051 = images with
// 3 dims, 2049 = labels with 1 dim.
struct IdxData {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;
};

IdxData read_idx(const std::filesystem::path& file, std::uint32_t expected_magic);

void write_idx(const std::filesystem::path& file, std::uint32_t magic,
               const std::vector<std::uint32_t>& dims,
               const std::vector<std::uint8_t>& data);

}  // namespace dgr
