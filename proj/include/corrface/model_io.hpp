#pragma once

// Binary model container.
//
//   offset  field
//   0       magic "CFRM"
//   4       u32 format version (currently 1)
//   8       u8 method (0 CCA, 1 PLS, 2 PCA), u8 k_clamped, u16 reserved
//   12      f64 alpha
//   20      u64 k, u64 k_requested, u64 d_x, u64 d_y
//   52      u32 region length, region bytes (UTF-8)
//           u32 tie count, u64 tie indices
//           f64 rho[k], x_mean[d_x], y_mean[d_y | 0 for PCA]
//           f64 W_x (d_x x k, row-major), W_y (d_y x k, row-major)
//           u64 FNV-1a checksum of all preceding bytes
//
// All integers and floats are little-endian regardless of host order.

#include "corrface/subspace.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace corrface {

inline constexpr std::uint32_t kModelFormatVersion = 1;

std::vector<std::uint8_t> serialize_model(const PairedSubspaceModel& model);
PairedSubspaceModel deserialize_model(const std::vector<std::uint8_t>& bytes);

void save_model(const PairedSubspaceModel& model,
                const std::filesystem::path& path);
PairedSubspaceModel load_model(const std::filesystem::path& path);

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(const std::string& text);

}  // namespace corrface
