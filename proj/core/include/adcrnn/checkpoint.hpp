// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "adcrnn/params.hpp"
#include "adcrnn/tensor.hpp"

namespace adcrnn {

using TensorArchive = std::map<std::string, Tensor>;

/// Binary named-tensor archive, little-endian throughout:
///
///   "ADCRNNCK"  u32 version  u32 count
///   repeated:   u32 name_len  name  u32 rank  u64 dims[rank]  f64 data[numel]
///
/// Entries are written in name order, so equal archives encode to equal bytes.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_archive(const TensorArchive& tensors);
TensorArchive decode_archive(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const TensorArchive& tensors);
void save_checkpoint(const std::filesystem::path& path, const ParamStore& params);
TensorArchive load_checkpoint(const std::filesystem::path& path);

}  // namespace adcrnn
