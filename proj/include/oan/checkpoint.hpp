// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "oan/trainer.hpp"

namespace oan {

// "OANCK1" checkpoint, little-endian:
//   magic[6]
//   u32 len | config JSON (UTF-8)
//   u32 epoch
//   u32 n | u32 seen[n]
//   u32 n | u32 unseen[n]
//   u32 n | per epoch: u32 epoch, u32 batches, u32 dropped,
//                      f64 lr, total, cls, se, in, s_hcr, t_hcr
//   u32 n | per tensor: u32 len | name | u32 rows | u32 cols | f64 data[rows*cols]
// Tensor names are "student.<param>", "teacher.<param>" and "dictionary.keys".
inline constexpr char kCheckpointMagic[] = "OANCK1";

std::vector<char> encode_checkpoint(const TrainState& state);
/// Throws FormatError (with byte offset) or VersionError.
TrainState decode_checkpoint(const std::vector<char>& bytes);

void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
TrainState load_checkpoint(const std::filesystem::path& path);

} // namespace oan
