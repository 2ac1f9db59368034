#pragma once

#include <string>

#include "segfair/voxel_mask.hpp"

namespace segfair {

enum class MaskFormat { RawV1, NiftiSubset };

// Loads a binary mask. Stored values are binarized with "value > 0" (label
// maps hold integer class ids, so any positive id counts as occupied).
//
// raw-v1 layout (little-endian):
//   bytes 0-3    magic "SFM1"
//   bytes 4-15   dims, 3 x u32
//   bytes 16-39  spacing mm, 3 x f64
//   bytes 40-    one byte per voxel, x-fastest order
//
// The NIfTI-1 support is a deliberately small read-only subset: 348-byte
// header, magic "n+1\0", datatypes uint8/int16/float32, little-endian, no
// compression (pipe .nii.gz through an external decompressor first).
// Orientation metadata (qform/sform) is read and ignored with a warning;
// only pixdim spacing is honored.
VoxelMask load_mask(const std::string& path, MaskFormat format);

// Sniffs the leading magic bytes ("SFM1" -> raw-v1, otherwise NIfTI).
VoxelMask load_mask_auto(const std::string& path);

// Writes raw-v1. Round trip load(save(m)) == m bit-exactly.
void save_mask(const VoxelMask& mask, const std::string& path);

} // namespace segfair
