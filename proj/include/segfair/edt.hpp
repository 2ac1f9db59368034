#pragma once

#include "segfair/voxel_mask.hpp"

namespace segfair {

// Exact Euclidean distance transform: per-voxel distance in mm from the voxel
// center to the nearest occupied voxel center, for arbitrary (anisotropic)
// spacing. Separable lower-envelope-of-parabolas algorithm, one pass per
// axis, so the result equals the brute-force all-pairs minimum up to
// floating-point rounding.
// Felzenszwalb & Huttenlocher, "Distance Transforms of Sampled Functions".
//
// Throws ArgError("EDT of empty mask undefined") when no voxel is occupied.
DistanceField edt(const VoxelMask& mask);

// Same transform but with only the mask's surface voxels as sources.
// This is the substrate for surface-to-surface distances (HD95).
DistanceField edt_of_surface(const VoxelMask& mask);

} // namespace segfair
