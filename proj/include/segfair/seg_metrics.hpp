#pragma once

#include <optional>

#include "segfair/voxel_mask.hpp"

namespace segfair {

// Per-case segmentation quality and tumor morphometrics.
struct CaseMetrics {
    double dice = 0.0;
    std::optional<double> hd95_mm;   // undefined when either mask is empty
    double volume_mm3 = 0.0;
    std::optional<double> sphericity; // undefined for the empty mask
    std::optional<double> elongation; // undefined below 2 occupied voxels
};

// 2|A∩B| / (|A|+|B|). Both masks empty -> 1.0 by convention; exactly one
// empty -> 0.0. Throws ArgError on dim/spacing mismatch.
double dice(const VoxelMask& a, const VoxelMask& b);

// Symmetric 95th percentile surface distance in mm:
//   max( P95{ d(x, surf(B)) : x in surf(A) }, P95{ d(y, surf(A)) : y in surf(B) } )
// Directed percentiles are taken separately (the dominant convention in
// medical-segmentation tooling; the distances are not pooled). Empty input
// on either side -> nullopt, surfaced as an undefined flag upstream.
std::optional<double> hd95(const VoxelMask& a, const VoxelMask& b);

// Linear interpolation between closest ranks: index p*(n-1). p in [0,1].
double percentile(std::vector<double> values, double p);

double tumor_volume(const VoxelMask& m); // occupied count * voxel volume

// Sum of exposed voxel face areas; a face is exposed iff its 6-neighbor is
// unoccupied or outside the grid. Throws ArgError on the empty mask.
double surface_area(const VoxelMask& m);

// pi^(1/3) * (6V)^(2/3) / A. 1 for the perfect ball; the voxel staircase
// inflates A, so digitized balls converge to a constant below 1.
double sphericity(const VoxelMask& m);

// sqrt(lambda2/lambda1) of the covariance of occupied voxel centers in mm,
// eigenvalues sorted descending. 1 = isotropic in-plane, 0 = collinear.
// Undefined (nullopt) for fewer than 2 occupied voxels.
std::optional<double> elongation(const VoxelMask& m);

CaseMetrics case_metrics(const VoxelMask& pred, const VoxelMask& truth);

} // namespace segfair
