#pragma once

#include <array>
#include <cstdint>

#include "segfair/cohort.hpp"
#include "segfair/voxel_mask.hpp"

namespace segfair {

// Per-group tumor size law: base radius ~ Normal(mean, std), clamped so the
// tumor fits the grid.
struct GroupLaw {
    double mean_radius_mm = 6.0;
    double radius_std_mm = 0.5;
};

// Synthetic cohort generator configuration. The defaults encode the
// anatomical disparity under audit: the Young law is calibrated so that the
// Young mean tumor volume is ~1.66x the Older mean with ~1.70x the volume
// variance (E[r^3] = mu^3 + 3 mu sigma^2 for a normal radius).
struct SynthConfig {
    std::size_t n_per_group = 60;
    std::array<std::uint32_t, 3> grid = {48, 48, 48};
    std::array<double, 3> spacing = {1.0, 1.0, 1.0};
    // indexed by AgeGroup: Young, Middle, Older
    std::array<GroupLaw, 3> volume_law = {GroupLaw{7.12, 0.463},
                                          GroupLaw{6.56, 0.48},
                                          GroupLaw{6.00, 0.50}};
    std::array<double, 3> label_bias = {0.0, 0.0, 0.0}; // silver erosion layers (<0 dilates)
    std::array<double, 3> pred_bias = {0.0, 0.0, 0.0};  // prediction erosion layers
    std::array<std::pair<int, int>, 3> age_ranges = {
        std::pair{25, 40}, std::pair{41, 54}, std::pair{55, 80}};
    double flip_rate = 0.0; // Bernoulli surface-band flip probability
    std::uint64_t seed = 0;

    void validate() const;
};

struct SynthCase {
    CaseRecord record;
    VoxelMask gold;
    VoxelMask silver;
    VoxelMask pred;
    double injected_label_bias = 0.0;
    double injected_pred_bias = 0.0;
};

// Voxel occupied iff its center satisfies the ellipsoid inequality
// sum_a ((c_a - center_a)/radii_a)^2 <= 1, centers at index * spacing.
// Throws ArgError if no voxel center falls inside.
VoxelMask ellipsoid_mask(std::array<double, 3> center_mm, std::array<double, 3> radii_mm,
                         std::array<std::uint32_t, 3> grid,
                         std::array<double, 3> spacing);

// floor(|layers|) morphological erosions (dilations when layers < 0) with a
// 6-connected structuring element, then Bernoulli(flip_rate) occupancy flips
// restricted to the surface band (surface voxels plus their unoccupied
// 6-neighbors). Throws ArgError if the perturbation annihilates the mask.
VoxelMask perturb_mask(const VoxelMask& m, double layers, double flip_rate,
                       std::uint64_t seed);

// Deterministic per (seed, group, case index). Gold tumors are digitized
// ellipsoids drawn from the group volume law (volume-preserving mild axis
// anisotropy); silver = perturb(gold, label_bias[g]); pred =
// perturb(gold, pred_bias[g]). Expert ratings derive from silver-vs-gold
// quality so tier stratification is exercisable:
//   expert1: Good if dice>=0.80 & hd95<=10; Acceptable if dice>=0.55;
//            Poor if dice>0.15; Missed otherwise
//   expert2: the same bands shifted (0.78/12, 0.50, 0.10) to allow disagreement.
std::vector<SynthCase> gen_cohort(const SynthConfig& cfg);

} // namespace segfair
