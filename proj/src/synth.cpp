#include "segfair/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "segfair/error.hpp"
#include "segfair/rng.hpp"
#include "segfair/seg_metrics.hpp"

namespace segfair {

void SynthConfig::validate() const {
    if (n_per_group == 0) throw ArgError("n_per_group must be positive");
    for (int a = 0; a < 3; ++a) {
        if (grid[a] == 0) throw ArgError("grid dims must be positive");
        if (!(spacing[a] > 0.0)) throw ArgError("spacing must be positive");
    }
    for (const auto& law : volume_law) {
        if (!(law.mean_radius_mm > 0.0) || law.radius_std_mm < 0.0)
            throw ArgError("invalid volume law");
        const double reach = law.mean_radius_mm + 4.0 * law.radius_std_mm;
        for (int a = 0; a < 3; ++a)
            if (reach * 2.0 >= static_cast<double>(grid[a]) * spacing[a])
                throw ArgError("volume law does not fit the grid");
    }
    if (flip_rate < 0.0 || flip_rate > 1.0) throw ArgError("flip_rate out of [0,1]");
}

VoxelMask ellipsoid_mask(std::array<double, 3> center_mm, std::array<double, 3> radii_mm,
                         std::array<std::uint32_t, 3> grid,
                         std::array<double, 3> spacing) {
    for (double r : radii_mm)
        if (!(r > 0.0)) throw ArgError("ellipsoid radii must be positive");

    VoxelMask m = VoxelMask::zeros(grid, spacing);
    bool any = false;
    for (std::uint32_t z = 0; z < grid[2]; ++z) {
        const double dz = (z * spacing[2] - center_mm[2]) / radii_mm[2];
        for (std::uint32_t y = 0; y < grid[1]; ++y) {
            const double dy = (y * spacing[1] - center_mm[1]) / radii_mm[1];
            for (std::uint32_t x = 0; x < grid[0]; ++x) {
                const double dx = (x * spacing[0] - center_mm[0]) / radii_mm[0];
                if (dx * dx + dy * dy + dz * dz <= 1.0) {
                    m.set(x, y, z, true);
                    any = true;
                }
            }
        }
    }
    if (!any) throw ArgError("ellipsoid does not intersect any voxel center");
    return m;
}

namespace {

VoxelMask erode_once(const VoxelMask& m) {
    VoxelMask out = m;
    const auto [nx, ny, nz] = m.dims;
    for (std::uint32_t z = 0; z < nz; ++z)
        for (std::uint32_t y = 0; y < ny; ++y)
            for (std::uint32_t x = 0; x < nx; ++x) {
                if (!m.at(x, y, z)) continue;
                const bool boundary =
                    x == 0 || x == nx - 1 || y == 0 || y == ny - 1 || z == 0 ||
                    z == nz - 1 || !m.at(x - 1, y, z) || !m.at(x + 1, y, z) ||
                    !m.at(x, y - 1, z) || !m.at(x, y + 1, z) || !m.at(x, y, z - 1) ||
                    !m.at(x, y, z + 1);
                if (boundary) out.set(x, y, z, false);
            }
    return out;
}

VoxelMask dilate_once(const VoxelMask& m) {
    VoxelMask out = m;
    const auto [nx, ny, nz] = m.dims;
    for (std::uint32_t z = 0; z < nz; ++z)
        for (std::uint32_t y = 0; y < ny; ++y)
            for (std::uint32_t x = 0; x < nx; ++x) {
                if (m.at(x, y, z)) continue;
                const bool touches =
                    (x > 0 && m.at(x - 1, y, z)) || (x + 1 < nx && m.at(x + 1, y, z)) ||
                    (y > 0 && m.at(x, y - 1, z)) || (y + 1 < ny && m.at(x, y + 1, z)) ||
                    (z > 0 && m.at(x, y, z - 1)) || (z + 1 < nz && m.at(x, y, z + 1));
                if (touches) out.set(x, y, z, true);
            }
    return out;
}

} // namespace

VoxelMask perturb_mask(const VoxelMask& m, double layers, double flip_rate,
                       std::uint64_t seed) {
    if (m.occupied_count() == 0) throw ArgError("perturb_mask of empty mask");
    if (flip_rate < 0.0 || flip_rate > 1.0) throw ArgError("flip_rate out of [0,1]");

    VoxelMask out = m;
    const int steps = static_cast<int>(std::floor(std::fabs(layers)));
    for (int s = 0; s < steps; ++s) {
        out = layers < 0.0 ? dilate_once(out) : erode_once(out);
        if (out.occupied_count() == 0)
            throw ArgError("perturbation annihilated the mask");
    }

    if (flip_rate > 0.0) {
        // Flip candidates: the surface band = surface voxels plus their
        // unoccupied 6-neighbors, visited in lexicographic order.
        const SurfaceSet surf = surface_voxels(out);
        std::vector<std::size_t> band;
        const auto [nx, ny, nz] = out.dims;
        std::vector<std::uint8_t> seen(out.voxel_count(), 0);
        auto add = [&](std::uint32_t x, std::uint32_t y, std::uint32_t z) {
            const std::size_t idx = out.index(x, y, z);
            if (!seen[idx]) {
                seen[idx] = 1;
                band.push_back(idx);
            }
        };
        for (const auto& c : surf.coords) {
            const auto [x, y, z] = c;
            add(x, y, z);
            if (x > 0 && !out.at(x - 1, y, z)) add(x - 1, y, z);
            if (x + 1 < nx && !out.at(x + 1, y, z)) add(x + 1, y, z);
            if (y > 0 && !out.at(x, y - 1, z)) add(x, y - 1, z);
            if (y + 1 < ny && !out.at(x, y + 1, z)) add(x, y + 1, z);
            if (z > 0 && !out.at(x, y, z - 1)) add(x, y, z - 1);
            if (z + 1 < nz && !out.at(x, y, z + 1)) add(x, y, z + 1);
        }
        std::sort(band.begin(), band.end());
        Rng rng(derive_seed(seed, "flips"));
        for (std::size_t idx : band)
            if (rng.bernoulli(flip_rate)) out.data[idx] ^= 1;
        if (out.occupied_count() == 0)
            throw ArgError("perturbation annihilated the mask");
    }
    return out;
}

namespace {

Rating rate_expert1(double dice, double hd95) {
    if (dice >= 0.80 && hd95 <= 10.0) return Rating::Good;
    if (dice >= 0.55) return Rating::Acceptable;
    if (dice > 0.15) return Rating::Poor;
    return Rating::Missed;
}

Rating rate_expert2(double dice, double hd95) {
    if (dice >= 0.78 && hd95 <= 12.0) return Rating::Good;
    if (dice >= 0.50) return Rating::Acceptable;
    if (dice > 0.10) return Rating::Poor;
    return Rating::Missed;
}

} // namespace

std::vector<SynthCase> gen_cohort(const SynthConfig& cfg) {
    cfg.validate();
    constexpr std::array<AgeGroup, 3> groups{AgeGroup::Young, AgeGroup::Middle,
                                             AgeGroup::Older};
    constexpr std::array<char, 3> prefix{'Y', 'M', 'O'};

    std::vector<SynthCase> cohort;
    cohort.reserve(3 * cfg.n_per_group);

    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const AgeGroup g = groups[gi];
        const GroupLaw& law = cfg.volume_law[gi];
        const auto [age_lo, age_hi] = cfg.age_ranges[gi];

        for (std::size_t i = 0; i < cfg.n_per_group; ++i) {
            const std::uint64_t case_seed =
                derive_seed(cfg.seed, fnv1a64(std::string(to_string(g))) + i);
            Rng rng(case_seed);

            SynthCase sc;
            char id[16];
            std::snprintf(id, sizeof id, "%c%04zu", prefix[gi], i);
            sc.record.case_id = id;
            sc.record.age = age_lo + static_cast<int>(rng.bounded(
                                         static_cast<std::uint64_t>(age_hi - age_lo + 1)));
            sc.record.age_group = age_group(sc.record.age);

            const double max_r = 0.45 * std::min({cfg.grid[0] * cfg.spacing[0],
                                                  cfg.grid[1] * cfg.spacing[1],
                                                  cfg.grid[2] * cfg.spacing[2]});
            const double base_r =
                std::clamp(rng.normal(law.mean_radius_mm, law.radius_std_mm), 1.0, max_r);

            // volume-preserving anisotropy: factors multiply to 1
            const double f0 = 1.0 + rng.uniform(-0.15, 0.15);
            const double f1 = 1.0 + rng.uniform(-0.15, 0.15);
            const double f2 = 1.0 / (f0 * f1);
            std::array<double, 3> radii = {base_r * f0, base_r * f1, base_r * f2};

            std::array<double, 3> center{};
            for (int a = 0; a < 3; ++a) {
                const double mid =
                    0.5 * static_cast<double>(cfg.grid[a] - 1) * cfg.spacing[a];
                center[a] = mid + rng.uniform(-1.5, 1.5);
            }

            sc.gold = ellipsoid_mask(center, radii, cfg.grid, cfg.spacing);
            sc.injected_label_bias = cfg.label_bias[gi];
            sc.injected_pred_bias = cfg.pred_bias[gi];
            sc.silver = perturb_mask(sc.gold, cfg.label_bias[gi], cfg.flip_rate,
                                     derive_seed(case_seed, "silver"));
            sc.pred = perturb_mask(sc.gold, cfg.pred_bias[gi], cfg.flip_rate,
                                   derive_seed(case_seed, "pred"));

            sc.record.silver_dice = dice(sc.silver, sc.gold);
            sc.record.silver_hd95 = hd95(sc.silver, sc.gold).value_or(0.0);
            sc.record.expert1 = rate_expert1(sc.record.silver_dice, sc.record.silver_hd95);
            sc.record.expert2 = rate_expert2(sc.record.silver_dice, sc.record.silver_hd95);
            sc.record.tier = assign_tier(sc.record.expert1, sc.record.expert2,
                                         sc.record.silver_dice, sc.record.silver_hd95);
            sc.record.difficulty = difficulty_of(sc.record.tier);
            cohort.push_back(std::move(sc));
        }
    }
    return cohort;
}

} // namespace segfair
