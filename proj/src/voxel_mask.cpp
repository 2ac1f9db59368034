#include "segfair/voxel_mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "segfair/error.hpp"

namespace segfair {

VoxelMask VoxelMask::zeros(std::array<std::uint32_t, 3> dims,
                           std::array<double, 3> spacing) {
    VoxelMask m;
    m.dims = dims;
    m.spacing = spacing;
    m.data.assign(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], 0);
    m.validate();
    return m;
}

std::size_t VoxelMask::occupied_count() const {
    return static_cast<std::size_t>(
        std::count_if(data.begin(), data.end(), [](std::uint8_t v) { return v != 0; }));
}

void VoxelMask::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (dims[a] == 0) throw ArgError("mask dims must be positive");
        if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]))
            throw ArgError("mask spacing must be positive and finite");
    }
    if (data.size() != voxel_count())
        throw ArgError("mask data length does not match dims");
    for (std::uint8_t v : data)
        if (v > 1) throw ArgError("mask occupancy must be binary");
}

SurfaceSet surface_voxels(const VoxelMask& mask) {
    SurfaceSet surf;
    const auto [nx, ny, nz] = mask.dims;
    for (std::uint32_t x = 0; x < nx; ++x) {
        for (std::uint32_t y = 0; y < ny; ++y) {
            for (std::uint32_t z = 0; z < nz; ++z) {
                if (!mask.at(x, y, z)) continue;
                const bool exposed =
                    x == 0 || x == nx - 1 || y == 0 || y == ny - 1 || z == 0 ||
                    z == nz - 1 || !mask.at(x - 1, y, z) || !mask.at(x + 1, y, z) ||
                    !mask.at(x, y - 1, z) || !mask.at(x, y + 1, z) ||
                    !mask.at(x, y, z - 1) || !mask.at(x, y, z + 1);
                if (exposed) surf.coords.push_back({x, y, z});
            }
        }
    }
    std::sort(surf.coords.begin(), surf.coords.end());
    return surf;
}

VoxelMask resample_nearest(const VoxelMask& mask, std::array<double, 3> target_spacing) {
    for (int a = 0; a < 3; ++a)
        if (!(target_spacing[a] > 0.0) || !std::isfinite(target_spacing[a]))
            throw ArgError("target spacing must be positive and finite");

    std::array<std::uint32_t, 3> out_dims{};
    for (int a = 0; a < 3; ++a) {
        const double extent = static_cast<double>(mask.dims[a]) * mask.spacing[a];
        const double n = std::ceil(extent / target_spacing[a]);
        if (!(n >= 1.0))
            throw ArgError("resampling would produce zero voxels along an axis");
        out_dims[a] = static_cast<std::uint32_t>(n);
    }

    VoxelMask out = VoxelMask::zeros(out_dims, target_spacing);

    // Voxel i's center sits at i * spacing along each axis. The nearest input
    // center for output position q (in input index units) is ceil(q - 0.5),
    // which resolves exact halfway ties toward the lower index.
    std::array<std::vector<std::uint32_t>, 3> src;
    for (int a = 0; a < 3; ++a) {
        src[a].resize(out_dims[a]);
        for (std::uint32_t j = 0; j < out_dims[a]; ++j) {
            const double q = static_cast<double>(j) * target_spacing[a] / mask.spacing[a];
            long i = static_cast<long>(std::ceil(q - 0.5));
            i = std::clamp(i, 0L, static_cast<long>(mask.dims[a]) - 1L);
            src[a][j] = static_cast<std::uint32_t>(i);
        }
    }

    for (std::uint32_t z = 0; z < out_dims[2]; ++z)
        for (std::uint32_t y = 0; y < out_dims[1]; ++y)
            for (std::uint32_t x = 0; x < out_dims[0]; ++x)
                out.set(x, y, z, mask.at(src[0][x], src[1][y], src[2][z]));

    return out;
}

} // namespace segfair
