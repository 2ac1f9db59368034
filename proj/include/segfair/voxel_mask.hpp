#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace segfair {

// Binary 3D occupancy grid with physical voxel spacing in mm.
// Data is stored x-fastest: index = x + dims[0] * (y + dims[1] * z).
// Occupancy is strictly 0/1; loaders binarize with "value > 0".
struct VoxelMask {
    std::array<std::uint32_t, 3> dims{0, 0, 0};
    std::array<double, 3> spacing{1.0, 1.0, 1.0}; // mm per voxel along x, y, z
    std::vector<std::uint8_t> data;               // size dims[0]*dims[1]*dims[2]

    static VoxelMask zeros(std::array<std::uint32_t, 3> dims,
                           std::array<double, 3> spacing);

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    }

    std::size_t index(std::uint32_t x, std::uint32_t y, std::uint32_t z) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(dims[0]) *
                   (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims[1]) * z);
    }

    bool at(std::uint32_t x, std::uint32_t y, std::uint32_t z) const {
        return data[index(x, y, z)] != 0;
    }

    void set(std::uint32_t x, std::uint32_t y, std::uint32_t z, bool v) {
        data[index(x, y, z)] = v ? 1 : 0;
    }

    std::size_t occupied_count() const;

    double voxel_volume_mm3() const { return spacing[0] * spacing[1] * spacing[2]; }

    bool same_grid(const VoxelMask& other) const {
        return dims == other.dims && spacing == other.spacing;
    }

    bool operator==(const VoxelMask& other) const = default;

    // Throws ArgError if the stated invariants do not hold.
    void validate() const;
};

// Per-voxel Euclidean distance (mm) to the nearest occupied voxel center of
// some source mask. Zero exactly on occupied voxels of the source.
struct DistanceField {
    std::array<std::uint32_t, 3> dims{0, 0, 0};
    std::vector<double> values;

    std::size_t index(std::uint32_t x, std::uint32_t y, std::uint32_t z) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(dims[0]) *
                   (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims[1]) * z);
    }

    double at(std::uint32_t x, std::uint32_t y, std::uint32_t z) const {
        return values[index(x, y, z)];
    }
};

// Occupied voxels 6-adjacent to an unoccupied voxel or the grid boundary.
// Coordinates are unique and sorted lexicographically by (x, y, z).
struct SurfaceSet {
    std::vector<std::array<std::uint32_t, 3>> coords;

    bool empty() const { return coords.empty(); }
    std::size_t size() const { return coords.size(); }
};

SurfaceSet surface_voxels(const VoxelMask& mask);

// Nearest-neighbor resampling onto a grid with the given spacing.
// Output dims = ceil(dims * spacing / target); each output voxel takes the
// occupancy of the input voxel whose center is nearest to the output voxel
// center, ties broken toward the lower index. Never interpolates, so the
// result stays binary.
VoxelMask resample_nearest(const VoxelMask& mask, std::array<double, 3> target_spacing);

} // namespace segfair
