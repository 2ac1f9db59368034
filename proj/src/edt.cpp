#include "segfair/edt.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "segfair/error.hpp"

namespace segfair {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D transform along a line of n samples with inter-center distance w:
//   d[i] = min_j (w*(i-j))^2 + f[j]
// Parabolas with infinite height (f[j] == inf) carry no information and are
// skipped; if every input is infinite the line stays infinite.
void dt1d(const double* f, double* d, int n, double w,
          std::vector<int>& v, std::vector<double>& z) {
    v.resize(static_cast<std::size_t>(n));
    z.resize(static_cast<std::size_t>(n) + 1);

    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] == kInf) continue;
        const double pq = w * q;
        double s;
        for (;;) {
            if (k < 0) { s = -kInf; break; }
            const double pv = w * v[k];
            s = ((f[q] + pq * pq) - (f[v[k]] + pv * pv)) / (2.0 * (pq - pv));
            if (s <= z[k]) { --k; continue; }
            break;
        }
        ++k;
        v[static_cast<std::size_t>(k)] = q;
        z[static_cast<std::size_t>(k)] = s;
        z[static_cast<std::size_t>(k) + 1] = kInf;
    }

    if (k < 0) {
        for (int i = 0; i < n; ++i) d[i] = kInf;
        return;
    }

    int j = 0;
    for (int i = 0; i < n; ++i) {
        const double pi = w * i;
        while (z[static_cast<std::size_t>(j) + 1] < pi) ++j;
        const double diff = pi - w * v[j];
        d[i] = diff * diff + f[v[j]];
    }
}

DistanceField edt_of(const VoxelMask& mask, const std::vector<std::uint8_t>& sources) {
    const auto [nx, ny, nz] = mask.dims;
    const std::size_t n = mask.voxel_count();

    std::vector<double> sq(n);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
        sq[i] = sources[i] ? 0.0 : kInf;
        any = any || sources[i];
    }
    if (!any) throw ArgError("EDT of empty mask undefined");

    const int max_dim = static_cast<int>(std::max({nx, ny, nz}));
    std::vector<double> line(static_cast<std::size_t>(max_dim));
    std::vector<double> out(static_cast<std::size_t>(max_dim));
    std::vector<int> v;
    std::vector<double> z;

    // x pass
    for (std::uint32_t zc = 0; zc < nz; ++zc) {
        for (std::uint32_t y = 0; y < ny; ++y) {
            const std::size_t base = mask.index(0, y, zc);
            dt1d(&sq[base], out.data(), static_cast<int>(nx), mask.spacing[0], v, z);
            for (std::uint32_t x = 0; x < nx; ++x) sq[base + x] = out[x];
        }
    }
    // y pass
    const std::size_t sy = nx;
    for (std::uint32_t zc = 0; zc < nz; ++zc) {
        for (std::uint32_t x = 0; x < nx; ++x) {
            const std::size_t base = mask.index(x, 0, zc);
            for (std::uint32_t y = 0; y < ny; ++y) line[y] = sq[base + y * sy];
            dt1d(line.data(), out.data(), static_cast<int>(ny), mask.spacing[1], v, z);
            for (std::uint32_t y = 0; y < ny; ++y) sq[base + y * sy] = out[y];
        }
    }
    // z pass
    const std::size_t sz = static_cast<std::size_t>(nx) * ny;
    for (std::uint32_t y = 0; y < ny; ++y) {
        for (std::uint32_t x = 0; x < nx; ++x) {
            const std::size_t base = mask.index(x, y, 0);
            for (std::uint32_t zc = 0; zc < nz; ++zc) line[zc] = sq[base + zc * sz];
            dt1d(line.data(), out.data(), static_cast<int>(nz), mask.spacing[2], v, z);
            for (std::uint32_t zc = 0; zc < nz; ++zc) sq[base + zc * sz] = out[zc];
        }
    }

    DistanceField field;
    field.dims = mask.dims;
    field.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) field.values[i] = std::sqrt(sq[i]);
    return field;
}

} // namespace

DistanceField edt(const VoxelMask& mask) { return edt_of(mask, mask.data); }

DistanceField edt_of_surface(const VoxelMask& mask) {
    std::vector<std::uint8_t> sources(mask.voxel_count(), 0);
    const SurfaceSet surf = surface_voxels(mask);
    for (const auto& c : surf.coords) sources[mask.index(c[0], c[1], c[2])] = 1;
    return edt_of(mask, sources);
}

} // namespace segfair
