#include "segfair/seg_metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "segfair/edt.hpp"
#include "segfair/error.hpp"

namespace segfair {

namespace {

void require_same_grid(const VoxelMask& a, const VoxelMask& b) {
    if (!a.same_grid(b))
        throw ArgError("masks differ in dims or spacing");
}

} // namespace

double dice(const VoxelMask& a, const VoxelMask& b) {
    require_same_grid(a, b);
    std::size_t na = 0, nb = 0, ninter = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        na += a.data[i];
        nb += b.data[i];
        ninter += static_cast<std::size_t>(a.data[i] & b.data[i]);
    }
    if (na == 0 && nb == 0) return 1.0;
    if (na == 0 || nb == 0) return 0.0;
    return 2.0 * static_cast<double>(ninter) / static_cast<double>(na + nb);
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw ArgError("percentile of empty sample");
    if (p < 0.0 || p > 1.0) throw ArgError("percentile p out of [0,1]");
    std::sort(values.begin(), values.end());
    const double idx = p * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(idx);
    const double frac = idx - static_cast<double>(lo);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

std::optional<double> hd95(const VoxelMask& a, const VoxelMask& b) {
    require_same_grid(a, b);
    if (a.occupied_count() == 0 || b.occupied_count() == 0) return std::nullopt;

    const SurfaceSet sa = surface_voxels(a);
    const SurfaceSet sb = surface_voxels(b);
    const DistanceField to_b = edt_of_surface(b);
    const DistanceField to_a = edt_of_surface(a);

    std::vector<double> da, db;
    da.reserve(sa.size());
    db.reserve(sb.size());
    for (const auto& c : sa.coords) da.push_back(to_b.at(c[0], c[1], c[2]));
    for (const auto& c : sb.coords) db.push_back(to_a.at(c[0], c[1], c[2]));

    return std::max(percentile(std::move(da), 0.95), percentile(std::move(db), 0.95));
}

double tumor_volume(const VoxelMask& m) {
    return static_cast<double>(m.occupied_count()) * m.voxel_volume_mm3();
}

double surface_area(const VoxelMask& m) {
    if (m.occupied_count() == 0) throw ArgError("surface area of empty mask");
    const auto [nx, ny, nz] = m.dims;
    const double area_x = m.spacing[1] * m.spacing[2]; // face normal to x
    const double area_y = m.spacing[0] * m.spacing[2];
    const double area_z = m.spacing[0] * m.spacing[1];

    std::size_t fx = 0, fy = 0, fz = 0;
    for (std::uint32_t z = 0; z < nz; ++z) {
        for (std::uint32_t y = 0; y < ny; ++y) {
            for (std::uint32_t x = 0; x < nx; ++x) {
                if (!m.at(x, y, z)) continue;
                fx += (x == 0 || !m.at(x - 1, y, z)) + (x == nx - 1 || !m.at(x + 1, y, z));
                fy += (y == 0 || !m.at(x, y - 1, z)) + (y == ny - 1 || !m.at(x, y + 1, z));
                fz += (z == 0 || !m.at(x, y, z - 1)) + (z == nz - 1 || !m.at(x, y, z + 1));
            }
        }
    }
    return static_cast<double>(fx) * area_x + static_cast<double>(fy) * area_y +
           static_cast<double>(fz) * area_z;
}

double sphericity(const VoxelMask& m) {
    const double v = tumor_volume(m);
    const double a = surface_area(m); // throws on empty
    return std::cbrt(M_PI) * std::pow(6.0 * v, 2.0 / 3.0) / a;
}

std::optional<double> elongation(const VoxelMask& m) {
    const auto [nx, ny, nz] = m.dims;
    std::size_t n = 0;
    double mean[3] = {0, 0, 0};
    for (std::uint32_t z = 0; z < nz; ++z)
        for (std::uint32_t y = 0; y < ny; ++y)
            for (std::uint32_t x = 0; x < nx; ++x)
                if (m.at(x, y, z)) {
                    ++n;
                    mean[0] += x * m.spacing[0];
                    mean[1] += y * m.spacing[1];
                    mean[2] += z * m.spacing[2];
                }
    if (n < 2) return std::nullopt;
    for (double& c : mean) c /= static_cast<double>(n);

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (std::uint32_t z = 0; z < nz; ++z)
        for (std::uint32_t y = 0; y < ny; ++y)
            for (std::uint32_t x = 0; x < nx; ++x)
                if (m.at(x, y, z)) {
                    const Eigen::Vector3d d(x * m.spacing[0] - mean[0],
                                            y * m.spacing[1] - mean[1],
                                            z * m.spacing[2] - mean[2]);
                    cov += d * d.transpose();
                }
    cov /= static_cast<double>(n);

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    if (solver.info() != Eigen::Success)
        throw InternalError("3x3 eigen decomposition failed");
    // Eigen returns eigenvalues ascending; clamp tiny negatives from rounding.
    const double l1 = std::max(solver.eigenvalues()[2], 0.0);
    const double l2 = std::max(solver.eigenvalues()[1], 0.0);
    if (l1 <= 0.0) return std::nullopt; // all centers coincide (cannot happen for n>=2)
    return std::sqrt(l2 / l1);
}

CaseMetrics case_metrics(const VoxelMask& pred, const VoxelMask& truth) {
    CaseMetrics cm;
    cm.dice = dice(pred, truth);
    cm.hd95_mm = hd95(pred, truth);
    cm.volume_mm3 = tumor_volume(truth);
    if (truth.occupied_count() > 0) cm.sphericity = sphericity(truth);
    cm.elongation = elongation(truth);
    return cm;
}

} // namespace segfair
