// Independent brute-force reference implementations used only by the test
// suites. These deliberately avoid the library's index caches and separable
// passes: everything is recomputed from raw coordinates with plain loops.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "nlos/backproject.hpp"
#include "nlos/emd.hpp"
#include "nlos/recon.hpp"

namespace oracle {

// Scalar distance written out component by component.
inline double naive_distance(double ax, double ay, double az, double bx, double by, double bz) {
    const double dx = ax - bx;
    const double dy = ay - by;
    const double dz = az - bz;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline double naive_path_length(const nlos::SensorGeometry& g, std::size_t i,
                                const nlos::Point3& p) {
    const auto& s = g.source_point();
    const auto& ip = g.image_points()[i];
    const auto& laser = g.laser_pos();
    const auto& det = g.detector_pos();
    return naive_distance(laser.x, laser.y, laser.z, s.x, s.y, s.z) +
           naive_distance(s.x, s.y, s.z, p.x, p.y, p.z) +
           naive_distance(ip.x, ip.y, ip.z, p.x, p.y, p.z) +
           naive_distance(ip.x, ip.y, ip.z, det.x, det.y, det.z);
}

// Back projection as a triple loop over (image point, voxel), recomputing
// every path length from coordinates; no VoxelBinIndex involved.
inline nlos::ConfidenceMap brute_back_project(const nlos::HistogramSet& h,
                                              const nlos::VoxelGridSpec& grid) {
    nlos::ConfidenceMap map(grid);
    for (std::uint64_t v = 0; v < grid.num_voxels(); ++v) {
        const nlos::Point3 c = grid.voxel_center(v);
        for (std::size_t i = 0; i < h.num_image_points(); ++i) {
            const double len = naive_path_length(h.geom, i, c);
            const double width = nlos::kSpeedOfLight * h.axis.bin_width_s;
            const double j = std::floor(len / width);
            if (j < h.axis.num_bins) map.values[v] += h.at(i, std::uint32_t(j));
        }
    }
    return map;
}

// Literal evaluation of the clustering conditions: every voxel is tested as
// a candidate center against its full axis-aligned window, then members are
// collected with the relative-intensity bound.
inline std::vector<nlos::Cluster> brute_clusters(const nlos::ConfidenceMap& map,
                                                 const nlos::DecomposeParams& params) {
    const auto radii = params.window_radii(map.grid);
    const auto [nx, ny, nz] = map.grid.dims;
    std::vector<nlos::Cluster> out;
    for (std::uint32_t cz = 0; cz < nz; ++cz)
        for (std::uint32_t cy = 0; cy < ny; ++cy)
            for (std::uint32_t cx = 0; cx < nx; ++cx) {
                const std::uint64_t center = map.grid.linear_index(cx, cy, cz);
                const double vc = map.values[center];
                if (!(vc > 0)) continue;
                const std::uint32_t x0 = cx > radii[0] ? cx - radii[0] : 0;
                const std::uint32_t x1 = std::min(nx - 1, cx + radii[0]);
                const std::uint32_t y0 = cy > radii[1] ? cy - radii[1] : 0;
                const std::uint32_t y1 = std::min(ny - 1, cy + radii[1]);
                const std::uint32_t z0 = cz > radii[2] ? cz - radii[2] : 0;
                const std::uint32_t z1 = std::min(nz - 1, cz + radii[2]);
                bool is_max = true;
                for (std::uint32_t iz = z0; iz <= z1 && is_max; ++iz)
                    for (std::uint32_t iy = y0; iy <= y1 && is_max; ++iy)
                        for (std::uint32_t ix = x0; ix <= x1; ++ix)
                            if (map.values[map.grid.linear_index(ix, iy, iz)] > vc) {
                                is_max = false;
                                break;
                            }
                if (!is_max) continue;
                nlos::Cluster cl;
                cl.center = center;
                for (std::uint32_t iz = z0; iz <= z1; ++iz)
                    for (std::uint32_t iy = y0; iy <= y1; ++iy)
                        for (std::uint32_t ix = x0; ix <= x1; ++ix) {
                            const std::uint64_t v = map.grid.linear_index(ix, iy, iz);
                            const double diff = vc - map.values[v];
                            if (diff >= 0 && diff / vc <= params.h_c) {
                                cl.members.push_back(v);
                                cl.sum += map.values[v];
                            }
                        }
                out.push_back(std::move(cl));
            }
    std::stable_sort(out.begin(), out.end(), [](const nlos::Cluster& a, const nlos::Cluster& b) {
        if (a.sum != b.sum) return a.sum > b.sum;
        return a.center < b.center;
    });
    return out;
}

// Plain triple-loop 7-point stencil with clamped edges.
inline nlos::FilteredMap naive_laplacian(const nlos::ConfidenceMap& map) {
    const auto [nx, ny, nz] = map.grid.dims;
    nlos::FilteredMap out{map.grid, std::vector<double>(map.values.size())};
    auto val = [&](std::int64_t x, std::int64_t y, std::int64_t z) {
        x = std::clamp<std::int64_t>(x, 0, nx - 1);
        y = std::clamp<std::int64_t>(y, 0, ny - 1);
        z = std::clamp<std::int64_t>(z, 0, nz - 1);
        return map.values[map.grid.linear_index(std::uint32_t(x), std::uint32_t(y),
                                                std::uint32_t(z))];
    };
    for (std::int64_t z = 0; z < nz; ++z)
        for (std::int64_t y = 0; y < ny; ++y)
            for (std::int64_t x = 0; x < nx; ++x)
                out.values[map.grid.linear_index(std::uint32_t(x), std::uint32_t(y),
                                                 std::uint32_t(z))] =
                    val(x - 1, y, z) + val(x + 1, y, z) + val(x, y - 1, z) + val(x, y + 1, z) +
                    val(x, y, z - 1) + val(x, y, z + 1) - 6.0 * val(x, y, z);
    return out;
}

// Normalized discrete Gaussian, the reference for the broadening kernel.
inline std::vector<double> discrete_gaussian(double sigma_bins, int radius) {
    std::vector<double> k(2 * radius + 1);
    double sum = 0;
    for (int t = -radius; t <= radius; ++t) {
        k[t + radius] = std::exp(-0.5 * (t / sigma_bins) * (t / sigma_bins));
        sum += k[t + radius];
    }
    for (double& x : k) x /= sum;
    return k;
}

}  // namespace oracle
