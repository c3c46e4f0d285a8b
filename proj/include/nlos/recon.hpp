#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlos/emd.hpp"

namespace nlos {

struct FilteredMap {
    VoxelGridSpec grid;
    std::vector<double> values;  // may be negative
};

// 7-point discrete Laplacian, sum of the 6 face neighbors minus 6V, unit
// spacing, clamped-edge replication at the boundary (a constant map maps to
// zero everywhere, boundary included).
inline FilteredMap laplacian(const ConfidenceMap& map) {
    const auto [nx, ny, nz] = map.grid.dims;
    if (nx < 3 || ny < 3 || nz < 3)
        throw std::invalid_argument("laplacian: every grid axis must have >= 3 voxels");
    FilteredMap out{map.grid, std::vector<double>(map.values.size())};
    const auto& v = map.values;
    const std::uint64_t sx = 1;
    const std::uint64_t sy = nx;
    const std::uint64_t sz = std::uint64_t(nx) * ny;
    for (std::uint32_t iz = 0; iz < nz; ++iz)
        for (std::uint32_t iy = 0; iy < ny; ++iy)
            for (std::uint32_t ix = 0; ix < nx; ++ix) {
                const std::uint64_t c = map.grid.linear_index(ix, iy, iz);
                const double xm = v[ix > 0 ? c - sx : c];
                const double xp = v[ix + 1 < nx ? c + sx : c];
                const double ym = v[iy > 0 ? c - sy : c];
                const double yp = v[iy + 1 < ny ? c + sy : c];
                const double zm = v[iz > 0 ? c - sz : c];
                const double zp = v[iz + 1 < nz ? c + sz : c];
                out.values[c] = xm + xp + ym + yp + zm + zp - 6.0 * v[c];
            }
    return out;
}

struct ThresholdResult {
    std::vector<std::uint64_t> survivors;  // ascending linear indices
    double max_value = 0.0;
    bool degenerate = false;  // max <= 0: empty result, not an error
};

// Survivors {v : f[v] > beta * max(f)}. A nonpositive maximum yields an
// empty, degenerate-flagged result.
inline ThresholdResult threshold(const FilteredMap& f, double beta) {
    if (!(beta > 0) || !(beta < 1))
        throw std::invalid_argument("threshold: beta must be in (0, 1)");
    ThresholdResult r;
    if (f.values.empty()) {
        r.degenerate = true;
        return r;
    }
    r.max_value = *std::max_element(f.values.begin(), f.values.end());
    if (!(r.max_value > 0)) {
        r.degenerate = true;
        return r;
    }
    const double cut = beta * r.max_value;
    for (std::uint64_t v = 0; v < f.values.size(); ++v)
        if (f.values[v] > cut) r.survivors.push_back(v);
    return r;
}

enum class ReconStatus { ok, empty };

// Per-object binary voxel sets: labels[v] = 0 (empty) or the rank of the
// mode that claimed v.
struct Reconstruction {
    VoxelGridSpec grid;
    std::vector<std::uint32_t> labels;
    ReconStatus status = ReconStatus::ok;

    struct ObjectStats {
        std::uint32_t label = 0;
        std::uint64_t voxel_count = 0;
        Vec3 centroid;  // of labeled voxel centers, meters
    };
    std::vector<ObjectStats> objects;

    Reconstruction() = default;
    explicit Reconstruction(const VoxelGridSpec& g) : grid(g), labels(g.num_voxels(), 0) {}

    void compute_stats(std::uint32_t num_labels) {
        objects.clear();
        std::vector<std::uint64_t> counts(num_labels + 1, 0);
        std::vector<Vec3> sums(num_labels + 1);
        for (std::uint64_t v = 0; v < labels.size(); ++v) {
            const std::uint32_t l = labels[v];
            if (l == 0) continue;
            ++counts[l];
            sums[l] = sums[l] + grid.voxel_center(v);
        }
        for (std::uint32_t l = 1; l <= num_labels; ++l) {
            ObjectStats s;
            s.label = l;
            s.voxel_count = counts[l];
            if (counts[l] > 0) s.centroid = sums[l] / static_cast<double>(counts[l]);
            objects.push_back(s);
        }
    }
};

namespace detail {
// Surface ridges of the confidence map are returned positive: the filtered
// map used for thresholding is the negated second derivative, so local
// intensity maxima (object sheets) survive rather than their flanks.
inline FilteredMap edge_response(const ConfidenceMap& map) {
    FilteredMap f = laplacian(map);
    for (double& x : f.values) x = -x;
    return f;
}
}  // namespace detail

// The general method: filter, threshold against the global maximum, label
// every survivor 1.
inline Reconstruction reconstruct_general(const ConfidenceMap& map, double beta) {
    const ThresholdResult t = threshold(detail::edge_response(map), beta);
    Reconstruction rec(map.grid);
    for (std::uint64_t v : t.survivors) rec.labels[v] = 1;
    rec.status = t.survivors.empty() ? ReconStatus::empty : ReconStatus::ok;
    rec.compute_stats(1);
    return rec;
}

// The EMD method: each mode is filtered and thresholded against its own
// maximum (this is what makes weak objects recoverable), survivors carry the
// mode's rank, and a voxel claimed by several modes keeps the lowest rank.
// betas supplies one shared value or one value per mode.
inline Reconstruction reconstruct_emd(std::span<const EllipsoidMode> modes,
                                      std::span<const double> betas) {
    if (betas.empty()) throw std::invalid_argument("reconstruct_emd: need at least one beta");
    if (betas.size() > 1 && betas.size() < modes.size())
        throw std::invalid_argument("reconstruct_emd: give one beta or one per mode");
    if (modes.empty()) return Reconstruction{};
    Reconstruction rec(modes.front().map.grid);
    bool any = false;
    for (std::size_t k = 0; k < modes.size(); ++k) {
        const double beta = betas.size() == 1 ? betas[0] : betas[k];
        const ThresholdResult t = threshold(detail::edge_response(modes[k].map), beta);
        const std::uint32_t rank = modes[k].object_rank;
        for (std::uint64_t v : t.survivors) {
            any = true;
            if (rec.labels[v] == 0 || rec.labels[v] > rank) rec.labels[v] = rank;
        }
    }
    rec.status = any ? ReconStatus::ok : ReconStatus::empty;
    std::uint32_t max_rank = 0;
    for (const auto& m : modes) max_rank = std::max(max_rank, m.object_rank);
    rec.compute_stats(max_rank);
    return rec;
}

inline Reconstruction reconstruct_emd(std::span<const EllipsoidMode> modes, double beta) {
    const double b[1] = {beta};
    return reconstruct_emd(modes, std::span<const double>(b, 1));
}

}  // namespace nlos
