#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlos/recon.hpp"
#include "nlos/scene.hpp"

namespace nlos {

struct ObjectScore {
    std::string truth_id;
    std::optional<std::uint32_t> matched_rank;
    double centroid_error_m = 0.0;
    double dilated_iou = 0.0;
    bool recovered = false;
};

struct VoxelizedTruth {
    VoxelGridSpec grid;
    std::vector<std::string> ids;
    std::vector<std::vector<std::uint64_t>> voxel_sets;  // ascending, deduplicated
    // points that fell outside the grid, per object (excluded with a warning)
    std::vector<std::pair<std::string, Point3>> out_of_grid;
};

// Maps each object's sample points to their containing voxels. Points
// outside the grid are listed in out_of_grid and excluded.
inline VoxelizedTruth voxelize_truth(const std::vector<SceneObject>& objects,
                                     const VoxelGridSpec& grid) {
    VoxelizedTruth t;
    t.grid = grid;
    for (const auto& obj : objects) {
        std::vector<std::uint64_t> set;
        for (const auto& p : obj.points) {
            const auto v = grid.voxel_of(p);
            if (v)
                set.push_back(*v);
            else
                t.out_of_grid.emplace_back(obj.id, p);
        }
        std::sort(set.begin(), set.end());
        set.erase(std::unique(set.begin(), set.end()), set.end());
        t.ids.push_back(obj.id);
        t.voxel_sets.push_back(std::move(set));
    }
    return t;
}

// Chebyshev dilation by `radius` voxels, clipped to the grid.
inline std::vector<std::uint64_t> dilate(const std::vector<std::uint64_t>& voxels,
                                         const VoxelGridSpec& grid, std::uint32_t radius) {
    if (radius == 0) return voxels;
    std::set<std::uint64_t> out;
    const auto [nx, ny, nz] = grid.dims;
    const std::int64_t r = radius;
    for (std::uint64_t v : voxels) {
        const auto c = grid.coords_of(v);
        for (std::int64_t dz = -r; dz <= r; ++dz)
            for (std::int64_t dy = -r; dy <= r; ++dy)
                for (std::int64_t dx = -r; dx <= r; ++dx) {
                    const std::int64_t x = std::int64_t(c[0]) + dx;
                    const std::int64_t y = std::int64_t(c[1]) + dy;
                    const std::int64_t z = std::int64_t(c[2]) + dz;
                    if (x < 0 || y < 0 || z < 0 || x >= nx || y >= ny || z >= nz) continue;
                    out.insert(grid.linear_index(std::uint32_t(x), std::uint32_t(y),
                                                 std::uint32_t(z)));
                }
    }
    return {out.begin(), out.end()};
}

// Intersection over union of two sorted voxel sets.
inline double iou(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t inter = 0;
    std::size_t ia = 0, ib = 0;
    while (ia < a.size() && ib < b.size()) {
        if (a[ia] < b[ib])
            ++ia;
        else if (b[ib] < a[ia])
            ++ib;
        else {
            ++inter;
            ++ia;
            ++ib;
        }
    }
    const std::size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline Vec3 voxel_set_centroid(const std::vector<std::uint64_t>& voxels,
                               const VoxelGridSpec& grid) {
    Vec3 s;
    for (std::uint64_t v : voxels) s = s + grid.voxel_center(v);
    return voxels.empty() ? s : s / static_cast<double>(voxels.size());
}

// Greedy matching of reconstruction labels to truth objects by descending
// IoU against the dilated truth sets; each label is used at most once.
// recovered requires a match with IoU > 0 and a non-empty label set.
inline std::vector<ObjectScore> score(const Reconstruction& recon, const VoxelizedTruth& truth,
                                      std::uint32_t dilation_radius = 1) {
    if (!(recon.grid == truth.grid))
        throw std::invalid_argument("score: reconstruction and truth grids differ");

    std::uint32_t max_label = 0;
    for (std::uint32_t l : recon.labels) max_label = std::max(max_label, l);
    std::vector<std::vector<std::uint64_t>> label_sets(max_label + 1);
    for (std::uint64_t v = 0; v < recon.labels.size(); ++v)
        if (recon.labels[v] != 0) label_sets[recon.labels[v]].push_back(v);

    const std::size_t nt = truth.voxel_sets.size();
    std::vector<std::vector<std::uint64_t>> dilated(nt);
    for (std::size_t t = 0; t < nt; ++t)
        dilated[t] = dilate(truth.voxel_sets[t], truth.grid, dilation_radius);

    // IoU of every (truth, label) pair.
    std::vector<std::vector<double>> table(nt, std::vector<double>(max_label + 1, 0.0));
    for (std::size_t t = 0; t < nt; ++t)
        for (std::uint32_t l = 1; l <= max_label; ++l)
            table[t][l] = iou(label_sets[l], dilated[t]);

    std::vector<ObjectScore> scores(nt);
    for (std::size_t t = 0; t < nt; ++t) scores[t].truth_id = truth.ids[t];

    std::vector<bool> truth_done(nt, false);
    std::vector<bool> label_done(max_label + 1, false);
    for (;;) {
        double best = -1.0;
        std::size_t bt = 0;
        std::uint32_t bl = 0;
        for (std::size_t t = 0; t < nt; ++t) {
            if (truth_done[t]) continue;
            for (std::uint32_t l = 1; l <= max_label; ++l) {
                if (label_done[l] || label_sets[l].empty()) continue;
                if (table[t][l] > best) {
                    best = table[t][l];
                    bt = t;
                    bl = l;
                }
            }
        }
        if (best <= 0.0) break;  // only positive-IoU pairs constitute matches
        truth_done[bt] = true;
        label_done[bl] = true;
        ObjectScore& s = scores[bt];
        s.matched_rank = bl;
        s.dilated_iou = best;
        s.recovered = true;
        const Vec3 ct = voxel_set_centroid(truth.voxel_sets[bt], truth.grid);
        const Vec3 cl = voxel_set_centroid(label_sets[bl], truth.grid);
        s.centroid_error_m = distance(ct, cl);
    }
    return scores;
}

}  // namespace nlos
