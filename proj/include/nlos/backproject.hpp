#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "nlos/forward.hpp"
#include "nlos/parallel.hpp"
#include "nlos/scene.hpp"

namespace nlos {

// Dense voxel grid of accumulated back-projected intensity.
struct ConfidenceMap {
    VoxelGridSpec grid;
    std::vector<double> values;
    std::uint64_t provenance_hash = 0;

    ConfidenceMap() = default;
    explicit ConfidenceMap(const VoxelGridSpec& g)
        : grid(g), values(g.num_voxels(), 0.0) {}

    double total() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    double max_value() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, v);
        return m;
    }
};

// Sparse per-image-point set of participating bins: which ellipsoids (i, j)
// a selective re-projection keeps.
class ProjectionSelector {
  public:
    ProjectionSelector() = default;
    explicit ProjectionSelector(std::size_t num_image_points) : bins_(num_image_points) {}

    std::size_t num_image_points() const { return bins_.size(); }

    void add(std::size_t i, std::uint32_t j) {
        auto& row = bins_.at(i);
        const auto it = std::lower_bound(row.begin(), row.end(), j);
        if (it == row.end() || *it != j) row.insert(it, j);
    }
    bool contains(std::size_t i, std::uint32_t j) const {
        const auto& row = bins_[i];
        return std::binary_search(row.begin(), row.end(), j);
    }
    void remove_all(const ProjectionSelector& other) {
        for (std::size_t i = 0; i < bins_.size() && i < other.bins_.size(); ++i) {
            std::vector<std::uint32_t> kept;
            std::set_difference(bins_[i].begin(), bins_[i].end(), other.bins_[i].begin(),
                                other.bins_[i].end(), std::back_inserter(kept));
            bins_[i] = std::move(kept);
        }
    }
    void merge(const ProjectionSelector& other) {
        if (bins_.size() < other.bins_.size()) bins_.resize(other.bins_.size());
        for (std::size_t i = 0; i < other.bins_.size(); ++i) {
            std::vector<std::uint32_t> merged;
            std::set_union(bins_[i].begin(), bins_[i].end(), other.bins_[i].begin(),
                           other.bins_[i].end(), std::back_inserter(merged));
            bins_[i] = std::move(merged);
        }
    }
    bool intersects(const ProjectionSelector& other) const {
        for (std::size_t i = 0; i < bins_.size() && i < other.bins_.size(); ++i)
            for (std::uint32_t j : bins_[i])
                if (other.contains(i, j)) return true;
        return false;
    }
    const std::vector<std::uint32_t>& bins(std::size_t i) const { return bins_[i]; }
    std::size_t total_size() const {
        std::size_t n = 0;
        for (const auto& row : bins_) n += row.size();
        return n;
    }
    bool empty() const { return total_size() == 0; }
    bool operator==(const ProjectionSelector& o) const { return bins_ == o.bins_; }

  private:
    std::vector<std::vector<std::uint32_t>> bins_;
};

// Precomputed membership of the discrete ellipsoid constraint: for every
// image point i and voxel v, the bin of path_length(geom, i, center(v)).
// Stored as 32-bit bin indices, i-major; unmapped voxels hold kUnmapped.
// Memory is 4 * P * V bytes (about 0.5 GB at the 256 x 100x100x50 scale).
class VoxelBinIndex {
  public:
    static constexpr std::uint32_t kUnmapped = std::numeric_limits<std::uint32_t>::max();

    VoxelBinIndex(SensorGeometry geom, VoxelGridSpec grid, TimeAxis axis)
        : geom_(std::move(geom)), grid_(grid), axis_(axis),
          bins_(geom_.num_image_points() * grid.num_voxels(), kUnmapped) {}

    const SensorGeometry& geom() const { return geom_; }
    const VoxelGridSpec& grid() const { return grid_; }
    const TimeAxis& axis() const { return axis_; }

    std::uint32_t bin(std::size_t i, std::uint64_t v) const {
        return bins_[i * grid_.num_voxels() + v];
    }
    bool mapped(std::size_t i, std::uint64_t v) const { return bin(i, v) != kUnmapped; }

    std::uint32_t& bin_ref(std::size_t i, std::uint64_t v) {
        return bins_[i * grid_.num_voxels() + v];
    }

    // Inverse lookup, computed on demand by scanning image point i's row.
    std::vector<std::uint64_t> voxels_for_bin(std::size_t i, std::uint32_t j) const {
        std::vector<std::uint64_t> out;
        const std::uint32_t* row = bins_.data() + i * grid_.num_voxels();
        for (std::uint64_t v = 0; v < grid_.num_voxels(); ++v)
            if (row[v] == j) out.push_back(v);
        return out;
    }

    std::uint64_t num_mapped(std::size_t i) const {
        const std::uint32_t* row = bins_.data() + i * grid_.num_voxels();
        std::uint64_t n = 0;
        for (std::uint64_t v = 0; v < grid_.num_voxels(); ++v)
            if (row[v] != kUnmapped) ++n;
        return n;
    }

  private:
    SensorGeometry geom_;
    VoxelGridSpec grid_;
    TimeAxis axis_;
    std::vector<std::uint32_t> bins_;
};

inline VoxelBinIndex build_index(const SensorGeometry& geom, const VoxelGridSpec& grid,
                                 const TimeAxis& axis, unsigned workers = 1) {
    VoxelBinIndex index(geom, grid, axis);
    const std::uint64_t nvox = grid.num_voxels();
    for (std::size_t i = 0; i < geom.num_image_points(); ++i) {
        parallel_for(nvox, workers, [&, i](std::size_t b, std::size_t e) {
            for (std::uint64_t v = b; v < e; ++v) {
                const auto bin = path_to_bin(axis, path_length(geom, i, grid.voxel_center(v)));
                if (bin) index.bin_ref(i, v) = *bin;
            }
        });
    }
    return index;
}

namespace detail {
inline void require_compatible(const HistogramSet& h, const VoxelBinIndex& index) {
    if (!(h.axis == index.axis()))
        throw std::invalid_argument("back_project: histogram/index time axis mismatch");
    if (!(h.geom == index.geom()))
        throw std::invalid_argument("back_project: histogram/index geometry mismatch");
}
}  // namespace detail

// values[v] = sum_i counts[i][index(i, v)]. The per-voxel sum always runs in
// increasing image-point order and each voxel is written by exactly one
// worker, so the result is bit-identical for any worker count.
inline ConfidenceMap back_project(const HistogramSet& h, const VoxelBinIndex& index,
                                  unsigned workers = 1) {
    detail::require_compatible(h, index);
    ConfidenceMap map(index.grid());
    const std::size_t P = h.num_image_points();
    const std::uint64_t nvox = index.grid().num_voxels();
    parallel_for(nvox, workers, [&](std::size_t b, std::size_t e) {
        for (std::uint64_t v = b; v < e; ++v) {
            double acc = 0.0;
            for (std::size_t i = 0; i < P; ++i) {
                const std::uint32_t j = index.bin(i, v);
                if (j != VoxelBinIndex::kUnmapped) acc += h.at(i, j);
            }
            map.values[v] = acc;
        }
    });
    return map;
}

// As back_project, but a projection (i, j) only deposits if j is in sel(i).
inline ConfidenceMap back_project_selected(const HistogramSet& h, const VoxelBinIndex& index,
                                           const ProjectionSelector& sel, unsigned workers = 1) {
    detail::require_compatible(h, index);
    if (sel.num_image_points() != h.num_image_points())
        throw std::invalid_argument("back_project_selected: selector size mismatch");
    const std::size_t P = h.num_image_points();
    // Bitmap per image point for O(1) membership in the hot loop.
    std::vector<std::uint8_t> keep(P * std::size_t(h.axis.num_bins), 0);
    for (std::size_t i = 0; i < P; ++i)
        for (std::uint32_t j : sel.bins(i)) {
            if (j >= h.axis.num_bins)
                throw std::invalid_argument("back_project_selected: selector bin out of range");
            keep[i * h.axis.num_bins + j] = 1;
        }
    ConfidenceMap map(index.grid());
    const std::uint64_t nvox = index.grid().num_voxels();
    parallel_for(nvox, workers, [&](std::size_t b, std::size_t e) {
        for (std::uint64_t v = b; v < e; ++v) {
            double acc = 0.0;
            for (std::size_t i = 0; i < P; ++i) {
                const std::uint32_t j = index.bin(i, v);
                if (j != VoxelBinIndex::kUnmapped && keep[i * h.axis.num_bins + j])
                    acc += h.at(i, j);
            }
            map.values[v] = acc;
        }
    });
    return map;
}

// Selector of every ellipsoid (i, j) passing through at least one of the
// given voxels.
inline ProjectionSelector ellipsoids_through(const VoxelBinIndex& index,
                                             std::span<const std::uint64_t> voxels) {
    ProjectionSelector sel(index.geom().num_image_points());
    const std::uint64_t nvox = index.grid().num_voxels();
    for (std::uint64_t v : voxels)
        if (v >= nvox) throw std::invalid_argument("ellipsoids_through: voxel outside grid");
    for (std::size_t i = 0; i < index.geom().num_image_points(); ++i)
        for (std::uint64_t v : voxels) {
            const std::uint32_t j = index.bin(i, v);
            if (j != VoxelBinIndex::kUnmapped) sel.add(i, j);
        }
    return sel;
}

}  // namespace nlos
