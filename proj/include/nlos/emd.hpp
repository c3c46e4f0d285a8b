#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nlos/backproject.hpp"

namespace nlos {

struct DecomposeParams {
    double h_s_m = 0.0;          // spatial half-window, meters
    double h_c = 0.4;            // relative-intensity window in (0, 1]
    std::uint32_t max_modes = 8;
    double stop_fraction = 0.05;  // stop once residual falls below this fraction
    unsigned workers = 1;

    void validate() const {
        if (!(h_s_m > 0)) throw std::invalid_argument("DecomposeParams: h_s must be > 0");
        if (!(h_c > 0) || h_c > 1)
            throw std::invalid_argument("DecomposeParams: h_c must be in (0, 1]");
        if (max_modes < 1) throw std::invalid_argument("DecomposeParams: max_modes must be >= 1");
        if (!(stop_fraction > 0) || !(stop_fraction < 1))
            throw std::invalid_argument("DecomposeParams: stop_fraction must be in (0, 1)");
    }

    // h_s in meters converted to per-axis voxel radii (ceil).
    std::array<std::uint32_t, 3> window_radii(const VoxelGridSpec& grid) const {
        const Vec3 p = grid.pitch();
        return {static_cast<std::uint32_t>(std::ceil(h_s_m / p.x)),
                static_cast<std::uint32_t>(std::ceil(h_s_m / p.y)),
                static_cast<std::uint32_t>(std::ceil(h_s_m / p.z))};
    }
};

// One voxel cluster: a window-maximal center plus all window voxels within
// the relative-intensity band, with their total intensity.
struct Cluster {
    std::uint64_t center = 0;
    std::vector<std::uint64_t> members;  // ascending linear indices; contains center
    double sum = 0.0;
};

// One extracted object's share of the confidence map: the ellipsoids kept in
// the selective re-projection, the re-projected map, and the seed cluster.
struct EllipsoidMode {
    std::uint32_t object_rank = 0;  // 1-based extraction order
    ProjectionSelector selector;
    ConfidenceMap map;
    Cluster seed_cluster;
};

namespace detail {

// out[k] = max of in over the clamped window [k-r, k+r] along one axis,
// applied separably. Lines are addressed via (stride, count) decomposition.
inline void sliding_line_max(const double* in, double* out, std::size_t n, std::size_t stride,
                             std::uint32_t r) {
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t lo = k > r ? k - r : 0;
        const std::size_t hi = std::min(n - 1, k + r);
        double m = in[lo * stride];
        for (std::size_t t = lo + 1; t <= hi; ++t) m = std::max(m, in[t * stride]);
        out[k * stride] = m;
    }
}

// Box maximum over the axis-aligned window of Eq.-style per-axis radii.
inline std::vector<double> box_max(const ConfidenceMap& map,
                                   const std::array<std::uint32_t, 3>& radii, unsigned workers) {
    const auto [nx, ny, nz] = map.grid.dims;
    std::vector<double> a = map.values;
    std::vector<double> b(a.size());
    // x pass: lines are contiguous runs of nx.
    parallel_for(std::size_t(ny) * nz, workers, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t line = lo; line < hi; ++line)
            sliding_line_max(a.data() + line * nx, b.data() + line * nx, nx, 1, radii[0]);
    });
    // y pass: lines stride nx, one per (x, z).
    parallel_for(std::size_t(nx) * nz, workers, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t line = lo; line < hi; ++line) {
            const std::size_t ix = line % nx;
            const std::size_t iz = line / nx;
            const std::size_t base = iz * std::size_t(nx) * ny + ix;
            sliding_line_max(b.data() + base, a.data() + base, ny, nx, radii[1]);
        }
    });
    // z pass: lines stride nx*ny, one per (x, y).
    parallel_for(std::size_t(nx) * ny, workers, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t line = lo; line < hi; ++line)
            sliding_line_max(a.data() + line, b.data() + line, nz, std::size_t(nx) * ny,
                             radii[2]);
    });
    return b;
}

// Visits the window members of a candidate center in ascending linear order.
template <typename Fn>
inline void for_each_window_voxel(const VoxelGridSpec& grid,
                                  const std::array<std::uint32_t, 3>& radii, std::uint64_t center,
                                  Fn&& fn) {
    const auto c = grid.coords_of(center);
    const auto [nx, ny, nz] = grid.dims;
    const std::uint32_t x0 = c[0] > radii[0] ? c[0] - radii[0] : 0;
    const std::uint32_t x1 = std::min(nx - 1, c[0] + radii[0]);
    const std::uint32_t y0 = c[1] > radii[1] ? c[1] - radii[1] : 0;
    const std::uint32_t y1 = std::min(ny - 1, c[1] + radii[1]);
    const std::uint32_t z0 = c[2] > radii[2] ? c[2] - radii[2] : 0;
    const std::uint32_t z1 = std::min(nz - 1, c[2] + radii[2]);
    for (std::uint32_t iz = z0; iz <= z1; ++iz)
        for (std::uint32_t iy = y0; iy <= y1; ++iy)
            for (std::uint32_t ix = x0; ix <= x1; ++ix) fn(grid.linear_index(ix, iy, iz));
}

// Members and sum for a candidate center; the one-sided intensity band
// (Vc - V)/Vc <= h_c with V <= Vc. Member order is ascending linear index,
// which also fixes the floating-point summation order.
inline Cluster collect_cluster(const ConfidenceMap& map,
                               const std::array<std::uint32_t, 3>& radii, std::uint64_t center,
                               double h_c, bool keep_members) {
    Cluster cl;
    cl.center = center;
    const double vc = map.values[center];
    for_each_window_voxel(map.grid, radii, center, [&](std::uint64_t v) {
        const double diff = vc - map.values[v];
        if (diff < 0) return;
        if (diff / vc <= h_c) {
            cl.sum += map.values[v];
            if (keep_members) cl.members.push_back(v);
        }
    });
    return cl;
}

}  // namespace detail

// All clusters of the map: for every voxel that is a (tie-inclusive) maximum
// of its axis-aligned window, the voxels within the relative-intensity band.
// Sorted by descending sum, ties broken by lowest center linear index.
// Zero-valued voxels are never centers, so an all-zero map yields no clusters.
inline std::vector<Cluster> find_clusters(const ConfidenceMap& map,
                                          const DecomposeParams& params) {
    params.validate();
    const auto radii = params.window_radii(map.grid);
    const std::vector<double> bmax = detail::box_max(map, radii, params.workers);
    std::vector<Cluster> out;
    for (std::uint64_t v = 0; v < map.grid.num_voxels(); ++v)
        if (map.values[v] > 0 && map.values[v] == bmax[v])
            out.push_back(detail::collect_cluster(map, radii, v, params.h_c, true));
    std::stable_sort(out.begin(), out.end(), [](const Cluster& a, const Cluster& b) {
        if (a.sum != b.sum) return a.sum > b.sum;
        return a.center < b.center;
    });
    return out;
}

// The cluster with maximal sum (tie-break: lowest center index), or nullopt
// when no clusters exist, which signals that the decomposition is finished.
inline std::optional<std::size_t> select_strongest(const std::vector<Cluster>& clusters) {
    if (clusters.empty()) return std::nullopt;
    std::size_t best = 0;
    for (std::size_t k = 1; k < clusters.size(); ++k) {
        if (clusters[k].sum > clusters[best].sum ||
            (clusters[k].sum == clusters[best].sum && clusters[k].center < clusters[best].center))
            best = k;
    }
    return best;
}

// Equivalent to find_clusters + select_strongest, but only the winning
// cluster's member list is ever materialized.
inline std::optional<Cluster> best_cluster(const ConfidenceMap& map,
                                           const DecomposeParams& params) {
    params.validate();
    const auto radii = params.window_radii(map.grid);
    const std::vector<double> bmax = detail::box_max(map, radii, params.workers);
    bool found = false;
    double best_sum = 0.0;
    std::uint64_t best_center = 0;
    for (std::uint64_t v = 0; v < map.grid.num_voxels(); ++v) {
        if (!(map.values[v] > 0) || map.values[v] != bmax[v]) continue;
        const Cluster probe = detail::collect_cluster(map, radii, v, params.h_c, false);
        if (!found || probe.sum > best_sum) {
            found = true;
            best_sum = probe.sum;
            best_center = v;
        }
    }
    if (!found) return std::nullopt;
    return detail::collect_cluster(map, radii, best_center, params.h_c, true);
}

struct ExtractResult {
    EllipsoidMode mode;
    ConfidenceMap residual;
};

// Re-projects only the ellipsoids passing through the cluster (minus pairs
// already claimed by earlier modes) and subtracts them from the map. The
// selector is a subset of the projections composing the map, so the residual
// is nonnegative up to float rounding of non-integer counts; dust below
// 1e-9 of the map maximum is clamped to zero, anything worse is a logic error.
inline ExtractResult extract_mode(const HistogramSet& h, const VoxelBinIndex& index,
                                  const ConfidenceMap& map, const Cluster& cluster,
                                  const ProjectionSelector& claimed = {}, unsigned workers = 1) {
    if (cluster.members.empty()) throw std::invalid_argument("extract_mode: empty cluster");
    ExtractResult r;
    r.mode.selector = ellipsoids_through(index, cluster.members);
    r.mode.selector.remove_all(claimed);
    r.mode.map = back_project_selected(h, index, r.mode.selector, workers);
    r.mode.seed_cluster = cluster;
    r.residual = ConfidenceMap(map.grid);
    const double tol = 1e-9 * std::max(1.0, map.max_value());
    for (std::uint64_t v = 0; v < map.grid.num_voxels(); ++v) {
        double d = map.values[v] - r.mode.map.values[v];
        if (d < 0) {
            if (d < -tol)
                throw std::logic_error("extract_mode: residual went negative beyond tolerance");
            d = 0.0;
        }
        r.residual.values[v] = d;
    }
    return r;
}

enum class StopReason { max_modes, residual_below_stop, no_clusters, no_progress };

inline const char* to_string(StopReason s) {
    switch (s) {
        case StopReason::max_modes: return "max_modes";
        case StopReason::residual_below_stop: return "residual_below_stop";
        case StopReason::no_clusters: return "no_clusters";
        case StopReason::no_progress: return "no_progress";
    }
    return "?";
}

struct IterationStats {
    std::uint32_t rank = 0;
    std::uint64_t cluster_center = 0;
    Vec3 cluster_center_m;
    std::size_t member_count = 0;
    std::size_t selector_size = 0;
    double mode_total = 0.0;
    double residual_total = 0.0;
    double residual_fraction = 0.0;
};

struct DecomposeResult {
    std::vector<EllipsoidMode> modes;
    ConfidenceMap final_residual;
    StopReason stop = StopReason::no_clusters;
    std::vector<IterationStats> iterations;
    double initial_total = 0.0;
};

// The full decomposition loop: cluster, pick the strongest, re-project its
// ellipsoids, subtract, repeat. Each (i, j) projection is claimed by at most
// one mode; the residual total strictly decreases every iteration or the
// loop ends with StopReason::no_progress.
inline DecomposeResult decompose(const HistogramSet& h, const VoxelBinIndex& index,
                                 const DecomposeParams& params) {
    params.validate();
    DecomposeResult result;
    ConfidenceMap current = back_project(h, index, params.workers);
    result.initial_total = current.total();
    ProjectionSelector claimed(h.num_image_points());
    double residual_total = result.initial_total;
    while (result.modes.size() < params.max_modes) {
        if (residual_total < params.stop_fraction * result.initial_total) {
            result.stop = StopReason::residual_below_stop;
            break;
        }
        auto cluster = best_cluster(current, params);
        if (!cluster) {
            result.stop = StopReason::no_clusters;
            break;
        }
        auto extracted = extract_mode(h, index, current, *cluster, claimed, params.workers);
        const double mode_total = extracted.mode.map.total();
        if (!(mode_total > 0)) {
            result.stop = StopReason::no_progress;
            break;
        }
        extracted.mode.object_rank = static_cast<std::uint32_t>(result.modes.size() + 1);
        claimed.merge(extracted.mode.selector);
        current = std::move(extracted.residual);
        residual_total = current.total();

        IterationStats it;
        it.rank = extracted.mode.object_rank;
        it.cluster_center = cluster->center;
        it.cluster_center_m = index.grid().voxel_center(cluster->center);
        it.member_count = cluster->members.size();
        it.selector_size = extracted.mode.selector.total_size();
        it.mode_total = mode_total;
        it.residual_total = residual_total;
        it.residual_fraction =
            result.initial_total > 0 ? residual_total / result.initial_total : 0.0;
        result.iterations.push_back(it);
        result.modes.push_back(std::move(extracted.mode));
        result.stop = StopReason::max_modes;
    }
    result.final_residual = std::move(current);
    return result;
}

}  // namespace nlos
