#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlos/geometry.hpp"

namespace nlos {

// Measurement geometry: a laser illuminates the source point S on the wall,
// the detector stares at one image point I_i at a time. r1 = laser->S and
// r4[i] = I_i->detector are object-independent and fixed at construction.
class SensorGeometry {
  public:
    SensorGeometry(Point3 laser, Point3 detector, Point3 source_point,
                   std::vector<Point3> image_points)
        : laser_(laser),
          detector_(detector),
          source_(source_point),
          image_points_(std::move(image_points)) {
        require_finite(laser_, "laser_pos");
        require_finite(detector_, "detector_pos");
        require_finite(source_, "source_point");
        if (image_points_.empty())
            throw std::invalid_argument("SensorGeometry: image_points must be non-empty");
        r4_.reserve(image_points_.size());
        for (std::size_t i = 0; i < image_points_.size(); ++i) {
            require_finite(image_points_[i], "image_point");
            for (std::size_t k = 0; k < i; ++k)
                if (image_points_[k] == image_points_[i])
                    throw std::invalid_argument("SensorGeometry: duplicate image points");
            r4_.push_back(distance(image_points_[i], detector_));
        }
        r1_ = distance(laser_, source_);
    }

    // Construction from stored geometry (file load path): r1/r4 are taken from
    // the file and cross-checked against the coordinates to 1e-9 m.
    SensorGeometry(Point3 laser, Point3 detector, Point3 source_point,
                   std::vector<Point3> image_points, double r1,
                   const std::vector<double>& r4)
        : SensorGeometry(laser, detector, source_point, std::move(image_points)) {
        if (std::abs(r1 - r1_) > 1e-9)
            throw std::invalid_argument("SensorGeometry: stored r1 disagrees with coordinates");
        if (r4.size() != r4_.size())
            throw std::invalid_argument("SensorGeometry: r4 list size mismatch");
        for (std::size_t i = 0; i < r4.size(); ++i)
            if (std::abs(r4[i] - r4_[i]) > 1e-9)
                throw std::invalid_argument("SensorGeometry: stored r4 disagrees with coordinates");
    }

    const Point3& laser_pos() const { return laser_; }
    const Point3& detector_pos() const { return detector_; }
    const Point3& source_point() const { return source_; }
    const std::vector<Point3>& image_points() const { return image_points_; }
    std::size_t num_image_points() const { return image_points_.size(); }
    double r1() const { return r1_; }
    double r4(std::size_t i) const { return r4_.at(i); }
    const std::vector<double>& r4_all() const { return r4_; }

    bool operator==(const SensorGeometry& o) const {
        return laser_ == o.laser_ && detector_ == o.detector_ && source_ == o.source_ &&
               image_points_ == o.image_points_;
    }

  private:
    Point3 laser_, detector_, source_;
    std::vector<Point3> image_points_;
    double r1_ = 0.0;
    std::vector<double> r4_;
};

// Four-segment path laser -> S -> p -> I_i -> detector.
inline double path_length(const SensorGeometry& geom, std::size_t image_index, const Point3& p) {
    if (image_index >= geom.num_image_points())
        throw std::out_of_range("path_length: image_index out of range");
    const double r2 = distance(geom.source_point(), p);
    const double r3 = distance(geom.image_points()[image_index], p);
    return geom.r1() + r2 + r3 + geom.r4(image_index);
}

// Uniform TCSPC time axis. Bin j covers path lengths
// [j*c*bin_width, (j+1)*c*bin_width).
struct TimeAxis {
    double bin_width_s = 0.0;
    std::uint32_t num_bins = 0;

    TimeAxis() = default;
    TimeAxis(double bin_width, std::uint32_t bins) : bin_width_s(bin_width), num_bins(bins) {
        if (!(bin_width_s > 0.0) || !std::isfinite(bin_width_s))
            throw std::invalid_argument("TimeAxis: bin_width must be > 0");
        if (num_bins == 0) throw std::invalid_argument("TimeAxis: num_bins must be >= 1");
    }

    double bin_path_width() const { return kSpeedOfLight * bin_width_s; }
    double max_path() const { return bin_path_width() * num_bins; }
    bool operator==(const TimeAxis& o) const {
        return bin_width_s == o.bin_width_s && num_bins == o.num_bins;
    }
};

inline std::optional<std::uint32_t> path_to_bin(const TimeAxis& axis, double path_m) {
    if (path_m < 0.0 || !std::isfinite(path_m))
        throw std::invalid_argument("path_to_bin: path must be finite and >= 0");
    const double j = std::floor(path_m / axis.bin_path_width());
    if (j >= static_cast<double>(axis.num_bins)) return std::nullopt;
    return static_cast<std::uint32_t>(j);
}

// Dense voxel grid over an axis-aligned box. The single authoritative
// index->center mapping is origin + ((i+0.5)*Lx/Nx, ...). Linear order is
// z-major: v = (iz*Ny + iy)*Nx + ix.
struct VoxelGridSpec {
    Point3 origin;
    Vec3 extent;                        // (Lx, Ly, Lz), meters
    std::array<std::uint32_t, 3> dims;  // (Nx, Ny, Nz)

    VoxelGridSpec() : extent(1, 1, 1), dims{1, 1, 1} {}
    VoxelGridSpec(Point3 origin_, Vec3 extent_, std::array<std::uint32_t, 3> dims_)
        : origin(origin_), extent(extent_), dims(dims_) {
        require_finite(origin, "grid origin");
        if (!(extent.x > 0 && extent.y > 0 && extent.z > 0))
            throw std::invalid_argument("VoxelGridSpec: extent components must be > 0");
        if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1)
            throw std::invalid_argument("VoxelGridSpec: dims components must be >= 1");
    }

    std::uint64_t num_voxels() const {
        return std::uint64_t(dims[0]) * dims[1] * dims[2];
    }
    Vec3 pitch() const {
        return {extent.x / dims[0], extent.y / dims[1], extent.z / dims[2]};
    }
    std::uint64_t linear_index(std::uint32_t ix, std::uint32_t iy, std::uint32_t iz) const {
        return (std::uint64_t(iz) * dims[1] + iy) * dims[0] + ix;
    }
    std::array<std::uint32_t, 3> coords_of(std::uint64_t v) const {
        const std::uint32_t ix = static_cast<std::uint32_t>(v % dims[0]);
        const std::uint32_t iy = static_cast<std::uint32_t>((v / dims[0]) % dims[1]);
        const std::uint32_t iz = static_cast<std::uint32_t>(v / (std::uint64_t(dims[0]) * dims[1]));
        return {ix, iy, iz};
    }
    Point3 voxel_center(std::uint32_t ix, std::uint32_t iy, std::uint32_t iz) const {
        return {origin.x + (ix + 0.5) * extent.x / dims[0],
                origin.y + (iy + 0.5) * extent.y / dims[1],
                origin.z + (iz + 0.5) * extent.z / dims[2]};
    }
    Point3 voxel_center(std::uint64_t v) const {
        const auto c = coords_of(v);
        return voxel_center(c[0], c[1], c[2]);
    }
    // Voxel containing p, or nullopt if p lies outside the box.
    std::optional<std::uint64_t> voxel_of(const Point3& p) const {
        const Vec3 rel = p - origin;
        const double fx = rel.x / extent.x * dims[0];
        const double fy = rel.y / extent.y * dims[1];
        const double fz = rel.z / extent.z * dims[2];
        if (fx < 0 || fy < 0 || fz < 0) return std::nullopt;
        const auto ix = static_cast<std::uint64_t>(fx);
        const auto iy = static_cast<std::uint64_t>(fy);
        const auto iz = static_cast<std::uint64_t>(fz);
        if (ix >= dims[0] || iy >= dims[1] || iz >= dims[2]) return std::nullopt;
        return linear_index(static_cast<std::uint32_t>(ix), static_cast<std::uint32_t>(iy),
                            static_cast<std::uint32_t>(iz));
    }
    bool operator==(const VoxelGridSpec& o) const {
        return origin == o.origin && extent == o.extent && dims == o.dims;
    }
};

// One hidden object as a reflective point cloud. normals is either empty
// (cosine factors default to 1) or parallel to points.
struct SceneObject {
    std::string id;
    double reflectivity = 1.0;  // in (0, 1]
    std::vector<Point3> points;
    std::vector<Vec3> normals;

    SceneObject() = default;
    SceneObject(std::string id_, double reflectivity_, std::vector<Point3> points_,
                std::vector<Vec3> normals_ = {})
        : id(std::move(id_)),
          reflectivity(reflectivity_),
          points(std::move(points_)),
          normals(std::move(normals_)) {
        if (!(reflectivity > 0.0) || reflectivity > 1.0)
            throw std::invalid_argument("SceneObject: reflectivity must be in (0, 1]");
        if (points.empty()) throw std::invalid_argument("SceneObject: points must be non-empty");
        if (!normals.empty() && normals.size() != points.size())
            throw std::invalid_argument("SceneObject: normals must be empty or match points");
        for (const auto& p : points) require_finite(p, "object point");
    }
};

struct SceneDescription {
    SensorGeometry geometry;
    std::vector<SceneObject> objects;
};

enum class PlateShape { round, triangle, square, rect };

inline PlateShape plate_shape_from_string(const std::string& s) {
    if (s == "round") return PlateShape::round;
    if (s == "triangle") return PlateShape::triangle;
    if (s == "square") return PlateShape::square;
    if (s == "rect") return PlateShape::rect;
    throw std::invalid_argument("unknown plate shape: '" + s + "'");
}

inline std::string to_string(PlateShape s) {
    switch (s) {
        case PlateShape::round: return "round";
        case PlateShape::triangle: return "triangle";
        case PlateShape::square: return "square";
        case PlateShape::rect: return "rect";
    }
    return "?";
}

// Flat plate primitive, sampled into a point cloud on a regular in-plane
// lattice with the given spacing. size is (side, side) for square, diameter
// for round, side length for triangle (equilateral, one vertex along +v),
// (width, height) for rect.
struct PlateSpec {
    PlateShape shape = PlateShape::square;
    Point3 center;
    Vec3 normal{0, 0, -1};
    double size_u = 0.0;
    double size_v = 0.0;  // rect only; ignored otherwise
    double spacing = 0.0;
};

namespace detail {
// Deterministic orthonormal in-plane basis for a plate normal.
inline std::pair<Vec3, Vec3> plane_basis(const Vec3& normal) {
    const Vec3 n = normal.normalized();
    const Vec3 seed = std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    const Vec3 u = n.cross(seed).normalized();
    const Vec3 v = n.cross(u);
    return {u, v};
}

inline bool plate_contains(const PlateSpec& spec, double a, double b) {
    switch (spec.shape) {
        case PlateShape::square:
            return std::abs(a) <= spec.size_u / 2 && std::abs(b) <= spec.size_u / 2;
        case PlateShape::rect:
            return std::abs(a) <= spec.size_u / 2 && std::abs(b) <= spec.size_v / 2;
        case PlateShape::round:
            return a * a + b * b <= (spec.size_u / 2) * (spec.size_u / 2);
        case PlateShape::triangle: {
            // Equilateral, side s, centroid at origin, apex along +b.
            const double s = spec.size_u;
            const double r_in = s / (2.0 * std::sqrt(3.0));  // inradius
            if (b < -r_in) return false;
            // Two slanted edges: b <= -sqrt(3)*a + 2*r_in and mirrored.
            return b <= -std::sqrt(3.0) * a + 2.0 * r_in && b <= std::sqrt(3.0) * a + 2.0 * r_in;
        }
    }
    return false;
}
}  // namespace detail

inline std::vector<Point3> sample_plate(const PlateSpec& spec) {
    if (!(spec.spacing > 0.0)) throw std::invalid_argument("sample_plate: spacing must be > 0");
    if (!(spec.size_u > 0.0)) throw std::invalid_argument("sample_plate: size must be > 0");
    if (spec.shape == PlateShape::rect && !(spec.size_v > 0.0))
        throw std::invalid_argument("sample_plate: rect needs two sizes");
    const auto [u, v] = detail::plane_basis(spec.normal);
    const double half_u = spec.size_u / 2;
    const double half_v = (spec.shape == PlateShape::rect ? spec.size_v : spec.size_u) / 2;
    // Triangle vertices reach the circumradius s/sqrt(3) > s/2 along +v.
    const double reach_v =
        spec.shape == PlateShape::triangle ? spec.size_u / std::sqrt(3.0) : half_v;
    const int ka = static_cast<int>(std::floor(half_u / spec.spacing));
    const int kb = static_cast<int>(std::floor(reach_v / spec.spacing));
    std::vector<Point3> pts;
    for (int ib = -kb; ib <= kb; ++ib) {
        for (int ia = -ka; ia <= ka; ++ia) {
            const double a = ia * spec.spacing;
            const double b = ib * spec.spacing;
            if (!detail::plate_contains(spec, a, b)) continue;
            pts.push_back(spec.center + u * a + v * b);
        }
    }
    return pts;
}

inline SceneObject make_plate_object(const std::string& id, double reflectivity,
                                     const PlateSpec& spec) {
    auto pts = sample_plate(spec);
    std::vector<Vec3> normals(pts.size(), spec.normal.normalized());
    return SceneObject(id, reflectivity, std::move(pts), std::move(normals));
}

}  // namespace nlos
