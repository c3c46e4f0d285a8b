#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlos/backproject.hpp"
#include "nlos/forward.hpp"
#include "nlos/recon.hpp"

namespace nlos {

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

namespace detail {

// All binary containers are little-endian regardless of host.
inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}
inline void put_vec3(std::string& out, const Vec3& v) {
    put_f64(out, v.x);
    put_f64(out, v.y);
    put_f64(out, v.z);
}

class Reader {
  public:
    explicit Reader(std::string data) : data_(std::move(data)) {}
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(data_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(data_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    Vec3 vec3() {
        const double x = f64(), y = f64(), z = f64();
        return {x, y, z};
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool at_end() const { return pos_ == data_.size(); }

  private:
    void need(std::size_t n) const {
        if (pos_ + n > data_.size()) throw io_error("truncated file");
    }
    std::string data_;
    std::size_t pos_ = 0;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open file: " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

}  // namespace detail

// Writes via a temp file in the same directory plus rename, so readers never
// observe a partial file.
inline void atomic_write(const std::filesystem::path& path, const std::string& data) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot open file for writing: " + tmp.string());
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        if (!out) throw io_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Histogram container (.nlhg): header with magic "NLHG", version, geometry
// (coordinates in meters, r1/r4 in millimeters, bin width in picoseconds),
// provenance, then row-major 8-byte float counts.
// ---------------------------------------------------------------------------

inline std::string serialize_histograms(const HistogramSet& h) {
    std::string out;
    out += "NLHG";
    detail::put_u32(out, 1);  // version
    detail::put_u32(out, static_cast<std::uint32_t>(h.num_image_points()));
    detail::put_u32(out, h.axis.num_bins);
    std::uint32_t flags = 0;
    if (h.meta.noise) flags |= 1u;
    if (h.meta.fwhm_s > 0) flags |= 2u;
    if (h.meta.quantized) flags |= 4u;
    detail::put_u32(out, flags);
    detail::put_f64(out, h.axis.bin_width_s * 1e12);  // bin_width_ps
    detail::put_f64(out, h.geom.r1() * 1e3);          // r1_mm
    detail::put_f64(out, h.meta.fwhm_s * 1e12);       // fwhm_ps
    detail::put_u64(out, h.meta.seed);
    detail::put_vec3(out, h.geom.laser_pos());
    detail::put_vec3(out, h.geom.detector_pos());
    detail::put_vec3(out, h.geom.source_point());
    for (std::size_t i = 0; i < h.num_image_points(); ++i)
        detail::put_f64(out, h.geom.r4(i) * 1e3);  // r4_mm
    for (const auto& p : h.geom.image_points()) detail::put_vec3(out, p);
    for (double c : h.counts) detail::put_f64(out, c);
    return out;
}

inline void save_histograms(const std::filesystem::path& path, const HistogramSet& h) {
    atomic_write(path, serialize_histograms(h));
}

inline HistogramSet load_histograms(const std::filesystem::path& path) {
    detail::Reader r(detail::read_file(path));
    if (r.bytes(4) != "NLHG") throw io_error("not a histogram file: " + path.string());
    if (r.u32() != 1) throw io_error("unsupported histogram file version");
    const std::uint32_t num_points = r.u32();
    const std::uint32_t num_bins = r.u32();
    const std::uint32_t flags = r.u32();
    const double bin_width_ps = r.f64();
    const double r1_mm = r.f64();
    const double fwhm_ps = r.f64();
    const std::uint64_t seed = r.u64();
    const Vec3 laser = r.vec3();
    const Vec3 detector = r.vec3();
    const Vec3 source = r.vec3();
    std::vector<double> r4_m(num_points);
    for (auto& x : r4_m) x = r.f64() * 1e-3;
    std::vector<Point3> image_points(num_points);
    for (auto& p : image_points) p = r.vec3();

    SensorGeometry geom(laser, detector, source, std::move(image_points), r1_mm * 1e-3, r4_m);
    HistogramSet h(std::move(geom), TimeAxis(bin_width_ps * 1e-12, num_bins));
    for (auto& c : h.counts) c = r.f64();
    if (!r.at_end()) throw io_error("trailing bytes in histogram file");
    h.meta.noise = (flags & 1u) != 0;
    h.meta.quantized = (flags & 4u) != 0;
    h.meta.fwhm_s = fwhm_ps * 1e-12;
    h.meta.seed = seed;
    for (double c : h.counts)
        if (c < 0) throw io_error("negative count in histogram file");
    return h;
}

inline std::string histograms_csv(const HistogramSet& h) {
    std::string out;
    char buf[32];
    for (std::size_t i = 0; i < h.num_image_points(); ++i) {
        for (std::uint32_t j = 0; j < h.axis.num_bins; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", h.at(i, j));
            if (j) out += ',';
            out += buf;
        }
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Confidence map container (.nlcm): magic "NLCM", grid spec, provenance
// hash, then dense 8-byte floats in z-major order (z slowest, x fastest --
// identical to the in-memory linear order).
// ---------------------------------------------------------------------------

inline std::string serialize_map(const ConfidenceMap& map) {
    std::string out;
    out += "NLCM";
    detail::put_u32(out, 1);
    detail::put_u32(out, map.grid.dims[0]);
    detail::put_u32(out, map.grid.dims[1]);
    detail::put_u32(out, map.grid.dims[2]);
    detail::put_vec3(out, map.grid.origin);
    detail::put_vec3(out, map.grid.extent);
    detail::put_u64(out, map.provenance_hash);
    for (double v : map.values) detail::put_f64(out, v);
    return out;
}

inline void save_map(const std::filesystem::path& path, const ConfidenceMap& map) {
    atomic_write(path, serialize_map(map));
}

inline ConfidenceMap load_map(const std::filesystem::path& path) {
    detail::Reader r(detail::read_file(path));
    if (r.bytes(4) != "NLCM") throw io_error("not a confidence map file: " + path.string());
    if (r.u32() != 1) throw io_error("unsupported confidence map version");
    const std::uint32_t nx = r.u32();
    const std::uint32_t ny = r.u32();
    const std::uint32_t nz = r.u32();
    const Vec3 origin = r.vec3();
    const Vec3 extent = r.vec3();
    ConfidenceMap map(VoxelGridSpec(origin, extent, {nx, ny, nz}));
    map.provenance_hash = r.u64();
    for (auto& v : map.values) v = r.f64();
    if (!r.at_end()) throw io_error("trailing bytes in confidence map file");
    return map;
}

// ---------------------------------------------------------------------------
// Reconstruction container (.nlrec): magic "NLRC", grid spec, label count,
// then one u32 label per voxel in the same z-major order. The companion CSV
// lists labeled voxel centers as x_m,y_m,z_m,label.
// ---------------------------------------------------------------------------

inline std::string serialize_reconstruction(const Reconstruction& rec) {
    std::string out;
    out += "NLRC";
    detail::put_u32(out, 1);
    detail::put_u32(out, rec.grid.dims[0]);
    detail::put_u32(out, rec.grid.dims[1]);
    detail::put_u32(out, rec.grid.dims[2]);
    detail::put_vec3(out, rec.grid.origin);
    detail::put_vec3(out, rec.grid.extent);
    std::uint32_t num_labels = 0;
    for (std::uint32_t l : rec.labels) num_labels = std::max(num_labels, l);
    detail::put_u32(out, num_labels);
    for (std::uint32_t l : rec.labels) detail::put_u32(out, l);
    return out;
}

inline void save_reconstruction(const std::filesystem::path& path, const Reconstruction& rec) {
    atomic_write(path, serialize_reconstruction(rec));
}

inline Reconstruction load_reconstruction(const std::filesystem::path& path) {
    detail::Reader r(detail::read_file(path));
    if (r.bytes(4) != "NLRC") throw io_error("not a reconstruction file: " + path.string());
    if (r.u32() != 1) throw io_error("unsupported reconstruction version");
    const std::uint32_t nx = r.u32();
    const std::uint32_t ny = r.u32();
    const std::uint32_t nz = r.u32();
    const Vec3 origin = r.vec3();
    const Vec3 extent = r.vec3();
    Reconstruction rec(VoxelGridSpec(origin, extent, {nx, ny, nz}));
    const std::uint32_t num_labels = r.u32();
    for (auto& l : rec.labels) l = r.u32();
    if (!r.at_end()) throw io_error("trailing bytes in reconstruction file");
    rec.status = ReconStatus::ok;
    bool any = false;
    for (std::uint32_t l : rec.labels) any = any || l != 0;
    if (!any) rec.status = ReconStatus::empty;
    rec.compute_stats(num_labels);
    return rec;
}

inline std::string reconstruction_csv(const Reconstruction& rec) {
    std::string out = "x_m,y_m,z_m,label\n";
    char buf[96];
    for (std::uint64_t v = 0; v < rec.labels.size(); ++v) {
        if (rec.labels[v] == 0) continue;
        const Point3 c = rec.grid.voxel_center(v);
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%u\n", c.x, c.y, c.z, rec.labels[v]);
        out += buf;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Axis-aligned slices: one plane of a map as a grayscale PGM (min-max
// normalized) and as full-precision CSV. Plane axes keep (x, y, z) order:
// z-slice is x across / y down, y-slice x/z, x-slice y/z.
// ---------------------------------------------------------------------------

struct Slice {
    std::uint32_t width = 0, height = 0;
    std::vector<double> values;  // row-major, height rows of width
};

inline Slice extract_slice(const ConfidenceMap& map, char plane, std::uint32_t index) {
    const auto [nx, ny, nz] = map.grid.dims;
    Slice s;
    auto at = [&](std::uint32_t ix, std::uint32_t iy, std::uint32_t iz) {
        return map.values[map.grid.linear_index(ix, iy, iz)];
    };
    switch (plane) {
        case 'z':
            if (index >= nz) throw std::out_of_range("slice index out of range");
            s.width = nx;
            s.height = ny;
            for (std::uint32_t iy = 0; iy < ny; ++iy)
                for (std::uint32_t ix = 0; ix < nx; ++ix) s.values.push_back(at(ix, iy, index));
            break;
        case 'y':
            if (index >= ny) throw std::out_of_range("slice index out of range");
            s.width = nx;
            s.height = nz;
            for (std::uint32_t iz = 0; iz < nz; ++iz)
                for (std::uint32_t ix = 0; ix < nx; ++ix) s.values.push_back(at(ix, index, iz));
            break;
        case 'x':
            if (index >= nx) throw std::out_of_range("slice index out of range");
            s.width = ny;
            s.height = nz;
            for (std::uint32_t iz = 0; iz < nz; ++iz)
                for (std::uint32_t iy = 0; iy < ny; ++iy) s.values.push_back(at(index, iy, iz));
            break;
        default:
            throw std::invalid_argument("plane must be x, y or z");
    }
    return s;
}

inline std::string slice_pgm(const Slice& s) {
    double lo = s.values.empty() ? 0.0 : s.values[0];
    double hi = lo;
    for (double v : s.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::string out = "P5\n" + std::to_string(s.width) + " " + std::to_string(s.height) + "\n255\n";
    for (double v : s.values) {
        const double g = hi > lo ? 255.0 * (v - lo) / (hi - lo) : 0.0;
        out.push_back(static_cast<char>(static_cast<int>(g + 0.5)));
    }
    return out;
}

inline std::string slice_csv(const Slice& s) {
    std::string out;
    char buf[32];
    for (std::uint32_t r = 0; r < s.height; ++r) {
        for (std::uint32_t c = 0; c < s.width; ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", s.values[std::size_t(r) * s.width + c]);
            if (c) out += ',';
            out += buf;
        }
        out += '\n';
    }
    return out;
}

}  // namespace nlos
