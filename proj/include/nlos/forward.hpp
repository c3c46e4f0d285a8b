#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlos/parallel.hpp"
#include "nlos/scene.hpp"

namespace nlos {

struct Provenance {
    std::uint64_t seed = 0;
    double fwhm_s = 0.0;
    bool noise = false;
    bool quantized = false;
};

// Per image-point time histograms. counts is row-major [P x num_bins],
// nonnegative; integer-valued when quantized and not yet broadened.
struct HistogramSet {
    SensorGeometry geom;
    TimeAxis axis;
    std::vector<double> counts;
    Provenance meta;

    HistogramSet(SensorGeometry g, TimeAxis a)
        : geom(std::move(g)), axis(a),
          counts(geom.num_image_points() * std::size_t(a.num_bins), 0.0) {}

    std::size_t num_image_points() const { return geom.num_image_points(); }
    double& at(std::size_t i, std::uint32_t j) { return counts[i * axis.num_bins + j]; }
    double at(std::size_t i, std::uint32_t j) const { return counts[i * axis.num_bins + j]; }
    const double* row(std::size_t i) const { return counts.data() + i * axis.num_bins; }
    double* row(std::size_t i) { return counts.data() + i * axis.num_bins; }

    double total() const {
        double s = 0.0;
        for (double c : counts) s += c;
        return s;
    }
};

struct SimulateParams {
    double photon_scale = 1.0;     // global scale A of the radiometric weight
    double broadening_fwhm_s = 0;  // 0 disables broadening
    bool quantize = false;         // round per-bin totals to integers (pre-broadening)
    bool noise = false;
    std::uint64_t seed = 0;
    unsigned workers = 1;
};

namespace detail {

// Three-bounce Lambertian weight: A * rho * cos_in * cos_out / (r2^2 * r3^2).
// Points without normals use cosine factors of 1.
inline double radiometric_weight(double photon_scale, double reflectivity, const Point3& p,
                                 const Vec3* normal, const Point3& source,
                                 const Point3& image_point) {
    const Vec3 to_s = source - p;
    const Vec3 to_i = image_point - p;
    const double r2 = to_s.norm();
    const double r3 = to_i.norm();
    if (r2 == 0.0 || r3 == 0.0)
        throw std::domain_error("simulate: object point coincides with a wall point");
    double cos_in = 1.0, cos_out = 1.0;
    if (normal != nullptr) {
        cos_in = std::max(0.0, normal->dot(to_s) / r2);
        cos_out = std::max(0.0, normal->dot(to_i) / r3);
    }
    return photon_scale * reflectivity * cos_in * cos_out / (r2 * r2 * r3 * r3);
}

// Portable uniform in (0,1) from the engine's raw 64-bit output;
// std::uniform_real_distribution is implementation-defined.
inline double uniform_open(std::uint64_t raw) {
    return (static_cast<double>(raw >> 11) + 0.5) * 0x1p-53;
}

// Exact Poisson draw via exponential interarrival times; O(lambda) but
// deterministic across platforms, unlike std::poisson_distribution.
template <typename Engine>
std::uint64_t poisson_draw(Engine& eng, double lambda) {
    if (lambda <= 0.0) return 0;
    std::uint64_t k = 0;
    double s = 0.0;
    for (;;) {
        s += -std::log(uniform_open(eng()));
        if (s > lambda) return k;
        ++k;
    }
}

}  // namespace detail

// Convolves each row with a discrete Gaussian, sigma = fwhm / (2*sqrt(2*ln 2)),
// kernel truncated at +/-4 sigma. Mass that would fall off a row end is kept
// by renormalizing the clipped kernel per source bin, so row totals are
// preserved for any row support.
inline HistogramSet broaden(const HistogramSet& h, double fwhm_s, unsigned workers = 1) {
    if (!(fwhm_s > 0.0)) throw std::invalid_argument("broaden: fwhm must be > 0");
    const double sigma = fwhm_s / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    const double sigma_bins = sigma / h.axis.bin_width_s;
    const int radius = static_cast<int>(std::ceil(4.0 * sigma_bins));
    std::vector<double> kernel(2 * radius + 1);
    double ksum = 0.0;
    for (int t = -radius; t <= radius; ++t) {
        kernel[t + radius] = std::exp(-0.5 * (t / sigma_bins) * (t / sigma_bins));
        ksum += kernel[t + radius];
    }
    for (double& k : kernel) k /= ksum;

    HistogramSet out(h.geom, h.axis);
    out.meta = h.meta;
    out.meta.fwhm_s = fwhm_s;
    const int nbins = static_cast<int>(h.axis.num_bins);
    parallel_for(h.num_image_points(), workers, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const double* src = h.row(i);
            double* dst = out.row(i);
            for (int j = 0; j < nbins; ++j) {
                if (src[j] == 0.0) continue;
                const int lo = std::max(-radius, -j);
                const int hi = std::min(radius, nbins - 1 - j);
                double clipped = 0.0;
                for (int t = lo; t <= hi; ++t) clipped += kernel[t + radius];
                const double scale = src[j] / clipped;
                for (int t = lo; t <= hi; ++t) dst[j + t] += scale * kernel[t + radius];
            }
        }
    });
    return out;
}

// Size of the truncated broadening kernel in bins (diagnostic).
inline int broaden_kernel_support(double fwhm_s, double bin_width_s) {
    const double sigma = fwhm_s / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    return 2 * static_cast<int>(std::ceil(4.0 * sigma / bin_width_s)) + 1;
}

// Replaces each bin by a Poisson draw with that mean. Bins are visited in
// row-major order with one engine, so the result depends only on the seed.
inline HistogramSet apply_noise(const HistogramSet& h, std::uint64_t seed) {
    HistogramSet out(h.geom, h.axis);
    out.meta = h.meta;
    out.meta.noise = true;
    out.meta.seed = seed;
    std::mt19937_64 eng(seed);
    for (std::size_t k = 0; k < h.counts.size(); ++k)
        out.counts[k] = static_cast<double>(detail::poisson_draw(eng, h.counts[k]));
    return out;
}

// Forward transmission: every object point deposits its radiometric weight
// into the bin of its four-segment path, per image point. Points whose path
// exceeds the time axis are an error (silent truncation is not allowed).
inline HistogramSet simulate(const std::vector<SceneObject>& objects, const SensorGeometry& geom,
                             const TimeAxis& axis, const SimulateParams& params) {
    if (objects.empty()) throw std::invalid_argument("simulate: scene has no objects");
    if (params.broadening_fwhm_s < 0)
        throw std::invalid_argument("simulate: broadening_fwhm must be >= 0");

    HistogramSet h(geom, axis);
    h.meta.quantized = params.quantize;

    // Out-of-range scan first so the error does not depend on worker layout.
    std::ostringstream offenders;
    int num_offending = 0;
    for (const auto& obj : objects) {
        for (const auto& p : obj.points) {
            for (std::size_t i = 0; i < geom.num_image_points(); ++i) {
                const double len = path_length(geom, i, p);
                if (!path_to_bin(axis, len)) {
                    if (num_offending < 8)
                        offenders << "\n  object '" << obj.id << "' point (" << p.x << ", " << p.y
                                  << ", " << p.z << ") path " << len << " m >= axis range "
                                  << axis.max_path() << " m (image point " << i << ")";
                    ++num_offending;
                    break;
                }
            }
        }
    }
    if (num_offending > 0) {
        std::ostringstream msg;
        msg << "simulate: " << num_offending
            << " object point(s) exceed the time axis:" << offenders.str();
        throw std::domain_error(msg.str());
    }

    parallel_for(geom.num_image_points(), params.workers, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            double* row = h.row(i);
            for (const auto& obj : objects) {
                for (std::size_t k = 0; k < obj.points.size(); ++k) {
                    const Point3& p = obj.points[k];
                    const Vec3* n = obj.normals.empty() ? nullptr : &obj.normals[k];
                    const double len = path_length(geom, i, p);
                    const auto bin = path_to_bin(axis, len);
                    const double w = detail::radiometric_weight(
                        params.photon_scale, obj.reflectivity, p, n, geom.source_point(),
                        geom.image_points()[i]);
                    row[*bin] += w;
                }
            }
            if (params.quantize)
                for (std::uint32_t j = 0; j < axis.num_bins; ++j) row[j] = std::round(row[j]);
        }
    });

    if (params.broadening_fwhm_s > 0) h = broaden(h, params.broadening_fwhm_s, params.workers);
    if (params.noise) h = apply_noise(h, params.seed);
    return h;
}

// Per-object record of which (image point, bin) pairs its points populated.
struct ObjectBinUsage {
    std::string object_id;
    // bins[i] = sorted unique bin indices fed by this object at image point i
    std::vector<std::vector<std::uint32_t>> bins;
};

struct TracedSimulation {
    HistogramSet histograms;
    std::vector<ObjectBinUsage> usage;
};

// simulate() plus bookkeeping of the (i, j) pairs each object fed.
inline TracedSimulation simulate_traced(const std::vector<SceneObject>& objects,
                                        const SensorGeometry& geom, const TimeAxis& axis,
                                        const SimulateParams& params) {
    TracedSimulation out{simulate(objects, geom, axis, params), {}};
    out.usage.reserve(objects.size());
    for (const auto& obj : objects) {
        ObjectBinUsage u{obj.id, std::vector<std::vector<std::uint32_t>>(geom.num_image_points())};
        for (std::size_t i = 0; i < geom.num_image_points(); ++i) {
            std::vector<std::uint32_t>& bins = u.bins[i];
            for (const auto& p : obj.points) {
                const auto bin = path_to_bin(axis, path_length(geom, i, p));
                if (bin) bins.push_back(*bin);
            }
            std::sort(bins.begin(), bins.end());
            bins.erase(std::unique(bins.begin(), bins.end()), bins.end());
        }
        out.usage.push_back(std::move(u));
    }
    return out;
}

}  // namespace nlos
