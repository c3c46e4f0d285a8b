#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlos/emd.hpp"
#include "nlos/forward.hpp"
#include "nlos/io.hpp"
#include "nlos/scene.hpp"

namespace nlos {

// Everything a pipeline run needs from a scene file: geometry and ground
// truth, the reconstruction grid, the time axis, and per-scene defaults.
struct SceneBundle {
    SceneDescription scene;
    VoxelGridSpec grid;
    TimeAxis axis;
    double photon_scale = 1.0;
    std::optional<double> emd_h_s_m;
    std::optional<double> emd_h_c;
};

namespace detail {

inline Vec3 vec3_from_json(const nlohmann::json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3)
        throw io_error("scene: '" + what + "' must be an array of 3 numbers");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline nlohmann::json vec3_to_json(const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); }

inline SceneObject object_from_json(const nlohmann::json& j) {
    const std::string id = j.at("id").get<std::string>();
    const double reflectivity = j.at("reflectivity").get<double>();
    if (j.contains("plate")) {
        const auto& pj = j.at("plate");
        PlateSpec spec;
        spec.shape = plate_shape_from_string(pj.at("shape").get<std::string>());
        spec.center = vec3_from_json(pj.at("center"), "plate.center");
        spec.normal = vec3_from_json(pj.at("normal"), "plate.normal");
        const auto& size = pj.at("size");
        if (size.is_array()) {
            if (size.size() != 2) throw io_error("scene: plate.size array must have 2 entries");
            spec.size_u = size[0].get<double>();
            spec.size_v = size[1].get<double>();
        } else {
            spec.size_u = size.get<double>();
            spec.size_v = spec.size_u;
        }
        spec.spacing = pj.at("spacing").get<double>();
        return make_plate_object(id, reflectivity, spec);
    }
    if (j.contains("points")) {
        std::vector<Point3> pts;
        for (const auto& p : j.at("points")) pts.push_back(vec3_from_json(p, "object point"));
        std::vector<Vec3> normals;
        if (j.contains("normals"))
            for (const auto& n : j.at("normals"))
                normals.push_back(vec3_from_json(n, "object normal"));
        return SceneObject(id, reflectivity, std::move(pts), std::move(normals));
    }
    throw io_error("scene: object '" + id + "' needs either 'plate' or 'points'");
}

}  // namespace detail

inline SceneBundle parse_scene(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "nlos-scene")
            throw io_error("scene: unknown format tag");
        const auto& g = j.at("geometry");
        std::vector<Point3> image_points;
        if (g.contains("image_points")) {
            for (const auto& p : g.at("image_points"))
                image_points.push_back(detail::vec3_from_json(p, "image point"));
        } else if (g.contains("image_grid")) {
            const auto& ig = g.at("image_grid");
            const auto nx = ig.at("nx").get<std::uint32_t>();
            const auto ny = ig.at("ny").get<std::uint32_t>();
            const double x0 = ig.at("min")[0].get<double>();
            const double y0 = ig.at("min")[1].get<double>();
            const double x1 = ig.at("max")[0].get<double>();
            const double y1 = ig.at("max")[1].get<double>();
            const double z = ig.value("z", 0.0);
            for (std::uint32_t iy = 0; iy < ny; ++iy)
                for (std::uint32_t ix = 0; ix < nx; ++ix)
                    image_points.push_back({nx > 1 ? x0 + ix * (x1 - x0) / (nx - 1) : x0,
                                            ny > 1 ? y0 + iy * (y1 - y0) / (ny - 1) : y0, z});
        } else {
            throw io_error("scene: geometry needs 'image_points' or 'image_grid'");
        }
        SensorGeometry geom(detail::vec3_from_json(g.at("laser"), "laser"),
                            detail::vec3_from_json(g.at("detector"), "detector"),
                            detail::vec3_from_json(g.at("source_point"), "source_point"),
                            std::move(image_points));

        std::vector<SceneObject> objects;
        for (const auto& oj : j.at("objects")) objects.push_back(detail::object_from_json(oj));

        const auto& gj = j.at("grid");
        VoxelGridSpec grid(detail::vec3_from_json(gj.at("origin"), "grid.origin"),
                           detail::vec3_from_json(gj.at("extent"), "grid.extent"),
                           {gj.at("dims")[0].get<std::uint32_t>(),
                            gj.at("dims")[1].get<std::uint32_t>(),
                            gj.at("dims")[2].get<std::uint32_t>()});

        const auto& aj = j.at("time_axis");
        TimeAxis axis(aj.at("bin_width_ps").get<double>() * 1e-12,
                      aj.at("num_bins").get<std::uint32_t>());

        SceneBundle bundle{SceneDescription{std::move(geom), std::move(objects)}, grid, axis};
        if (j.contains("simulation"))
            bundle.photon_scale = j.at("simulation").value("photon_scale", 1.0);
        if (j.contains("emd")) {
            if (j.at("emd").contains("h_s_m")) bundle.emd_h_s_m = j.at("emd").at("h_s_m").get<double>();
            if (j.at("emd").contains("h_c")) bundle.emd_h_c = j.at("emd").at("h_c").get<double>();
        }
        return bundle;
    } catch (const nlohmann::json::exception& e) {
        throw io_error(std::string("scene: malformed document: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw io_error(std::string("scene: ") + e.what());
    }
}

inline SceneBundle load_scene(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open scene file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw io_error("scene: invalid JSON in " + path.string() + ": " + e.what());
    }
    return parse_scene(j);
}

// Serializes a scene with explicit object point lists (plates are expanded
// at parse time and not round-tripped as primitives).
inline nlohmann::json scene_to_json(const SceneBundle& bundle) {
    nlohmann::json j;
    j["format"] = "nlos-scene";
    j["version"] = 1;
    j["units"] = {{"length", "m"}, {"time", "ps"}};
    auto& g = j["geometry"];
    g["laser"] = detail::vec3_to_json(bundle.scene.geometry.laser_pos());
    g["detector"] = detail::vec3_to_json(bundle.scene.geometry.detector_pos());
    g["source_point"] = detail::vec3_to_json(bundle.scene.geometry.source_point());
    g["image_points"] = nlohmann::json::array();
    for (const auto& p : bundle.scene.geometry.image_points())
        g["image_points"].push_back(detail::vec3_to_json(p));
    j["objects"] = nlohmann::json::array();
    for (const auto& obj : bundle.scene.objects) {
        nlohmann::json oj;
        oj["id"] = obj.id;
        oj["reflectivity"] = obj.reflectivity;
        oj["points"] = nlohmann::json::array();
        for (const auto& p : obj.points) oj["points"].push_back(detail::vec3_to_json(p));
        if (!obj.normals.empty()) {
            oj["normals"] = nlohmann::json::array();
            for (const auto& n : obj.normals) oj["normals"].push_back(detail::vec3_to_json(n));
        }
        j["objects"].push_back(std::move(oj));
    }
    j["grid"] = {{"origin", detail::vec3_to_json(bundle.grid.origin)},
                 {"extent", detail::vec3_to_json(bundle.grid.extent)},
                 {"dims", {bundle.grid.dims[0], bundle.grid.dims[1], bundle.grid.dims[2]}}};
    j["time_axis"] = {{"bin_width_ps", bundle.axis.bin_width_s * 1e12},
                      {"num_bins", bundle.axis.num_bins}};
    j["simulation"] = {{"photon_scale", bundle.photon_scale}};
    if (bundle.emd_h_s_m || bundle.emd_h_c) {
        if (bundle.emd_h_s_m) j["emd"]["h_s_m"] = *bundle.emd_h_s_m;
        if (bundle.emd_h_c) j["emd"]["h_c"] = *bundle.emd_h_c;
    }
    return j;
}

inline void save_scene(const std::filesystem::path& path, const SceneBundle& bundle) {
    atomic_write(path, scene_to_json(bundle).dump(2) + "\n");
}

}  // namespace nlos
