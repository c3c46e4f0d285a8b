#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "nlos/scene_io.hpp"

namespace nlos {

// Built-in simulated scenes. "paper-sim" is the full-scale setup: three
// plates (round/triangle/square, reflectivity 0.1/0.3/1.0) at distinct wall
// distances, a 2m x 2m x 1m cube of 100x100x50 voxels and 4024 bins of 10 ps.
// "desk-sim" is the scaled-down variant used by the test suite: 48x48x24
// voxels, 12x12 image points, 512 bins of 64 ps. Plate sizes and positions
// are fixture parameters; plate centers and sample spacing sit on the voxel
// center lattice so a sample's time bin equals its voxel's time bin.
inline nlohmann::json fixture_scene_json(const std::string& name) {
    const bool paper = name == "paper-sim";
    if (!paper && name != "desk-sim")
        throw std::invalid_argument("unknown fixture name: '" + name +
                                    "' (expected paper-sim or desk-sim)");

    nlohmann::json j;
    j["format"] = "nlos-scene";
    j["version"] = 1;
    j["units"] = {{"length", "m"}, {"time", "ps"}};
    j["geometry"] = {
        {"laser", {0.25, 0.25, -1.0}},
        {"detector", {-0.3, -0.1, -1.1}},
        {"source_point", {-0.85, -0.85, 0.0}},
        {"image_grid",
         {{"min", {-0.75, -0.75}}, {"max", {0.75, 0.75}}, {"nx", paper ? 16 : 12},
          {"ny", paper ? 16 : 12}, {"z", 0.0}}},
    };
    j["grid"] = {{"origin", {-1.0, -1.0, 0.0}},
                 {"extent", {2.0, 2.0, 1.0}},
                 {"dims", paper ? nlohmann::json{100, 100, 50} : nlohmann::json{48, 48, 24}}};
    j["time_axis"] = {{"bin_width_ps", paper ? 10.0 : 64.0}, {"num_bins", paper ? 4024 : 512}};

    // Voxel-center lattice coordinate along one axis.
    const double px = paper ? 2.0 / 100 : 2.0 / 48;
    const double pz = paper ? 1.0 / 50 : 1.0 / 24;
    auto lx = [&](int i) { return -1.0 + (i + 0.5) * px; };
    auto lz = [&](int k) { return (k + 0.5) * pz; };

    const nlohmann::json square = {
        {"id", "square"},
        {"reflectivity", 1.0},
        {"plate",
         {{"shape", "square"},
          {"center", paper ? nlohmann::json{lx(73), lx(71), lz(30)}
                           : nlohmann::json{lx(35), lx(34), lz(14)}},
          {"normal", {0.0, 0.0, -1.0}},
          {"size", 0.4},
          {"spacing", px}}}};
    const nlohmann::json triangle = {
        {"id", "triangle"},
        {"reflectivity", 0.3},
        {"plate",
         {{"shape", "triangle"},
          {"center", paper ? nlohmann::json{lx(28), lx(73), lz(21)}
                           : nlohmann::json{lx(13), lx(35), lz(10)}},
          {"normal", {0.0, 0.0, -1.0}},
          {"size", 0.45},
          {"spacing", px}}}};
    const nlohmann::json round = {
        {"id", "round"},
        {"reflectivity", 0.1},
        {"plate",
         {{"shape", "round"},
          {"center", paper ? nlohmann::json{lx(42), lx(34), lz(13)}
                           : nlohmann::json{lx(20), lx(16), lz(6)}},
          {"normal", {0.0, 0.0, -1.0}},
          {"size", 0.42},
          {"spacing", px}}}};
    j["objects"] = {round, triangle, square};

    j["simulation"] = {{"photon_scale", 2000.0}};
    j["emd"] = {{"h_s_m", 0.45}, {"h_c", 0.4}};
    return j;
}

inline SceneBundle make_grid_scene_fixture(const std::string& name) {
    return parse_scene(fixture_scene_json(name));
}

}  // namespace nlos
