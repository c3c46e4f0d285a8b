// nlos: simulate time-resolved non-line-of-sight measurements of hidden
// scenes and reconstruct the objects by ellipsoidal back projection, either
// with the plain filter-and-threshold method or with ellipsoid mode
// decomposition. Pipeline stages communicate only through files; see
// README.md for the formats.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nlos/backproject.hpp"
#include "nlos/emd.hpp"
#include "nlos/fixtures.hpp"
#include "nlos/forward.hpp"
#include "nlos/io.hpp"
#include "nlos/metrics.hpp"
#include "nlos/pipeline.hpp"
#include "nlos/recon.hpp"
#include "nlos/scene_io.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 2;
constexpr int kExitDomainError = 3;

std::uint64_t hash_file_and_config(const fs::path& input, const nlohmann::json& config) {
    std::string blob;
    try {
        blob = nlos::detail::read_file(input);
    } catch (const nlos::io_error&) {
        // input existence is checked separately; hash the name as fallback
        blob = input.string();
    }
    return nlos::fnv1a64(blob + "\x1f" + config.dump());
}

void write_sidecar(const fs::path& target, const std::string& command,
                   const nlohmann::json& config, std::uint64_t config_hash) {
    nlohmann::json side;
    side["tool"] = "nlos";
    side["command"] = command;
    side["config"] = config;
    side["config_hash"] = config_hash;
    nlos::atomic_write(target.string() + ".provenance.json", side.dump(2) + "\n");
}

int cmd_scene(const std::string& name, const fs::path& out) {
    nlos::atomic_write(out, nlos::fixture_scene_json(name).dump(2) + "\n");
    std::cout << "wrote " << out.string() << "\n";
    return kExitOk;
}

int cmd_simulate(const fs::path& scene_path, const fs::path& out, double fwhm_ps, bool noise,
                 std::uint64_t seed, double photon_scale_override, bool no_quantize,
                 unsigned workers, bool csv) {
    const nlos::SceneBundle bundle = nlos::load_scene(scene_path);
    nlos::SimulateParams params;
    params.photon_scale = photon_scale_override > 0 ? photon_scale_override : bundle.photon_scale;
    params.broadening_fwhm_s = fwhm_ps * 1e-12;
    params.quantize = !no_quantize;
    params.noise = noise;
    params.seed = seed;
    params.workers = workers;

    const nlos::HistogramSet h = nlos::simulate(bundle.scene.objects, bundle.scene.geometry,
                                                bundle.axis, params);
    nlos::save_histograms(out, h);
    nlohmann::json config;
    config["scene"] = scene_path.string();
    config["photon_scale"] = params.photon_scale;
    config["fwhm_ps"] = fwhm_ps;
    config["noise"] = noise;
    config["seed"] = seed;
    config["quantize"] = params.quantize;
    write_sidecar(out, "simulate", config, hash_file_and_config(scene_path, config));
    if (csv) nlos::atomic_write(out.string() + ".csv", nlos::histograms_csv(h));
    std::cout << "wrote " << out.string() << " (" << h.num_image_points() << " image points x "
              << h.axis.num_bins << " bins, total " << h.total() << ")\n";
    return kExitOk;
}

int cmd_backproject(const fs::path& in, const fs::path& scene_path, const fs::path& out,
                    unsigned workers) {
    const nlos::HistogramSet h = nlos::load_histograms(in);
    const nlos::SceneBundle bundle = nlos::load_scene(scene_path);
    const nlos::VoxelBinIndex index = nlos::build_index(h.geom, bundle.grid, h.axis, workers);
    nlohmann::json config;
    config["input"] = in.string();
    config["grid_dims"] = {bundle.grid.dims[0], bundle.grid.dims[1], bundle.grid.dims[2]};
    const std::uint64_t config_hash = hash_file_and_config(in, config);
    nlos::ConfidenceMap map = nlos::back_project(h, index, workers);
    map.provenance_hash = config_hash;
    nlos::save_map(out, map);
    write_sidecar(out, "backproject", config, config_hash);
    std::cout << "wrote " << out.string() << " (total " << map.total() << ", max "
              << map.max_value() << ")\n";
    return kExitOk;
}

int cmd_reconstruct(const fs::path& in, const fs::path& scene_path, const fs::path& outdir,
                    const std::string& method, std::vector<double> betas, double hs_m, double hc,
                    std::uint32_t max_modes, double stop_fraction, unsigned workers) {
    const nlos::HistogramSet h = nlos::load_histograms(in);
    const nlos::SceneBundle bundle = nlos::load_scene(scene_path);
    if (h.total() <= 0) std::cerr << "warning: histogram file has no counts\n";
    const nlos::VoxelBinIndex index = nlos::build_index(h.geom, bundle.grid, h.axis, workers);

    nlohmann::json config;
    config["method"] = method;
    config["betas"] = betas;
    if (method == "general") {
        const std::uint64_t config_hash = hash_file_and_config(in, config);
        const auto run = nlos::run_general_pipeline(h, index, betas, outdir, config_hash, workers);
        bool all_empty = true;
        for (const auto& rec : run.recons) all_empty = all_empty && rec.status == nlos::ReconStatus::empty;
        if (all_empty) std::cerr << "warning: reconstruction is empty\n";
        std::cout << "wrote " << run.recon_files.size() << " reconstructions to "
                  << outdir.string() << "\n";
        return kExitOk;
    }
    nlos::DecomposeParams params;
    params.h_s_m = hs_m > 0 ? hs_m : bundle.emd_h_s_m.value_or(0.0);
    params.h_c = hc > 0 ? hc : bundle.emd_h_c.value_or(0.4);
    params.max_modes = max_modes;
    params.stop_fraction = stop_fraction;
    params.workers = workers;
    if (!(params.h_s_m > 0))
        throw nlos::io_error("emd needs --hs-m (or an 'emd.h_s_m' entry in the scene file)");
    config["h_s_m"] = params.h_s_m;
    config["h_c"] = params.h_c;
    config["max_modes"] = params.max_modes;
    config["stop_fraction"] = params.stop_fraction;
    const std::uint64_t config_hash = hash_file_and_config(in, config);
    const auto run = nlos::run_emd_pipeline(h, index, params, betas, outdir, config_hash);
    if (run.recon.status == nlos::ReconStatus::empty)
        std::cerr << "warning: reconstruction is empty\n";
    std::cout << "extracted " << run.decomposition.modes.size() << " mode(s), stop reason "
              << nlos::to_string(run.decomposition.stop) << ", outputs in " << outdir.string()
              << "\n";
    for (const auto& it : run.decomposition.iterations)
        std::printf("  mode %u: cluster %zu voxels, selector %zu pairs, residual %.4f\n", it.rank,
                    it.member_count, it.selector_size, it.residual_fraction);
    return kExitOk;
}

int cmd_slice(const fs::path& in, const std::string& plane, std::uint32_t index,
              const std::string& out_prefix) {
    const nlos::ConfidenceMap map = nlos::load_map(in);
    if (plane.size() != 1 || (plane[0] != 'x' && plane[0] != 'y' && plane[0] != 'z'))
        throw nlos::io_error("--plane must be x, y or z");
    nlos::Slice slice;
    try {
        slice = nlos::extract_slice(map, plane[0], index);
    } catch (const std::out_of_range& e) {
        throw nlos::io_error(e.what());
    }
    nlos::atomic_write(out_prefix + ".pgm", nlos::slice_pgm(slice));
    nlos::atomic_write(out_prefix + ".csv", nlos::slice_csv(slice));
    std::cout << "wrote " << out_prefix << ".pgm and .csv (" << slice.width << "x" << slice.height
              << ")\n";
    return kExitOk;
}

int cmd_evaluate(const fs::path& in, const fs::path& scene_path, std::uint32_t dilation,
                 bool require_all, const std::string& csv_out) {
    const nlos::Reconstruction rec = nlos::load_reconstruction(in);
    const nlos::SceneBundle bundle = nlos::load_scene(scene_path);
    if (!(rec.grid == bundle.grid))
        throw nlos::io_error("reconstruction grid does not match the scene grid");
    const nlos::VoxelizedTruth truth = nlos::voxelize_truth(bundle.scene.objects, bundle.grid);
    for (const auto& [id, p] : truth.out_of_grid)
        std::cerr << "warning: truth point of '" << id << "' outside grid: (" << p.x << ", "
                  << p.y << ", " << p.z << ")\n";
    const std::vector<nlos::ObjectScore> scores = nlos::score(rec, truth, dilation);

    std::printf("%-12s %-9s %-6s %-12s %s\n", "object", "recovered", "rank", "dilated_iou",
                "centroid_error_m");
    std::string csv = "object,recovered,rank,dilated_iou,centroid_error_m\n";
    bool all_recovered = true;
    char buf[160];
    for (const auto& s : scores) {
        all_recovered = all_recovered && s.recovered;
        std::printf("%-12s %-9s %-6s %-12.4f %.5f\n", s.truth_id.c_str(),
                    s.recovered ? "yes" : "no",
                    s.matched_rank ? std::to_string(*s.matched_rank).c_str() : "-", s.dilated_iou,
                    s.centroid_error_m);
        std::snprintf(buf, sizeof buf, "%s,%d,%d,%.17g,%.17g\n", s.truth_id.c_str(),
                      s.recovered ? 1 : 0, s.matched_rank ? int(*s.matched_rank) : -1,
                      s.dilated_iou, s.centroid_error_m);
        csv += buf;
    }
    if (!csv_out.empty()) nlos::atomic_write(csv_out, csv);
    if (require_all && !all_recovered) {
        std::cerr << "not all truth objects were recovered\n";
        return 1;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"non-line-of-sight simulation and multi-object reconstruction"};
    app.require_subcommand(1);

    std::string scene_name = "desk-sim";
    fs::path scene_path, in_path, out_path{"out"};
    std::string method = "emd", plane = "z", out_prefix = "slice", csv_out;
    std::vector<double> betas;
    double fwhm_ps = 0, photon_scale = 0, hs_m = 0, hc = 0, stop_fraction = 0.05;
    std::uint64_t seed = 0;
    std::uint32_t max_modes = 8, slice_index = 0, dilation = 1;
    unsigned workers = nlos::default_workers();
    bool noise = false, no_quantize = false, require_all = false, csv = false;

    auto* scene = app.add_subcommand("scene", "write a built-in fixture scene file");
    scene->add_option("--name", scene_name, "paper-sim or desk-sim");
    scene->add_option("--out", out_path, "output scene file")->required();

    auto* simulate = app.add_subcommand("simulate", "forward-simulate time histograms");
    simulate->add_option("--scene", scene_path, "scene file")->required();
    simulate->add_option("--out", out_path, "output histogram file")->required();
    simulate->add_option("--fwhm-ps", fwhm_ps, "Gaussian broadening FWHM in ps (0 = off)");
    simulate->add_flag("--noise", noise, "apply Poisson shot noise");
    simulate->add_option("--seed", seed, "noise seed");
    simulate->add_option("--photon-scale", photon_scale, "override the scene photon scale");
    simulate->add_flag("--no-quantize", no_quantize, "keep fractional pre-broadening counts");
    simulate->add_option("--workers", workers, "worker thread count");
    simulate->add_flag("--csv", csv, "also write a CSV export");

    auto* backproject = app.add_subcommand("backproject", "back-project histograms into a map");
    backproject->add_option("--in", in_path, "histogram file")->required();
    backproject->add_option("--scene", scene_path, "scene file (for the voxel grid)")->required();
    backproject->add_option("--out", out_path, "output confidence map")->required();
    backproject->add_option("--workers", workers, "worker thread count");

    auto* reconstruct = app.add_subcommand("reconstruct", "reconstruct objects from histograms");
    reconstruct->add_option("--in", in_path, "histogram file")->required();
    reconstruct->add_option("--scene", scene_path, "scene file (for the voxel grid)")->required();
    reconstruct->add_option("--out", out_path, "output directory")->required();
    reconstruct->add_option("--method", method, "general or emd")
        ->check(CLI::IsMember({"general", "emd"}));
    reconstruct->add_option("--beta", betas, "threshold fraction(s) in (0,1); repeatable");
    reconstruct->add_option("--hs-m", hs_m, "EMD spatial half-window, meters");
    reconstruct->add_option("--hc", hc, "EMD relative-intensity window in (0,1]");
    reconstruct->add_option("--max-modes", max_modes, "EMD mode cap");
    reconstruct->add_option("--stop-fraction", stop_fraction, "EMD residual stop fraction");
    reconstruct->add_option("--workers", workers, "worker thread count");

    auto* slice = app.add_subcommand("slice", "export one plane of a map as PGM + CSV");
    slice->add_option("--in", in_path, "confidence map file")->required();
    slice->add_option("--plane", plane, "x, y or z");
    slice->add_option("--index", slice_index, "plane index")->required();
    slice->add_option("--out-prefix", out_prefix, "output path prefix");

    auto* evaluate = app.add_subcommand("evaluate", "score a reconstruction against scene truth");
    evaluate->add_option("--in", in_path, "reconstruction file")->required();
    evaluate->add_option("--scene", scene_path, "scene file with ground truth")->required();
    evaluate->add_option("--dilation", dilation, "truth dilation radius, voxels");
    evaluate->add_flag("--require-all", require_all, "fail unless every object is recovered");
    evaluate->add_option("--csv-out", csv_out, "also write scores as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitInputError;
    }

    try {
        for (double b : betas)
            if (!(b > 0) || !(b < 1)) throw nlos::io_error("--beta values must be in (0,1)");
        if (scene->parsed()) return cmd_scene(scene_name, out_path);
        if (simulate->parsed())
            return cmd_simulate(scene_path, out_path, fwhm_ps, noise, seed, photon_scale,
                                no_quantize, workers, csv);
        if (backproject->parsed()) return cmd_backproject(in_path, scene_path, out_path, workers);
        if (reconstruct->parsed()) {
            if (betas.empty())
                betas = method == "general" ? std::vector<double>{0.2, 0.25, 0.3, 0.5}
                                            : std::vector<double>{0.5};
            return cmd_reconstruct(in_path, scene_path, out_path, method, betas, hs_m, hc,
                                   max_modes, stop_fraction, workers);
        }
        if (slice->parsed()) return cmd_slice(in_path, plane, slice_index, out_prefix);
        if (evaluate->parsed())
            return cmd_evaluate(in_path, scene_path, dilation, require_all, csv_out);
    } catch (const nlos::io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomainError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitDomainError;
    }
    return kExitInputError;
}
