#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlos/backproject.hpp"
#include "nlos/emd.hpp"
#include "nlos/io.hpp"
#include "nlos/metrics.hpp"
#include "nlos/recon.hpp"

namespace nlos {

// The reconstruct stage shared by the CLI and the test suites. Everything is
// written through atomic_write and none of the outputs embed timestamps or
// worker counts, so a rerun with the same inputs is byte-identical.

namespace detail {
inline std::string beta_tag(double beta) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", beta);
    return buf;
}
}  // namespace detail

struct GeneralRunResult {
    ConfidenceMap map;
    std::vector<Reconstruction> recons;  // one per beta
    std::vector<std::filesystem::path> recon_files;
};

inline GeneralRunResult run_general_pipeline(const HistogramSet& h, const VoxelBinIndex& index,
                                             std::span<const double> betas,
                                             const std::filesystem::path& outdir,
                                             std::uint64_t config_hash, unsigned workers = 1) {
    GeneralRunResult r;
    r.map = back_project(h, index, workers);
    r.map.provenance_hash = config_hash;
    std::filesystem::create_directories(outdir);
    save_map(outdir / "confidence.nlcm", r.map);
    nlohmann::json summary;
    summary["method"] = "general";
    summary["config_hash"] = config_hash;
    summary["betas"] = nlohmann::json::array();
    for (double beta : betas) {
        Reconstruction rec = reconstruct_general(r.map, beta);
        const std::string tag = detail::beta_tag(beta);
        const auto rec_path = outdir / ("recon_general_beta" + tag + ".nlrec");
        save_reconstruction(rec_path, rec);
        atomic_write(outdir / ("recon_general_beta" + tag + ".csv"), reconstruction_csv(rec));
        nlohmann::json bj;
        bj["beta"] = beta;
        bj["survivors"] = rec.objects.empty() ? 0 : rec.objects[0].voxel_count;
        bj["empty"] = rec.status == ReconStatus::empty;
        summary["betas"].push_back(bj);
        r.recon_files.push_back(rec_path);
        r.recons.push_back(std::move(rec));
    }
    atomic_write(outdir / "summary.json", summary.dump(2) + "\n");
    return r;
}

struct EmdRunResult {
    ConfidenceMap initial;
    DecomposeResult decomposition;
    Reconstruction recon;
    std::filesystem::path recon_file;
    std::vector<std::filesystem::path> mode_files;
};

inline EmdRunResult run_emd_pipeline(const HistogramSet& h, const VoxelBinIndex& index,
                                     const DecomposeParams& params, std::span<const double> betas,
                                     const std::filesystem::path& outdir,
                                     std::uint64_t config_hash) {
    EmdRunResult r;
    std::filesystem::create_directories(outdir);
    r.initial = back_project(h, index, params.workers);
    r.initial.provenance_hash = config_hash;
    save_map(outdir / "confidence.nlcm", r.initial);

    r.decomposition = decompose(h, index, params);

    nlohmann::json manifest;
    manifest["config_hash"] = config_hash;
    manifest["stop_reason"] = to_string(r.decomposition.stop);
    manifest["initial_total"] = r.decomposition.initial_total;
    manifest["modes"] = nlohmann::json::array();
    char name[32];
    for (std::size_t k = 0; k < r.decomposition.modes.size(); ++k) {
        const EllipsoidMode& mode = r.decomposition.modes[k];
        const IterationStats& it = r.decomposition.iterations[k];
        std::snprintf(name, sizeof name, "mode_%02u.nlcm", mode.object_rank);
        ConfidenceMap mode_map = mode.map;
        mode_map.provenance_hash = config_hash;
        const auto mode_path = outdir / name;
        save_map(mode_path, mode_map);
        r.mode_files.push_back(mode_path);
        nlohmann::json mj;
        mj["rank"] = mode.object_rank;
        mj["file"] = name;
        mj["cluster_center_m"] = {it.cluster_center_m.x, it.cluster_center_m.y,
                                  it.cluster_center_m.z};
        mj["member_count"] = it.member_count;
        mj["selector_size"] = it.selector_size;
        mj["mode_total"] = it.mode_total;
        mj["residual_fraction"] = it.residual_fraction;
        manifest["modes"].push_back(mj);
    }
    atomic_write(outdir / "modes.json", manifest.dump(2) + "\n");

    r.recon = reconstruct_emd(r.decomposition.modes, betas);
    r.recon_file = outdir / "recon_emd.nlrec";
    save_reconstruction(r.recon_file, r.recon);
    atomic_write(outdir / "recon_emd.csv", reconstruction_csv(r.recon));

    nlohmann::json summary;
    summary["method"] = "emd";
    summary["config_hash"] = config_hash;
    summary["stop_reason"] = to_string(r.decomposition.stop);
    summary["num_modes"] = r.decomposition.modes.size();
    summary["initial_total"] = r.decomposition.initial_total;
    summary["residual_fractions"] = nlohmann::json::array();
    for (const auto& it : r.decomposition.iterations)
        summary["residual_fractions"].push_back(it.residual_fraction);
    summary["betas"] = std::vector<double>(betas.begin(), betas.end());
    atomic_write(outdir / "summary.json", summary.dump(2) + "\n");
    return r;
}

}  // namespace nlos
