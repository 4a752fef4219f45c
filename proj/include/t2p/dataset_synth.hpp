#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "t2p/layout_model.hpp"
#include "t2p/saliency.hpp"
#include "t2p/smooth_region.hpp"

namespace t2p {

struct SynthConfig {
    int canvas_w = 300, canvas_h = 400;
    int map_w = 60, map_h = 80;
    SaliencyConfig saliency{};
    SmoothRegionConfig regions = SmoothRegionConfig::defaults();
    double min_smooth_overlap = 0.5;  // box must overlap the smooth region by this fraction
    double max_box_iou = 0.05;        // between ground-truth boxes
    int max_place_tries = 1000;
    int max_background_retries = 10;
};

// One synthetic poster: a smooth gradient background with salient blobs,
// texts whose ground-truth boxes sit in the smooth region, and the derived
// maps (layout map = rasterized boxes, exactly).
struct DatasetSample {
    RasterImage background;
    std::vector<TextElement> texts;
    Layout boxes;
    LayoutDistribution layout_map;
    SmoothRegionMap smooth_map;
    std::vector<std::pair<double, double>> salient_centers;  // normalized blob centers
    std::uint64_t seed = 0;
};

DatasetSample generate_sample(std::uint64_t seed, const SynthConfig& cfg = {});

struct DatasetManifest {
    int version = 1;
    int count = 0;
    std::uint64_t seed = 0;
    int canvas_w = 0, canvas_h = 0;
    int map_w = 0, map_h = 0;
    std::vector<std::string> ids;
    std::vector<int> train_ids;
    std::vector<int> val_ids;
    std::filesystem::path dir;  // set on load/build, not serialized

    std::filesystem::path background_path(int i) const;
    std::filesystem::path smooth_map_path(int i) const;
    std::filesystem::path layout_map_path(int i) const;
    std::filesystem::path record_path(int i) const;
};

// Writes n samples (per-sample seed = seed ^ index) plus manifest.json with
// the 9:1 split. Re-running with the same arguments reproduces identical
// files.
DatasetManifest build_dataset(int n, std::uint64_t seed, const std::filesystem::path& out_dir,
                              const SynthConfig& cfg = {});

DatasetManifest load_dataset_manifest(const std::filesystem::path& manifest_path);

// Maps + boxes only (backgrounds stay on disk).
TrainingSet load_training_set(const DatasetManifest& manifest);

// Deterministic scripted text sets for demos and end-to-end runs.
std::vector<TextElement> synth_texts(std::uint64_t seed);

}  // namespace t2p
