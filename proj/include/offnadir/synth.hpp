#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "offnadir/data_model.hpp"
#include "offnadir/evaluation.hpp"
#include "offnadir/foa.hpp"

namespace offnadir {

enum class FootprintKind { rectangle, l_shape };
std::string to_string(FootprintKind k);
FootprintKind footprint_kind_from_string(const std::string& s);

// Scene layout plus the imaging model that turns building height into a
// roof->footprint displacement: |o| = height * tan(nadir) / gsd, direction
// set by the azimuth (one global angle, or drawn per building when absent).
struct SceneConfig {
    int width = 1024;
    int height = 1024;
    int n_buildings = 0;
    double height_min_m = 10.0;
    double height_max_m = 40.0;
    double gsd_m = 0.6;                  // meters of ground per pixel
    double nadir_angle_deg = 30.0;       // 0 = straight down
    std::optional<double> azimuth_rad;   // absent: uniform per building
    FootprintKind footprint_kind = FootprintKind::rectangle;
    std::uint64_t seed = 0;
    int building_min_px = 16;
    int building_max_px = 48;
    int border_margin_px = 12;
    int separation_px = 4;
};

// Corruption applied to perfect predictions. Draws are split into
// independent per-purpose streams keyed off `seed`, and sigma scales a
// pre-drawn unit deviate, so raising one knob never reshuffles the rest.
struct ScoreModel {
    bool iou_linked = true;  // false: uniform scores
};

struct NoiseConfig {
    double vertex_jitter_sigma = 0.0;
    double offset_noise_sigma = 0.0;
    double drop_rate = 0.0;      // probability an instance is dropped
    double spurious_rate = 0.0;  // expected false detections per image
    ScoreModel score;
    std::uint64_t seed = 0;
};

// Rejection-places buildings (bounded attempts, GeometryError naming the
// achieved count on failure), derives the rest by the imaging model, and
// returns a dataset whose annotations validate cleanly.
Dataset generate_scene(const SceneConfig& cfg);

// Perfect predictions from ground truth, then per-purpose corruption:
// dropped instances, roof vertex jitter, offset noise (footprint
// re-derived from the noisy roof + offset), spurious detections, scores.
std::vector<PredictionInstance> perturb_predictions(const Dataset& gt, const NoiseConfig& cfg);

// Deterministic rotation-equivariant feature map for an offset: rotating
// the map by theta matches the map of the offset rotated by theta, up to
// bilinear interpolation error. Zero offset yields the zero map.
FeatureMap generate_feature_for_offset(OffsetVector o, int channels, int height, int width);

SceneConfig scene_config_from_json_file(const std::string& path);
NoiseConfig noise_config_from_json_file(const std::string& path);

}  // namespace offnadir
