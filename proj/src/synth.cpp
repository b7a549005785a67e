#include "offnadir/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "json_common.hpp"
#include "offnadir/geometry.hpp"

namespace offnadir {

namespace {

using detail::ordered_json;

// Independent deterministic stream per purpose: changing how one knob
// consumes randomness never reshuffles the draws of another.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint32_t purpose) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32), purpose};
    return std::mt19937_64(seq);
}

// Stream purposes (scene: 1-9, perturbation: 10-19).
enum : std::uint32_t {
    kStreamSize = 1,
    kStreamHeight = 2,
    kStreamAzimuth = 3,
    kStreamPlace = 4,
    kStreamDrop = 10,
    kStreamJitter = 11,
    kStreamOffset = 12,
    kStreamSpurious = 13,
    kStreamScore = 14,
};

void require_scene_config(const SceneConfig& c) {
    if (c.width <= 0 || c.height <= 0)
        throw std::invalid_argument("scene: width/height must be > 0");
    if (c.n_buildings < 0) throw std::invalid_argument("scene: n_buildings must be >= 0");
    if (!(c.gsd_m > 0.0)) throw std::invalid_argument("scene: gsd must be > 0");
    if (c.nadir_angle_deg < 0.0 || c.nadir_angle_deg > 60.0)
        throw std::invalid_argument("scene: nadir angle must be in [0, 60] degrees");
    if (!(c.height_min_m > 0.0) || c.height_max_m < c.height_min_m)
        throw std::invalid_argument("scene: building height range must satisfy 0 < min <= max");
    if (c.building_min_px < 2 || c.building_max_px < c.building_min_px)
        throw std::invalid_argument("scene: building size range must satisfy 2 <= min <= max");
    if (c.border_margin_px < 0 || c.separation_px < 0)
        throw std::invalid_argument("scene: margins must be >= 0");
}

void require_noise_config(const NoiseConfig& c) {
    if (c.vertex_jitter_sigma < 0.0 || c.offset_noise_sigma < 0.0)
        throw std::invalid_argument("noise: sigmas must be >= 0");
    if (c.drop_rate < 0.0 || c.drop_rate > 1.0)
        throw std::invalid_argument("noise: drop_rate must be in [0, 1]");
    if (c.spurious_rate < 0.0) throw std::invalid_argument("noise: spurious_rate must be >= 0");
}

Polygon make_roof_polygon(FootprintKind kind, double x, double y, double w, double h,
                          double cut_fx, double cut_fy) {
    Polygon p;
    if (kind == FootprintKind::rectangle) {
        p.vertices = {{x, y}, {x + w, y}, {x + w, y + h}, {x, y + h}};
    } else {
        // L-shape: the base rectangle minus its bottom-right corner.
        const double cw = cut_fx * w, ch = cut_fy * h;
        p.vertices = {{x, y},           {x + w, y},      {x + w, y + h - ch},
                      {x + w - cw, y + h - ch}, {x + w - cw, y + h}, {x, y + h}};
    }
    return normalized_winding(std::move(p));
}

bool bboxes_too_close(const BBox& a, const BBox& b, double sep) {
    return a.x < b.x + b.w + sep && b.x < a.x + a.w + sep &&
           a.y < b.y + b.h + sep && b.y < a.y + a.h + sep;
}

// Mask IoU of two polygons rasterized at image resolution, computed on the
// window spanning both (bit-identical to the full-grid computation).
double polygon_mask_iou(const Polygon& a, const Polygon& b, int img_w, int img_h) {
    double minx = std::numeric_limits<double>::infinity(), maxx = -minx;
    double miny = minx, maxy = -minx;
    for (const Polygon* p : {&a, &b}) {
        for (const Point2& v : p->vertices) {
            minx = std::min(minx, v.x);
            maxx = std::max(maxx, v.x);
            miny = std::min(miny, v.y);
            maxy = std::max(maxy, v.y);
        }
    }
    const int x0 = std::clamp(static_cast<int>(std::floor(minx)) - 1, 0, img_w);
    const int y0 = std::clamp(static_cast<int>(std::floor(miny)) - 1, 0, img_h);
    const int x1 = std::clamp(static_cast<int>(std::ceil(maxx)) + 1, 0, img_w);
    const int y1 = std::clamp(static_cast<int>(std::ceil(maxy)) + 1, 0, img_h);
    if (x1 <= x0 || y1 <= y0) return 1.0;  // both fully outside: both empty
    return mask_iou(rasterize(translate(a, -x0, -y0), x1 - x0, y1 - y0),
                    rasterize(translate(b, -x0, -y0), x1 - x0, y1 - y0));
}

}  // namespace

std::string to_string(FootprintKind k) {
    return k == FootprintKind::rectangle ? "rectangle" : "l_shape";
}

FootprintKind footprint_kind_from_string(const std::string& s) {
    if (s == "rectangle") return FootprintKind::rectangle;
    if (s == "l_shape") return FootprintKind::l_shape;
    throw ParseError("unknown footprint kind '" + s + "' (expected rectangle/l_shape)");
}

Dataset generate_scene(const SceneConfig& cfg) {
    require_scene_config(cfg);
    constexpr double two_pi = 2.0 * std::numbers::pi;

    Dataset d;
    ImageRecord im;
    im.id = 1;
    im.file_name = "synthetic_scene_" + std::to_string(cfg.seed) + ".png";
    im.width = cfg.width;
    im.height = cfg.height;
    d.images.push_back(im);

    auto size_rng = make_stream(cfg.seed, kStreamSize);
    auto height_rng = make_stream(cfg.seed, kStreamHeight);
    auto azimuth_rng = make_stream(cfg.seed, kStreamAzimuth);
    auto place_rng = make_stream(cfg.seed, kStreamPlace);

    std::uniform_real_distribution<double> size_u(cfg.building_min_px, cfg.building_max_px);
    std::uniform_real_distribution<double> cut_u(0.3, 0.7);
    std::uniform_real_distribution<double> height_u(cfg.height_min_m, cfg.height_max_m);
    std::uniform_real_distribution<double> az_u(0.0, two_pi);

    const double tan_nadir = std::tan(cfg.nadir_angle_deg * std::numbers::pi / 180.0);
    const double margin = cfg.border_margin_px;
    long attempts_left = 100l * std::max(1, cfg.n_buildings);

    std::vector<BBox> placed;
    int built = 0;
    while (built < cfg.n_buildings && attempts_left > 0) {
        --attempts_left;
        const double w = size_u(size_rng);
        const double h = size_u(size_rng);
        const double cut_fx = cut_u(size_rng);
        const double cut_fy = cut_u(size_rng);
        const double height_m = height_u(height_rng);
        const double az = cfg.azimuth_rad ? *cfg.azimuth_rad : az_u(azimuth_rng);
        const double rho = height_m * tan_nadir / cfg.gsd_m;
        const OffsetVector o = {rho * std::cos(az), rho * std::sin(az)};

        // Keep the whole building (roof and footprint) inside the margins.
        const double lo_x = margin + std::max(0.0, -o.ox);
        const double hi_x = cfg.width - margin - w - std::max(0.0, o.ox);
        const double lo_y = margin + std::max(0.0, -o.oy);
        const double hi_y = cfg.height - margin - h - std::max(0.0, o.oy);
        if (hi_x < lo_x || hi_y < lo_y) continue;
        std::uniform_real_distribution<double> px(lo_x, hi_x), py(lo_y, hi_y);
        const double x = px(place_rng);
        const double y = py(place_rng);

        Polygon roof = make_roof_polygon(cfg.footprint_kind, x, y, w, h, cut_fx, cut_fy);
        BuildingAnnotation a = annotate_from_roof(roof, o, im.id, built + 1);

        bool clash = false;
        for (const BBox& b : placed)
            if (bboxes_too_close(a.building_bbox, b, cfg.separation_px)) {
                clash = true;
                break;
            }
        if (clash) continue;

        placed.push_back(a.building_bbox);
        d.annotations.push_back(std::move(a));
        ++built;
    }
    if (built < cfg.n_buildings)
        throw GeometryError("generate_scene: placed only " + std::to_string(built) + " of " +
                            std::to_string(cfg.n_buildings) + " buildings without overlap");
    return d;
}

std::vector<PredictionInstance> perturb_predictions(const Dataset& gt, const NoiseConfig& cfg) {
    require_noise_config(cfg);

    auto drop_rng = make_stream(cfg.seed, kStreamDrop);
    auto jitter_rng = make_stream(cfg.seed, kStreamJitter);
    auto offset_rng = make_stream(cfg.seed, kStreamOffset);
    auto spurious_rng = make_stream(cfg.seed, kStreamSpurious);
    auto score_rng = make_stream(cfg.seed, kStreamScore);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<PredictionInstance> out;
    for (const BuildingAnnotation& a : gt.annotations) {
        // Unit deviates are always drawn and scaled afterwards, so sweeping
        // one sigma never changes what any other knob sees.
        const double drop_u = unit(drop_rng);
        Polygon roof = a.roof;
        for (Point2& v : roof.vertices) {
            v.x += cfg.vertex_jitter_sigma * gauss(jitter_rng);
            v.y += cfg.vertex_jitter_sigma * gauss(jitter_rng);
        }
        OffsetVector off = {a.offset.ox + cfg.offset_noise_sigma * gauss(offset_rng),
                            a.offset.oy + cfg.offset_noise_sigma * gauss(offset_rng)};
        const double score_u = unit(score_rng);
        if (drop_u < cfg.drop_rate) continue;

        PredictionInstance p;
        p.image_id = a.image_id;
        p.roof = roof;
        p.offset = off;
        p.footprint = derive_footprint(roof, off);
        if (cfg.score.iou_linked) {
            const ImageRecord* im = gt.find_image(a.image_id);
            if (!im)
                throw IntegrityError("perturb_predictions: annotation " + std::to_string(a.id) +
                                     " references unknown image id " +
                                     std::to_string(a.image_id));
            const double iou = polygon_mask_iou(p.footprint, a.footprint, im->width, im->height);
            p.score = std::clamp(iou, 0.05, 1.0);
        } else {
            p.score = score_u;
        }
        out.push_back(std::move(p));
    }

    // Spurious detections, self-contained in their own stream.
    std::poisson_distribution<int> spurious_count(cfg.spurious_rate);
    std::uniform_real_distribution<double> spurious_size(16.0, 48.0);
    for (const ImageRecord& im : gt.images) {
        const int n = cfg.spurious_rate > 0.0 ? spurious_count(spurious_rng) : 0;
        for (int k = 0; k < n; ++k) {
            const double w = spurious_size(spurious_rng);
            const double h = spurious_size(spurious_rng);
            std::uniform_real_distribution<double> px(0.0, std::max(1.0, im.width - w));
            std::uniform_real_distribution<double> py(0.0, std::max(1.0, im.height - h));
            const double x = px(spurious_rng);
            const double y = py(spurious_rng);
            Polygon box;
            box.vertices = {{x, y}, {x + w, y}, {x + w, y + h}, {x, y + h}};

            PredictionInstance p;
            p.image_id = im.id;
            p.roof = box;
            p.offset = OffsetVector{0.0, 0.0};
            p.footprint = box;
            if (cfg.score.iou_linked) {
                double best = 0.0;
                for (const BuildingAnnotation& a : gt.annotations)
                    if (a.image_id == im.id)
                        best = std::max(best,
                                        polygon_mask_iou(box, a.footprint, im.width, im.height));
                p.score = std::clamp(best, 0.05, 1.0);
            } else {
                p.score = unit(spurious_rng);
            }
            out.push_back(std::move(p));
        }
    }
    return out;
}

FeatureMap generate_feature_for_offset(OffsetVector o, int channels, int height, int width) {
    if (height != width)
        throw DimensionError("generate_feature_for_offset: feature map must be square");
    if (channels <= 0 || height <= 0)
        throw DimensionError("generate_feature_for_offset: dimensions must be > 0");

    const int n = height;
    const double half = (n - 1) / 2.0;
    const double mag = norm(o);
    FeatureMap f(channels, n, n);
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const double px = (n == 1) ? 0.0 : x / half - 1.0;
            const double py = (n == 1) ? 0.0 : y / half - 1.0;
            const double rho = std::hypot(px, py);
            if (rho >= 1.0) continue;  // vanishes at the unit disk edge
            const double window = [&] {
                const double c = std::cos(std::numbers::pi * rho / 2.0);
                return c * c;
            }();
            for (int c = 0; c < channels; ++c) {
                // Directional fields built through the axis reflection S =
                // diag(1,-1): rotating the offset rotates the field the
                // same way the resampler does (S A_theta = A_{-theta} S).
                double base;
                switch (c % 3) {
                    case 0: base = o.ox * px - o.oy * py; break;
                    case 1: base = o.oy * px + o.ox * py; break;
                    default: base = mag; break;
                }
                const double radial = (c / 3 == 0) ? 1.0 : std::pow(rho, c / 3);
                f.at(c, y, x) = base * window * radial / 64.0;
            }
        }
    }
    return f;
}

SceneConfig scene_config_from_json_file(const std::string& path) {
    ordered_json j = detail::parse_json_file(path, "scene config");
    if (!j.is_object()) throw ParseError("scene config root must be a JSON object: " + path);
    SceneConfig c;
    c.width = j.value("width", c.width);
    c.height = j.value("height", c.height);
    c.n_buildings = j.value("n_buildings", c.n_buildings);
    c.height_min_m = j.value("height_min_m", c.height_min_m);
    c.height_max_m = j.value("height_max_m", c.height_max_m);
    c.gsd_m = j.value("gsd_m", c.gsd_m);
    c.nadir_angle_deg = j.value("nadir_angle_deg", c.nadir_angle_deg);
    if (j.contains("azimuth_rad") && !j["azimuth_rad"].is_null())
        c.azimuth_rad = j["azimuth_rad"].get<double>();
    if (j.contains("footprint_kind"))
        c.footprint_kind = footprint_kind_from_string(j["footprint_kind"].get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.building_min_px = j.value("building_min_px", c.building_min_px);
    c.building_max_px = j.value("building_max_px", c.building_max_px);
    c.border_margin_px = j.value("border_margin_px", c.border_margin_px);
    c.separation_px = j.value("separation_px", c.separation_px);
    return c;
}

NoiseConfig noise_config_from_json_file(const std::string& path) {
    ordered_json j = detail::parse_json_file(path, "noise config");
    if (!j.is_object()) throw ParseError("noise config root must be a JSON object: " + path);
    NoiseConfig c;
    c.vertex_jitter_sigma = j.value("vertex_jitter_sigma", c.vertex_jitter_sigma);
    c.offset_noise_sigma = j.value("offset_noise_sigma", c.offset_noise_sigma);
    c.drop_rate = j.value("drop_rate", c.drop_rate);
    c.spurious_rate = j.value("spurious_rate", c.spurious_rate);
    if (j.contains("score_model")) {
        const std::string s = j["score_model"].get<std::string>();
        if (s == "iou_linked")
            c.score.iou_linked = true;
        else if (s == "uniform")
            c.score.iou_linked = false;
        else
            throw ParseError("unknown score model '" + s + "' (expected iou_linked/uniform)");
    }
    c.seed = j.value("seed", c.seed);
    return c;
}

}  // namespace offnadir
