#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "offnadir/data_model.hpp"
#include "offnadir/geometry.hpp"

namespace offnadir {

// One detection: the footprint polygon is mandatory, roof and offset are
// carried when the producer has them. Score orders the matcher.
struct PredictionInstance {
    std::int64_t image_id = 0;
    std::optional<Polygon> roof;
    Polygon footprint;
    std::optional<OffsetVector> offset;
    double score = 1.0;
};

enum class Track { roof, footprint };
std::string to_string(Track t);

enum class IouKind { mask, boundary };

struct MatchPair {
    int pred_index = -1;
    int gt_index = -1;
    double iou = 0.0;
};

struct MatchResult {
    std::vector<MatchPair> pairs;     // matched (pred, gt) with their IoU
    std::vector<int> unmatched_pred;  // false positives
    std::vector<int> unmatched_gt;    // false negatives
};

// Greedy one-to-one matching: predictions in descending score order (ties:
// input order) each claim the highest-IoU unclaimed ground truth with
// IoU >= threshold. `iou` indexes pred i, gt j as i * n_gt + j.
MatchResult match_greedy(const std::vector<double>& scores,
                         const std::vector<double>& iou,
                         int n_pred, int n_gt, double iou_threshold);

// Single-image matching on rasterized polygons of the chosen track.
// boundary_d is the band half-width used when kind == boundary.
// Instances whose image_id differs from image.id raise IntegrityError.
// Predictions lacking the track's polygon are left out entirely (their
// indices appear in neither pairs nor unmatched_pred).
MatchResult match_instances(const std::vector<PredictionInstance>& preds,
                            const std::vector<BuildingAnnotation>& gts,
                            const ImageRecord& image, Track track,
                            IouKind kind, double threshold, double boundary_d);

struct PrF1 {
    double precision = 0.0;  // ratios in [0, 1]
    double recall = 0.0;
    double f1 = 0.0;
    long tp = 0, fp = 0, fn = 0;
};

// P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R); zero denominators give 0.
PrF1 precision_recall_f1(long tp, long fp, long fn);
PrF1 precision_recall_f1(const MatchResult& m);

struct EvalConfig {
    double iou_threshold = 0.5;
    // Boundary band half-width in pixels; when absent, 2% of the image
    // diagonal, resolved per image.
    std::optional<double> boundary_d;
    int jobs = 1;
};

// 101-point interpolated average precision over the global score sweep,
// matches decided per image at boundary IoU >= 0.5. Returns a ratio in
// [0,1]; no ground truth: 1.0 if there are also no predictions, else 0.0.
double boundary_ap50(const Dataset& gt, const std::vector<PredictionInstance>& preds,
                     Track track, const EvalConfig& cfg);

// Mean Euclidean distance between predicted and ground-truth offsets over
// footprint true positives; absent (not zero) when there are no pairs.
std::optional<double> epe(const std::vector<std::pair<OffsetVector, OffsetVector>>& pairs);

struct TrackMetrics {
    double precision = 0.0;      // percent
    double recall = 0.0;         // percent
    double f1 = 0.0;             // percent
    double ap50_boundary = 0.0;  // percent
    long tp = 0, fp = 0, fn = 0;
    // Pixels; only the footprint track carries it, and only when at least
    // one true positive has a predicted offset.
    std::optional<double> mean_epe;
};

struct MetricsReport {
    TrackMetrics roof;
    TrackMetrics footprint;
    long n_images = 0;
    long n_gt = 0;
    long n_pred = 0;
};

// Full protocol: per image, rasterize polygons, greedy-match each track at
// mask IoU >= threshold, aggregate counts globally; boundary AP over the
// global score sweep; EPE over footprint true positives carrying offsets.
MetricsReport evaluate_dataset(const Dataset& gt,
                               const std::vector<PredictionInstance>& preds,
                               const EvalConfig& cfg);

std::vector<PredictionInstance> load_predictions(const std::string& path);
void save_predictions(const std::vector<PredictionInstance>& preds, const std::string& path);

void write_report_json(const MetricsReport& r, const EvalConfig& cfg, const std::string& path);
// Two rows (roof, footprint) under the header
// track,f1,precision,recall,ap50_boundary,mean_epe,tp,fp,fn
void write_report_csv(const MetricsReport& r, const std::string& path);

}  // namespace offnadir
