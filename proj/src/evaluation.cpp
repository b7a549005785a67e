#include "offnadir/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "json_common.hpp"

namespace offnadir {

namespace {

using detail::ordered_json;

// Instance raster clipped to its bounding window; exact stand-in for the
// full-image raster (the polygon's pixels all live inside the window, and
// the distance transform's virtual background ring matches the rest of the
// image, which is background for this one instance).
struct WindowMask {
    int x0 = 0, y0 = 0;
    BitMask m;
    std::size_t pop = 0;
};

WindowMask make_window(const Polygon& poly, int img_w, int img_h) {
    double minx = std::numeric_limits<double>::infinity(), maxx = -minx;
    double miny = minx, maxy = -minx;
    for (const Point2& v : poly.vertices) {
        minx = std::min(minx, v.x);
        maxx = std::max(maxx, v.x);
        miny = std::min(miny, v.y);
        maxy = std::max(maxy, v.y);
    }
    WindowMask w;
    if (poly.vertices.empty() || !std::isfinite(minx)) return w;
    w.x0 = std::clamp(static_cast<int>(std::floor(minx)) - 1, 0, img_w);
    w.y0 = std::clamp(static_cast<int>(std::floor(miny)) - 1, 0, img_h);
    const int x1 = std::clamp(static_cast<int>(std::ceil(maxx)) + 1, 0, img_w);
    const int y1 = std::clamp(static_cast<int>(std::ceil(maxy)) + 1, 0, img_h);
    if (x1 <= w.x0 || y1 <= w.y0) return w;  // entirely outside the image
    w.m = rasterize(translate(poly, -w.x0, -w.y0), x1 - w.x0, y1 - w.y0);
    w.pop = w.m.count();
    return w;
}

double window_iou(const WindowMask& a, const WindowMask& b) {
    if (a.pop == 0 && b.pop == 0) return 1.0;  // both-empty convention
    if (a.pop == 0 || b.pop == 0) return 0.0;
    const int ox0 = std::max(a.x0, b.x0), oy0 = std::max(a.y0, b.y0);
    const int ox1 = std::min(a.x0 + a.m.width, b.x0 + b.m.width);
    const int oy1 = std::min(a.y0 + a.m.height, b.y0 + b.m.height);
    std::size_t inter = 0;
    for (int y = oy0; y < oy1; ++y)
        for (int x = ox0; x < ox1; ++x)
            inter += a.m.at(x - a.x0, y - a.y0) && b.m.at(x - b.x0, y - b.y0);
    const std::size_t uni = a.pop + b.pop - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

WindowMask band_window(const WindowMask& w, double d) {
    if (w.pop == 0) return w;
    WindowMask b;
    b.x0 = w.x0;
    b.y0 = w.y0;
    b.m = boundary_band(w.m, d);
    b.pop = b.m.count();
    return b;
}

MatchResult greedy_on_windows(const std::vector<WindowMask>& pw,
                              const std::vector<double>& scores,
                              const std::vector<WindowMask>& gw, double threshold) {
    const int n_pred = static_cast<int>(pw.size());
    const int n_gt = static_cast<int>(gw.size());
    std::vector<double> iou(static_cast<std::size_t>(n_pred) * n_gt, 0.0);
    for (int i = 0; i < n_pred; ++i)
        for (int j = 0; j < n_gt; ++j)
            iou[static_cast<std::size_t>(i) * n_gt + j] = window_iou(pw[i], gw[j]);
    return match_greedy(scores, iou, n_pred, n_gt, threshold);
}

struct ApEntry {
    double score = 0.0;
    long order = 0;  // global insertion index, breaks score ties
    bool tp = false;
};

struct TrackCounts {
    long tp = 0, fp = 0, fn = 0;
};

struct ImageEvalResult {
    TrackCounts roof, footprint;
    std::vector<std::pair<OffsetVector, OffsetVector>> epe_pairs;
    std::vector<ApEntry> roof_ap, footprint_ap;
};

struct ImageJob {
    const ImageRecord* image = nullptr;
    std::vector<const BuildingAnnotation*> gts;
    std::vector<int> pred_idx;  // indices into the global prediction list
};

ImageEvalResult evaluate_image(const ImageJob& job,
                               const std::vector<PredictionInstance>& preds,
                               const EvalConfig& cfg) {
    const ImageRecord& im = *job.image;
    const double d = cfg.boundary_d ? *cfg.boundary_d
                                    : 0.02 * std::hypot(static_cast<double>(im.width),
                                                        static_cast<double>(im.height));
    ImageEvalResult r;

    std::vector<WindowMask> gt_roof, gt_fp;
    gt_roof.reserve(job.gts.size());
    gt_fp.reserve(job.gts.size());
    for (const BuildingAnnotation* a : job.gts) {
        gt_roof.push_back(make_window(a->roof, im.width, im.height));
        gt_fp.push_back(make_window(a->footprint, im.width, im.height));
    }

    auto run_track = [&](Track track, TrackCounts& counts, std::vector<ApEntry>& ap_entries)
        -> MatchResult {
        std::vector<int> considered;  // global prediction indices on this track
        std::vector<WindowMask> pw;
        std::vector<double> scores;
        for (int gi : job.pred_idx) {
            const PredictionInstance& p = preds[gi];
            if (track == Track::roof && !p.roof) continue;
            const Polygon& poly = (track == Track::roof) ? *p.roof : p.footprint;
            considered.push_back(gi);
            pw.push_back(make_window(poly, im.width, im.height));
            scores.push_back(p.score);
        }
        const std::vector<WindowMask>& gw = (track == Track::roof) ? gt_roof : gt_fp;

        MatchResult m = greedy_on_windows(pw, scores, gw, cfg.iou_threshold);
        counts.tp += static_cast<long>(m.pairs.size());
        counts.fp += static_cast<long>(m.unmatched_pred.size());
        counts.fn += static_cast<long>(m.unmatched_gt.size());

        // Boundary AP entries: same instances matched on their bands.
        std::vector<WindowMask> pb, gb;
        pb.reserve(pw.size());
        gb.reserve(gw.size());
        for (const WindowMask& w : pw) pb.push_back(band_window(w, d));
        for (const WindowMask& w : gw) gb.push_back(band_window(w, d));
        MatchResult mb = greedy_on_windows(pb, scores, gb, 0.5);
        std::vector<char> is_tp(pw.size(), 0);
        for (const MatchPair& pr : mb.pairs) is_tp[pr.pred_index] = 1;
        for (std::size_t i = 0; i < considered.size(); ++i)
            ap_entries.push_back({scores[i], considered[i], is_tp[i] != 0});
        return m;
    };

    run_track(Track::roof, r.roof, r.roof_ap);
    MatchResult mf = run_track(Track::footprint, r.footprint, r.footprint_ap);

    // EPE only over footprint true positives that carry a predicted offset.
    std::vector<int> considered_fp;
    for (int gi : job.pred_idx) considered_fp.push_back(gi);
    for (const MatchPair& pr : mf.pairs) {
        const PredictionInstance& p = preds[considered_fp[pr.pred_index]];
        if (!p.offset) continue;
        r.epe_pairs.push_back({*p.offset, job.gts[pr.gt_index]->offset});
    }
    return r;
}

std::vector<ImageJob> build_jobs(const Dataset& gt, const std::vector<PredictionInstance>& preds) {
    std::unordered_map<std::int64_t, std::size_t> index;
    std::vector<ImageJob> jobs;
    jobs.reserve(gt.images.size());
    for (const ImageRecord& im : gt.images) {
        index.emplace(im.id, jobs.size());
        jobs.push_back({&im, {}, {}});
    }
    for (const BuildingAnnotation& a : gt.annotations) {
        auto it = index.find(a.image_id);
        if (it == index.end())
            throw IntegrityError("ground-truth annotation " + std::to_string(a.id) +
                                 " references unknown image id " + std::to_string(a.image_id));
        jobs[it->second].gts.push_back(&a);
    }
    for (std::size_t i = 0; i < preds.size(); ++i) {
        auto it = index.find(preds[i].image_id);
        if (it == index.end())
            throw IntegrityError("prediction references unknown image id " +
                                 std::to_string(preds[i].image_id));
        jobs[it->second].pred_idx.push_back(static_cast<int>(i));
    }
    return jobs;
}

std::vector<ImageEvalResult> run_images(const Dataset& gt,
                                        const std::vector<PredictionInstance>& preds,
                                        const EvalConfig& cfg) {
    std::vector<ImageJob> jobs = build_jobs(gt, preds);
    std::vector<ImageEvalResult> results(jobs.size());
    const int jobs_n = std::max(1, cfg.jobs);
    if (jobs_n == 1 || jobs.size() <= 1) {
        for (std::size_t i = 0; i < jobs.size(); ++i)
            results[i] = evaluate_image(jobs[i], preds, cfg);
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto worker = [&] {
        try {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= jobs.size()) return;
                results[i] = evaluate_image(jobs[i], preds, cfg);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mu);
            if (!error) error = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min<std::size_t>(jobs_n, jobs.size());
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return results;
}

// 101-point interpolated AP over the global score-ordered sweep.
double ap_101(std::vector<ApEntry> entries, long n_gt) {
    if (n_gt == 0) return entries.empty() ? 1.0 : 0.0;
    std::sort(entries.begin(), entries.end(), [](const ApEntry& a, const ApEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.order < b.order;
    });
    const std::size_t n = entries.size();
    std::vector<double> prec(n), rec(n);
    long tp = 0, fp = 0;
    for (std::size_t k = 0; k < n; ++k) {
        (entries[k].tp ? tp : fp) += 1;
        prec[k] = static_cast<double>(tp) / static_cast<double>(tp + fp);
        rec[k] = static_cast<double>(tp) / static_cast<double>(n_gt);
    }
    // Interpolated precision: best precision at recall >= r; recall is
    // non-decreasing in rank so a suffix max suffices.
    std::vector<double> best(n);
    double running = 0.0;
    for (std::size_t k = n; k-- > 0;) {
        running = std::max(running, prec[k]);
        best[k] = running;
    }
    double sum = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double r = i / 100.0;
        auto it = std::lower_bound(rec.begin(), rec.end(), r);
        if (it != rec.end()) sum += best[static_cast<std::size_t>(it - rec.begin())];
    }
    return sum / 101.0;
}

TrackMetrics make_track_metrics(const TrackCounts& c, double ap,
                                std::optional<double> mean_epe) {
    PrF1 pr = precision_recall_f1(c.tp, c.fp, c.fn);
    TrackMetrics t;
    t.precision = 100.0 * pr.precision;
    t.recall = 100.0 * pr.recall;
    t.f1 = 100.0 * pr.f1;
    t.ap50_boundary = 100.0 * ap;
    t.tp = c.tp;
    t.fp = c.fp;
    t.fn = c.fn;
    t.mean_epe = mean_epe;
    return t;
}

ordered_json track_to_json(const TrackMetrics& t) {
    ordered_json j;
    j["f1"] = t.f1;
    j["precision"] = t.precision;
    j["recall"] = t.recall;
    j["ap50_boundary"] = t.ap50_boundary;
    j["tp"] = t.tp;
    j["fp"] = t.fp;
    j["fn"] = t.fn;
    if (t.mean_epe)
        j["mean_epe"] = *t.mean_epe;
    else
        j["mean_epe"] = nullptr;
    return j;
}

}  // namespace

std::string to_string(Track t) { return t == Track::roof ? "roof" : "footprint"; }

MatchResult match_greedy(const std::vector<double>& scores, const std::vector<double>& iou,
                         int n_pred, int n_gt, double iou_threshold) {
    if (scores.size() != static_cast<std::size_t>(n_pred) ||
        iou.size() != static_cast<std::size_t>(n_pred) * n_gt)
        throw DimensionError("match_greedy: score/IoU buffer sizes do not match counts");

    std::vector<int> order(n_pred);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });

    MatchResult r;
    std::vector<char> gt_claimed(n_gt, 0), pred_matched(n_pred, 0);
    for (int i : order) {
        int best_j = -1;
        double best = -1.0;
        for (int j = 0; j < n_gt; ++j) {
            if (gt_claimed[j]) continue;
            const double v = iou[static_cast<std::size_t>(i) * n_gt + j];
            if (v >= iou_threshold && v > best) {  // ties keep the lowest gt index
                best = v;
                best_j = j;
            }
        }
        if (best_j >= 0) {
            gt_claimed[best_j] = 1;
            pred_matched[i] = 1;
            r.pairs.push_back({i, best_j, best});
        }
    }
    for (int i = 0; i < n_pred; ++i)
        if (!pred_matched[i]) r.unmatched_pred.push_back(i);
    for (int j = 0; j < n_gt; ++j)
        if (!gt_claimed[j]) r.unmatched_gt.push_back(j);
    return r;
}

MatchResult match_instances(const std::vector<PredictionInstance>& preds,
                            const std::vector<BuildingAnnotation>& gts,
                            const ImageRecord& image, Track track,
                            IouKind kind, double threshold, double boundary_d) {
    if (!(threshold > 0.0) || threshold > 1.0)
        throw std::invalid_argument("match_instances: threshold must be in (0, 1]");
    for (const PredictionInstance& p : preds)
        if (p.image_id != image.id)
            throw IntegrityError("match_instances: prediction from image " +
                                 std::to_string(p.image_id) + " mixed into image " +
                                 std::to_string(image.id));
    for (const BuildingAnnotation& a : gts)
        if (a.image_id != image.id)
            throw IntegrityError("match_instances: annotation " + std::to_string(a.id) +
                                 " mixed into image " + std::to_string(image.id));

    std::vector<int> considered;
    std::vector<WindowMask> pw;
    std::vector<double> scores;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (track == Track::roof && !preds[i].roof) continue;
        const Polygon& poly = (track == Track::roof) ? *preds[i].roof : preds[i].footprint;
        considered.push_back(static_cast<int>(i));
        pw.push_back(make_window(poly, image.width, image.height));
        scores.push_back(preds[i].score);
    }
    std::vector<WindowMask> gw;
    gw.reserve(gts.size());
    for (const BuildingAnnotation& a : gts)
        gw.push_back(make_window(track == Track::roof ? a.roof : a.footprint, image.width,
                                 image.height));
    if (kind == IouKind::boundary) {
        for (WindowMask& w : pw) w = band_window(w, boundary_d);
        for (WindowMask& w : gw) w = band_window(w, boundary_d);
    }

    MatchResult m = greedy_on_windows(pw, scores, gw, threshold);
    for (MatchPair& pr : m.pairs) pr.pred_index = considered[pr.pred_index];
    for (int& i : m.unmatched_pred) i = considered[i];
    std::sort(m.unmatched_pred.begin(), m.unmatched_pred.end());
    return m;
}

PrF1 precision_recall_f1(long tp, long fp, long fn) {
    PrF1 r;
    r.tp = tp;
    r.fp = fp;
    r.fn = fn;
    r.precision = (tp + fp > 0) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    r.recall = (tp + fn > 0) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    const double pr = r.precision + r.recall;
    r.f1 = (pr > 0.0) ? 2.0 * r.precision * r.recall / pr : 0.0;
    return r;
}

PrF1 precision_recall_f1(const MatchResult& m) {
    return precision_recall_f1(static_cast<long>(m.pairs.size()),
                               static_cast<long>(m.unmatched_pred.size()),
                               static_cast<long>(m.unmatched_gt.size()));
}

double boundary_ap50(const Dataset& gt, const std::vector<PredictionInstance>& preds,
                     Track track, const EvalConfig& cfg) {
    std::vector<ImageEvalResult> results = run_images(gt, preds, cfg);
    std::vector<ApEntry> entries;
    for (const ImageEvalResult& r : results) {
        const auto& e = (track == Track::roof) ? r.roof_ap : r.footprint_ap;
        entries.insert(entries.end(), e.begin(), e.end());
    }
    return ap_101(std::move(entries), static_cast<long>(gt.annotations.size()));
}

std::optional<double> epe(const std::vector<std::pair<OffsetVector, OffsetVector>>& pairs) {
    if (pairs.empty()) return std::nullopt;
    double sum = 0.0;
    for (const auto& [pred, truth] : pairs)
        sum += norm(OffsetVector{pred.ox - truth.ox, pred.oy - truth.oy});
    return sum / static_cast<double>(pairs.size());
}

MetricsReport evaluate_dataset(const Dataset& gt, const std::vector<PredictionInstance>& preds,
                               const EvalConfig& cfg) {
    std::vector<ImageEvalResult> results = run_images(gt, preds, cfg);

    TrackCounts roof, footprint;
    std::vector<std::pair<OffsetVector, OffsetVector>> epe_pairs;
    std::vector<ApEntry> roof_entries, fp_entries;
    for (const ImageEvalResult& r : results) {
        roof.tp += r.roof.tp;
        roof.fp += r.roof.fp;
        roof.fn += r.roof.fn;
        footprint.tp += r.footprint.tp;
        footprint.fp += r.footprint.fp;
        footprint.fn += r.footprint.fn;
        epe_pairs.insert(epe_pairs.end(), r.epe_pairs.begin(), r.epe_pairs.end());
        roof_entries.insert(roof_entries.end(), r.roof_ap.begin(), r.roof_ap.end());
        fp_entries.insert(fp_entries.end(), r.footprint_ap.begin(), r.footprint_ap.end());
    }
    const long n_gt = static_cast<long>(gt.annotations.size());

    MetricsReport rep;
    rep.roof = make_track_metrics(roof, ap_101(std::move(roof_entries), n_gt), std::nullopt);
    rep.footprint =
        make_track_metrics(footprint, ap_101(std::move(fp_entries), n_gt), epe(epe_pairs));
    rep.n_images = static_cast<long>(gt.images.size());
    rep.n_gt = n_gt;
    rep.n_pred = static_cast<long>(preds.size());
    return rep;
}

std::vector<PredictionInstance> load_predictions(const std::string& path) {
    ordered_json j = detail::parse_json_file(path, "predictions");
    if (!j.is_object()) throw ParseError("predictions root must be a JSON object: " + path);
    std::vector<PredictionInstance> out;
    std::size_t k = 0;
    for (const auto& ja : j.value("annotations", ordered_json::array())) {
        const std::string what = "prediction " + std::to_string(k++);
        PredictionInstance p;
        if (!ja.contains("image_id")) throw ParseError(what + " missing 'image_id'");
        p.image_id = ja["image_id"].get<std::int64_t>();
        if (!ja.contains("score") || !ja["score"].is_number())
            throw ParseError(what + " missing numeric 'score'");
        p.score = ja["score"].get<double>();
        if (ja.contains("roof"))
            p.roof = normalized_winding(detail::polygon_from_json(ja["roof"], what + " roof"));
        if (ja.contains("offset")) p.offset = detail::offset_from_json(ja["offset"], what);
        if (ja.contains("footprint")) {
            p.footprint = normalized_winding(
                detail::polygon_from_json(ja["footprint"], what + " footprint"));
        } else if (p.roof && p.offset) {
            p.footprint = derive_footprint(*p.roof, *p.offset);
        } else {
            throw ParseError(what + " needs 'footprint' or both 'roof' and 'offset'");
        }
        require_valid(p.footprint, what + " footprint");
        if (p.roof) require_valid(*p.roof, what + " roof");
        out.push_back(std::move(p));
    }
    return out;
}

void save_predictions(const std::vector<PredictionInstance>& preds, const std::string& path) {
    ordered_json j;
    j["annotations"] = ordered_json::array();
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const PredictionInstance& p = preds[i];
        ordered_json ja;
        ja["id"] = i + 1;
        ja["image_id"] = p.image_id;
        if (p.roof) ja["roof"] = detail::polygon_to_json(*p.roof);
        if (p.offset) ja["offset"] = {p.offset->ox, p.offset->oy};
        ja["footprint"] = detail::polygon_to_json(p.footprint);
        ja["score"] = p.score;
        j["annotations"].push_back(std::move(ja));
    }
    detail::write_json_file(j, path, "predictions");
}

void write_report_json(const MetricsReport& r, const EvalConfig& cfg, const std::string& path) {
    ordered_json j;
    j["config"]["iou_threshold"] = cfg.iou_threshold;
    if (cfg.boundary_d)
        j["config"]["boundary_d"] = *cfg.boundary_d;
    else
        j["config"]["boundary_d"] = nullptr;  // per image: 2% of the diagonal
    j["config"]["jobs"] = cfg.jobs;
    j["counts"] = {{"images", r.n_images}, {"ground_truths", r.n_gt}, {"predictions", r.n_pred}};
    j["roof"] = track_to_json(r.roof);
    j["footprint"] = track_to_json(r.footprint);
    detail::write_json_file(j, path, "report");
}

void write_report_csv(const MetricsReport& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open report CSV output: " + path);
    out << "track,f1,precision,recall,ap50_boundary,mean_epe,tp,fp,fn\n";
    auto row = [&](const char* name, const TrackMetrics& t) {
        out << name << ',' << detail::double_to_string(t.f1) << ','
            << detail::double_to_string(t.precision) << ','
            << detail::double_to_string(t.recall) << ','
            << detail::double_to_string(t.ap50_boundary) << ','
            << (t.mean_epe ? detail::double_to_string(*t.mean_epe) : std::string{}) << ','
            << t.tp << ',' << t.fp << ',' << t.fn << '\n';
    };
    row("roof", r.roof);
    row("footprint", r.footprint);
    if (!out) throw IoError("failed writing report CSV: " + path);
}

}  // namespace offnadir
