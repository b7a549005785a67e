// Acceptance gate: ten behavioral criteria, one pass/fail line each.
// Exit code is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "offnadir/data_model.hpp"
#include "offnadir/evaluation.hpp"
#include "offnadir/foa.hpp"
#include "offnadir/geometry.hpp"
#include "offnadir/offset_learning.hpp"
#include "offnadir/synth.hpp"
#include "offnadir/toy_trainer.hpp"
#include "oracles.hpp"

using namespace offnadir;

namespace {

struct Ctx {
    std::vector<std::string> errors;

    void require(bool cond, const std::string& msg) {
        if (!cond) errors.push_back(msg);
    }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// 1. With ground-truth offsets attached to (jittered) roof predictions, the
//    footprint track must count exactly the same TP/FP/FN as the roof track.
void criterion_count_identity(Ctx& c) {
    SceneConfig sc;
    sc.width = 2048;
    sc.height = 2048;
    sc.n_buildings = 200;
    sc.seed = 101;
    const Dataset gt = generate_scene(sc);

    NoiseConfig n;
    n.vertex_jitter_sigma = 1.0;
    n.offset_noise_sigma = 0.0;  // exact offsets
    n.seed = 102;
    const std::vector<PredictionInstance> preds = perturb_predictions(gt, n);

    const MetricsReport r = evaluate_dataset(gt, preds, {});
    c.require(r.roof.tp == r.footprint.tp,
              "tp differ: roof " + std::to_string(r.roof.tp) + " footprint " +
                  std::to_string(r.footprint.tp));
    c.require(r.roof.fp == r.footprint.fp,
              "fp differ: roof " + std::to_string(r.roof.fp) + " footprint " +
                  std::to_string(r.footprint.fp));
    c.require(r.roof.fn == r.footprint.fn,
              "fn differ: roof " + std::to_string(r.roof.fn) + " footprint " +
                  std::to_string(r.footprint.fn));
    c.require(r.roof.tp > 150, "degenerate scene: only " + std::to_string(r.roof.tp) + " TPs");
}

// ---------------------------------------------------------------------------
// 2. Offset noise must hurt only the footprint track: roof F1 bitwise
//    constant across the sigma sweep, footprint F1 monotone non-increasing;
//    with exact roofs and zero offset noise both tracks are perfect.
void criterion_offset_sensitivity(Ctx& c) {
    SceneConfig sc;
    sc.width = 1024;
    sc.height = 1024;
    sc.n_buildings = 100;
    sc.seed = 201;
    const Dataset gt = generate_scene(sc);

    NoiseConfig exact;
    exact.seed = 202;
    const MetricsReport perfect = evaluate_dataset(gt, perturb_predictions(gt, exact), {});
    c.require(perfect.roof.f1 == 100.0, "exact roofs: roof F1 " + fmt(perfect.roof.f1));
    c.require(perfect.footprint.f1 == 100.0,
              "exact roofs, exact offsets: footprint F1 " + fmt(perfect.footprint.f1));

    double roof_f1 = -1.0;
    double prev_fp_f1 = 1e9;
    for (double sigma : {0.0, 2.0, 4.0, 8.0}) {
        NoiseConfig n;
        n.vertex_jitter_sigma = 1.0;  // fixed roof jitter, independent stream
        n.offset_noise_sigma = sigma;
        n.seed = 202;
        const MetricsReport r = evaluate_dataset(gt, perturb_predictions(gt, n), {});
        if (roof_f1 < 0.0)
            roof_f1 = r.roof.f1;
        else
            c.require(r.roof.f1 == roof_f1, "roof F1 moved at sigma " + fmt(sigma) + ": " +
                                                fmt(r.roof.f1) + " vs " + fmt(roof_f1));
        c.require(r.footprint.f1 <= prev_fp_f1,
                  "footprint F1 rose at sigma " + fmt(sigma) + ": " + fmt(r.footprint.f1) +
                      " after " + fmt(prev_fp_f1));
        prev_fp_f1 = r.footprint.f1;
    }
    c.require(prev_fp_f1 < 100.0, "sigma 8 left footprint F1 at 100; sweep is vacuous");
}

// ---------------------------------------------------------------------------
// 3. End-point error: exact value on a pinned pair, and the Monte-Carlo mean
//    under isotropic Gaussian offset noise matches sigma * sqrt(pi/2).
void criterion_epe(Ctx& c) {
    const auto single = epe({{OffsetVector{3.0, 4.0}, OffsetVector{0.0, 0.0}}});
    c.require(single.has_value() && *single == 5.0,
              "pinned pair: expected exactly 5.0, got " + fmt(single.value_or(-1.0)));

    const double sigma = 2.0;
    std::vector<std::pair<OffsetVector, OffsetVector>> pairs;
    pairs.reserve(10000);
    for (int s = 0; s < 50; ++s) {
        SceneConfig sc;
        sc.width = 2048;
        sc.height = 2048;
        sc.n_buildings = 200;
        sc.seed = 300 + s;
        const Dataset gt = generate_scene(sc);

        NoiseConfig n;
        n.offset_noise_sigma = sigma;
        n.seed = 400 + s;
        const std::vector<PredictionInstance> preds = perturb_predictions(gt, n);
        for (std::size_t i = 0; i < preds.size(); ++i)
            pairs.push_back({*preds[i].offset, gt.annotations[i].offset});
    }
    c.require(pairs.size() == 10000, "expected 10000 instances, got " +
                                         std::to_string(pairs.size()));
    const double mean = epe(pairs).value_or(-1.0);
    const double expect = sigma * std::sqrt(std::numbers::pi / 2.0);
    c.require(std::abs(mean - expect) <= 0.03 * expect,
              "mean EPE " + fmt(mean) + " vs expected " + fmt(expect) + " (3% band)");
}

// ---------------------------------------------------------------------------
// 4. Rotation numerics: four quarter turns are the identity on any 7x7 map,
//    offset rotate/inverse-rotate round trips to 1e-12, and fusing agreeing
//    branch candidates returns the common offset to 1e-9.
void criterion_rotation_numerics(Ctx& c) {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    for (int trial = 0; trial < 5; ++trial) {
        FeatureMap f(3, 7, 7);
        for (double& v : f.values) v = u(rng);
        FeatureMap r = f;
        for (int k = 0; k < 4; ++k) r = rotate_feature_map(r, std::numbers::pi / 2.0);
        c.require(r.values == f.values,
                  "four quarter turns changed map bits (trial " + std::to_string(trial) + ")");
    }

    std::uniform_real_distribution<double> mag(0.0, 100.0);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
    double worst_rt = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const OffsetVector o{mag(rng) * u(rng), mag(rng) * u(rng)};
        const double theta = ang(rng);
        const OffsetVector back = inverse_rotate_offset(rotate_offset(o, theta), theta);
        worst_rt = std::max({worst_rt, std::abs(back.ox - o.ox), std::abs(back.oy - o.oy)});
    }
    c.require(worst_rt <= 1e-12, "rotate round trip deviation " + fmt(worst_rt));

    const RotationAngleSet quarters = RotationAngleSet::quarter_turns();
    double worst_fuse = 0.0;
    for (int i = 0; i < 100; ++i) {
        const OffsetVector o = from_polar(mag(rng), ang(rng));
        std::vector<OffsetVector> cands;
        for (double a : quarters.angles)
            cands.push_back(inverse_rotate_offset(rotate_offset(o, a), a));
        for (FusionStrategy s : {FusionStrategy::max_norm, FusionStrategy::mean}) {
            const OffsetVector fused = fuse_offsets(cands, s);
            worst_fuse = std::max({worst_fuse, std::abs(fused.ox - o.ox),
                                   std::abs(fused.oy - o.oy)});
        }
    }
    c.require(worst_fuse <= 1e-9, "agreeing-branch fusion deviation " + fmt(worst_fuse));
}

// ---------------------------------------------------------------------------
// 5. Analytic gradients of the branch-summed objective match central finite
//    differences over every parameter at 20 random points per angle set.
void criterion_gradcheck(Ctx& c) {
    const int channels = 2, grid = 7, hidden = 8;
    const int input_dim = channels * grid * grid;
    const Proposal prop{BBox{0.0, 0.0, 32.0, 32.0}};
    const double beta = 1.0, h = 1e-5;

    const RotationAngleSet sets[2] = {RotationAngleSet::identity_only(),
                                      RotationAngleSet::quarter_turns()};
    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    for (const RotationAngleSet& angles : sets) {
        double worst = 0.0;
        for (int point = 0; point < 20; ++point) {
            RegressorParams params;
            FeatureMap f(channels, grid, grid);
            OffsetVector gt{};
            // Redraw until every branch residual is clear of the smooth-L1 kink.
            for (bool ok = false; !ok;) {
                params = RegressorParams::init(input_dim, hidden, rng());
                for (double& v : f.values) v = u(rng);
                gt = {20.0 * u(rng), 20.0 * u(rng)};
                ok = true;
                for (double a : angles.angles) {
                    const FeatureMap fr = rotate_feature_map(f, a);
                    const EncodedOffset pred = forward_regressor(params, fr);
                    const EncodedOffset tgt = encode_offset(rotate_offset(gt, a), prop);
                    for (double x : {pred.phi_x - tgt.phi_x, pred.phi_y - tgt.phi_y})
                        if (std::abs(std::abs(x) - beta) < 0.05) ok = false;
                }
            }

            const RegressorGrads g =
                foa_loss_and_gradient(params, f, gt, prop, angles, beta).grad;
            auto loss_at = [&](const RegressorParams& p) {
                const auto losses =
                    foa_loss_and_gradient(p, f, gt, prop, angles, beta).branch_losses;
                double total = 0.0;
                for (double l : losses) total += l;
                return total;
            };

            auto check_block = [&](std::vector<double> RegressorParams::* pm,
                                   std::vector<double> RegressorGrads::* gm) {
                const std::size_t n = (params.*pm).size();
                for (std::size_t i = 0; i < n; ++i) {
                    RegressorParams p = params;
                    (p.*pm)[i] += h;
                    const double up = loss_at(p);
                    (p.*pm)[i] -= 2.0 * h;
                    const double down = loss_at(p);
                    const double num = (up - down) / (2.0 * h);
                    const double ana = (g.*gm)[i];
                    const double rel = std::abs(num - ana) /
                                       std::max({std::abs(num), std::abs(ana), 1e-5});
                    worst = std::max(worst, rel);
                }
            };
            check_block(&RegressorParams::w1, &RegressorGrads::w1);
            check_block(&RegressorParams::b1, &RegressorGrads::b1);
            check_block(&RegressorParams::w2, &RegressorGrads::w2);
            check_block(&RegressorParams::b2, &RegressorGrads::b2);
        }
        c.require(worst < 1e-4, std::to_string(angles.size()) +
                                    "-angle set: worst relative error " + fmt(worst));
    }
}

// ---------------------------------------------------------------------------
// 6. Toy training: the four-angle model reaches sub-pixel held-out EPE and is
//    no worse than 1.05x the single-angle model on the same held-out set.
void criterion_toy_training(Ctx& c) {
    ToyTrainConfig single;
    single.angles = {0.0};
    single.steps = 1500;
    single.seed = 42;

    ToyTrainConfig four = single;
    four.angles = {0.0, std::numbers::pi / 2.0, std::numbers::pi,
                   3.0 * std::numbers::pi / 2.0};

    const ToyTrainResult rs = run_toy_training(single);
    const ToyTrainResult rf = run_toy_training(four);

    c.require(rf.heldout_epe < 1.0,
              "four-angle held-out EPE " + fmt(rf.heldout_epe) + " not below 1 px");
    c.require(rf.heldout_epe <= 1.05 * rs.heldout_epe,
              "four-angle EPE " + fmt(rf.heldout_epe) + " exceeds 1.05 x single-angle " +
                  fmt(rs.heldout_epe));
}

// ---------------------------------------------------------------------------
// 7. Rasterize -> extract -> rasterize round trip: IoU >= 0.99 for axis-
//    aligned rectangles, >= 0.95 for random convex polygons of area >= 400.
void criterion_geometry_round_trip(Ctx& c) {
    const int W = 96, H = 96;
    std::mt19937_64 rng(707);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    auto round_trip_iou = [&](const Polygon& poly) {
        const BitMask m = rasterize(poly, W, H);
        BitMask again(W, H);
        for (const Polygon& part : mask_to_polygons(m)) {
            const BitMask pm = rasterize(part, W, H);
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x)
                    if (pm.at(x, y)) again.set(x, y, true);
        }
        return mask_iou(m, again);
    };

    double worst_rect = 1.0;
    for (int i = 0; i < 50; ++i) {
        const double x0 = 2.0 + 28.0 * u01(rng), y0 = 2.0 + 28.0 * u01(rng);
        const double w = 20.0 + 40.0 * u01(rng), h = 20.0 + 40.0 * u01(rng);
        const Polygon rect{{{x0, y0}, {x0 + w, y0}, {x0 + w, y0 + h}, {x0, y0 + h}}};
        worst_rect = std::min(worst_rect, round_trip_iou(rect));
    }
    c.require(worst_rect >= 0.99, "worst rectangle round-trip IoU " + fmt(worst_rect));

    double worst_convex = 1.0;
    for (int i = 0; i < 50; ++i) {
        Polygon poly;
        for (;;) {
            poly.vertices.clear();
            const int n = 5 + static_cast<int>(u01(rng) * 4.0);
            std::vector<double> angs(n);
            for (double& a : angs) a = u01(rng) * 2.0 * std::numbers::pi;
            std::sort(angs.begin(), angs.end());
            bool distinct = true;
            for (int k = 1; k < n; ++k)
                if (angs[k] - angs[k - 1] < 0.15) distinct = false;
            if (!distinct) continue;
            const double cx = 30.0 + 36.0 * u01(rng), cy = 30.0 + 36.0 * u01(rng);
            const double r = 14.0 + 14.0 * u01(rng);
            for (double a : angs)
                poly.vertices.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
            if (polygon_area(poly) >= 400.0) break;
        }
        worst_convex = std::min(worst_convex, round_trip_iou(poly));
    }
    c.require(worst_convex >= 0.95, "worst convex round-trip IoU " + fmt(worst_convex));
}

// ---------------------------------------------------------------------------
// 8. Matching, F1, and boundary AP agree with brute-force oracles on toy
//    cases of at most four instances, across 50 randomized trials.
void criterion_metric_oracles(Ctx& c) {
    std::mt19937_64 rng(808);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    for (int trial = 0; trial < 50; ++trial) {
        // Part A: greedy matching + F1 against the independent oracle on a
        // random score vector and IoU matrix.
        const int n_pred = static_cast<int>(u01(rng) * 5.0);
        const int n_gt = static_cast<int>(u01(rng) * 5.0);
        std::vector<double> scores(n_pred), iou(static_cast<std::size_t>(n_pred) * n_gt);
        for (double& s : scores) s = u01(rng);
        for (double& v : iou) v = u01(rng);
        const double thr = 0.25 + 0.5 * u01(rng);

        const MatchResult got = match_greedy(scores, iou, n_pred, n_gt, thr);
        const auto want = oracle::match_naive(scores, iou, n_pred, n_gt, thr);
        bool same = got.pairs.size() == want.size();
        if (same)
            for (std::size_t k = 0; k < want.size(); ++k)
                same = same && got.pairs[k].pred_index == want[k][0] &&
                       got.pairs[k].gt_index == want[k][1];
        c.require(same, "trial " + std::to_string(trial) + ": match disagrees with oracle");

        // Greedy maximality: no eligible pair left between the leftovers.
        for (int p : got.unmatched_pred)
            for (int g : got.unmatched_gt)
                c.require(iou[static_cast<std::size_t>(p) * n_gt + g] < thr,
                          "trial " + std::to_string(trial) + ": pair (" + std::to_string(p) +
                              "," + std::to_string(g) + ") left unmatched above threshold");

        const long tp = static_cast<long>(got.pairs.size());
        const long fp = static_cast<long>(got.unmatched_pred.size());
        const long fn = static_cast<long>(got.unmatched_gt.size());
        const PrF1 f = precision_recall_f1(tp, fp, fn);
        const double prec = (tp + fp) ? static_cast<double>(tp) / (tp + fp) : 0.0;
        const double rec = (tp + fn) ? static_cast<double>(tp) / (tp + fn) : 0.0;
        const double f1 = (prec + rec > 0.0) ? 2.0 * prec * rec / (prec + rec) : 0.0;
        c.require(std::abs(f.precision - prec) <= 1e-15 && std::abs(f.recall - rec) <= 1e-15 &&
                      std::abs(f.f1 - f1) <= 1e-15,
                  "trial " + std::to_string(trial) + ": F1 disagrees with direct counts");

        // Part B: boundary AP on constructed polygons with known TP flags.
        Dataset gt;
        gt.images.push_back({1, "toy.png", 64, 64});
        const double slot_x[4] = {4.0, 34.0, 4.0, 34.0};
        const double slot_y[4] = {4.0, 4.0, 34.0, 34.0};
        const int gts = static_cast<int>(u01(rng) * 5.0);
        std::vector<PredictionInstance> preds;
        std::vector<std::tuple<double, long, bool>> entries;
        for (int g = 0; g < gts; ++g) {
            const Polygon box{{{slot_x[g], slot_y[g]},
                               {slot_x[g] + 20.0, slot_y[g]},
                               {slot_x[g] + 20.0, slot_y[g] + 20.0},
                               {slot_x[g], slot_y[g] + 20.0}}};
            gt.annotations.push_back(annotate_from_roof(box, {0.0, 0.0}, 1, g + 1));
            if (u01(rng) < 0.7) {  // exact-copy prediction: a guaranteed TP
                PredictionInstance p;
                p.image_id = 1;
                p.roof = box;
                p.footprint = box;
                p.score = u01(rng);
                entries.push_back({p.score, static_cast<long>(preds.size()), true});
                preds.push_back(p);
            }
        }
        const int spurious = static_cast<int>(u01(rng) * 3.0);
        for (int s = 0; s < spurious; ++s) {
            // 4-px boxes in the hallway between slots: disjoint from every gt.
            const double x = 26.0 + 2.0 * s, y = 27.0;
            PredictionInstance p;
            p.image_id = 1;
            p.roof = Polygon{{{x, y}, {x + 4.0, y}, {x + 4.0, y + 4.0}, {x, y + 4.0}}};
            p.footprint = *p.roof;
            p.score = u01(rng);
            entries.push_back({p.score, static_cast<long>(preds.size()), false});
            preds.push_back(p);
        }
        EvalConfig cfg;
        cfg.boundary_d = 2.0;
        const double got_ap = boundary_ap50(gt, preds, Track::footprint, cfg);
        const double want_ap = oracle::ap101_naive(entries, gts);
        c.require(std::abs(got_ap - want_ap) <= 1e-12,
                  "trial " + std::to_string(trial) + ": AP " + fmt(got_ap) + " vs oracle " +
                      fmt(want_ap));
    }
}

// ---------------------------------------------------------------------------
// 9. Offset encoding: pinned exact value, decode-encode identity to 1e-12,
//    and the joint loss at (1,1,1,1) with default weights equals 5.
void criterion_encoding(Ctx& c) {
    const Proposal p100{BBox{0.0, 0.0, 100.0, 50.0}};
    const EncodedOffset e = encode_offset({10.0, -5.0}, p100);
    c.require(e.phi_x == 0.1 && e.phi_y == -0.1,
              "encode(10,-5 | 100x50) = (" + fmt(e.phi_x) + "," + fmt(e.phi_y) + ")");

    std::mt19937_64 rng(909);
    std::uniform_real_distribution<double> dim(1.0, 1024.0);
    std::uniform_real_distribution<double> off(-300.0, 300.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Proposal p{BBox{0.0, 0.0, dim(rng), dim(rng)}};
        const OffsetVector o{off(rng), off(rng)};
        const OffsetVector back = decode_offset(encode_offset(o, p), p);
        worst = std::max({worst, std::abs(back.ox - o.ox) / std::max(1.0, std::abs(o.ox)),
                          std::abs(back.oy - o.oy) / std::max(1.0, std::abs(o.oy))});
    }
    c.require(worst <= 1e-12, "decode-encode deviation " + fmt(worst));

    const double jl = joint_loss(1.0, 1.0, 1.0, 1.0, {});
    c.require(jl == 5.0, "joint_loss(1,1,1,1) = " + fmt(jl));
}

// ---------------------------------------------------------------------------
// 10. Determinism through the real CLI: repeated seeded synth and train-toy
//     runs must produce byte-identical files.
void criterion_cli_determinism(Ctx& c) {
    const std::string cfg = testutil::scratch_path("acc_scene_cfg.json");
    testutil::write_text_file(cfg, R"({"width": 512, "height": 512, "n_buildings": 12})");

    const std::string ds1 = testutil::scratch_path("acc_ds1.json");
    const std::string ds2 = testutil::scratch_path("acc_ds2.json");
    const std::string pr1 = testutil::scratch_path("acc_pr1.json");
    const std::string pr2 = testutil::scratch_path("acc_pr2.json");
    int rc = testutil::run_cli("synth --config " + cfg + " --seed 77 --out " + ds1 +
                               " --pred-out " + pr1);
    rc |= testutil::run_cli("synth --config " + cfg + " --seed 77 --out " + ds2 +
                            " --pred-out " + pr2);
    c.require(rc == 0, "synth runs failed");
    c.require(!testutil::slurp(ds1).empty(), "synth wrote an empty dataset");
    c.require(testutil::slurp(ds1) == testutil::slurp(ds2), "synth outputs differ");
    c.require(testutil::slurp(pr1) == testutil::slurp(pr2), "prediction outputs differ");

    const std::string ck1 = testutil::scratch_path("acc_ck1.json");
    const std::string ck2 = testutil::scratch_path("acc_ck2.json");
    const std::string ep1 = testutil::scratch_path("acc_ep1.json");
    const std::string ep2 = testutil::scratch_path("acc_ep2.json");
    const std::string base =
        "train-toy --angles 0,90,180,270 --fusion max_norm --steps 300 --seed 5 ";
    rc = testutil::run_cli(base + "--out " + ck1 + " --report " + ep1);
    rc |= testutil::run_cli(base + "--out " + ck2 + " --report " + ep2);
    c.require(rc == 0, "train-toy runs failed");
    c.require(!testutil::slurp(ck1).empty(), "train-toy wrote an empty checkpoint");
    c.require(testutil::slurp(ck1) == testutil::slurp(ck2), "checkpoints differ");
    c.require(testutil::slurp(ep1) == testutil::slurp(ep2), "reports differ");
}

struct Criterion {
    const char* title;
    double time_limit_s;  // 0 = no limit
    void (*body)(Ctx&);
};

}  // namespace

int main() {
    const Criterion criteria[] = {
        {"footprint counts equal roof counts under exact offsets", 10.0,
         criterion_count_identity},
        {"offset noise degrades only the footprint track", 30.0,
         criterion_offset_sensitivity},
        {"end-point error: pinned value and Monte-Carlo mean", 0.0, criterion_epe},
        {"quarter-turn, round-trip, and fusion numerics", 0.0, criterion_rotation_numerics},
        {"analytic gradients match finite differences", 0.0, criterion_gradcheck},
        {"four-angle toy training reaches sub-pixel held-out EPE", 120.0,
         criterion_toy_training},
        {"rasterize/extract/rasterize round trip", 0.0, criterion_geometry_round_trip},
        {"matching, F1, and boundary AP match brute-force oracles", 0.0,
         criterion_metric_oracles},
        {"offset encoding identities and joint-loss constant", 0.0, criterion_encoding},
        {"seeded CLI runs are byte-identical", 0.0, criterion_cli_determinism},
    };

    int failures = 0;
    int index = 0;
    for (const Criterion& cr : criteria) {
        ++index;
        Ctx ctx;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            cr.body(ctx);
        } catch (const std::exception& e) {
            ctx.errors.push_back(std::string("exception: ") + e.what());
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (cr.time_limit_s > 0.0 && elapsed > cr.time_limit_s)
            ctx.errors.push_back("runtime " + fmt(elapsed) + " s exceeds limit " +
                                 fmt(cr.time_limit_s) + " s");
        if (ctx.errors.empty()) {
            std::printf("[PASS] %2d/10 %s (%.2f s)\n", index, cr.title, elapsed);
        } else {
            ++failures;
            std::printf("[FAIL] %2d/10 %s (%.2f s)\n", index, cr.title, elapsed);
            for (const std::string& e : ctx.errors) std::printf("       - %s\n", e.c_str());
        }
    }
    std::printf("%d/10 criteria passed\n", 10 - failures);
    return failures;
}
