#include <cstdio>
#include <exception>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "offnadir/data_model.hpp"
#include "offnadir/evaluation.hpp"
#include "offnadir/offset_learning.hpp"
#include "offnadir/synth.hpp"
#include "offnadir/toy_trainer.hpp"

namespace {

std::vector<double> parse_angles_degrees(const std::string& csv) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const std::size_t comma = csv.find(',', pos);
        const std::string tok =
            csv.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (tok.empty()) throw std::invalid_argument("empty angle in list '" + csv + "'");
        std::size_t used = 0;
        const double deg = std::stod(tok, &used);
        if (used != tok.size())
            throw std::invalid_argument("bad angle '" + tok + "' in list '" + csv + "'");
        out.push_back(deg * std::numbers::pi / 180.0);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

int run_validate(const std::string& dataset_path, double tol) {
    const offnadir::Dataset d = offnadir::load_dataset(dataset_path);
    const std::vector<offnadir::Violation> violations = offnadir::validate(d, tol);
    if (violations.empty()) {
        std::cout << "0 violations\n";
        return 0;
    }
    std::printf("%-14s %-28s %s\n", "annotation_id", "rule", "magnitude");
    for (const offnadir::Violation& v : violations)
        std::printf("%-14lld %-28s %.9g\n", static_cast<long long>(v.annotation_id),
                    v.rule.c_str(), v.magnitude);
    std::cout << violations.size() << " violation(s)\n";
    return 1;
}

int run_derive(const std::string& dataset_path, const std::string& out_path) {
    const offnadir::Dataset d = offnadir::load_dataset(dataset_path);
    offnadir::save_dataset(d, out_path);
    std::cout << "wrote " << d.annotations.size() << " annotations to " << out_path << "\n";
    return 0;
}

int run_evaluate(const std::string& gt_path, const std::string& pred_path,
                 const std::string& out_path, const std::string& csv_path,
                 const offnadir::EvalConfig& cfg) {
    const offnadir::Dataset gt = offnadir::load_dataset(gt_path);
    const std::vector<offnadir::PredictionInstance> preds =
        offnadir::load_predictions(pred_path);
    const offnadir::MetricsReport report = offnadir::evaluate_dataset(gt, preds, cfg);
    offnadir::write_report_json(report, cfg, out_path);
    if (!csv_path.empty()) offnadir::write_report_csv(report, csv_path);
    std::printf("roof      F1 %.2f  P %.2f  R %.2f  AP50 %.2f\n", report.roof.f1,
                report.roof.precision, report.roof.recall, report.roof.ap50_boundary);
    std::printf("footprint F1 %.2f  P %.2f  R %.2f  AP50 %.2f\n", report.footprint.f1,
                report.footprint.precision, report.footprint.recall,
                report.footprint.ap50_boundary);
    if (report.footprint.mean_epe)
        std::printf("mean EPE  %.4f px\n", *report.footprint.mean_epe);
    return 0;
}

int run_synth(const std::string& config_path, std::uint64_t seed, const std::string& out_path,
              const std::string& pred_out, const std::string& noise_path) {
    offnadir::SceneConfig scene_cfg = offnadir::scene_config_from_json_file(config_path);
    scene_cfg.seed = seed;
    const offnadir::Dataset d = offnadir::generate_scene(scene_cfg);
    offnadir::save_dataset(d, out_path);
    std::cout << "scene: " << d.annotations.size() << " buildings -> " << out_path << "\n";
    if (!pred_out.empty()) {
        offnadir::NoiseConfig noise_cfg;
        if (!noise_path.empty()) noise_cfg = offnadir::noise_config_from_json_file(noise_path);
        noise_cfg.seed = seed + 1;
        const std::vector<offnadir::PredictionInstance> preds =
            offnadir::perturb_predictions(d, noise_cfg);
        offnadir::save_predictions(preds, pred_out);
        std::cout << "predictions: " << preds.size() << " instances -> " << pred_out << "\n";
    }
    return 0;
}

int run_train_toy(const offnadir::ToyTrainConfig& cfg, const std::string& out_path,
                  const std::string& report_path) {
    const offnadir::ToyTrainResult r = offnadir::run_toy_training(cfg);
    offnadir::save_checkpoint(r.params, r.meta, out_path);
    offnadir::write_epe_report(r, cfg, report_path);
    std::printf("train EPE %.4f px, heldout EPE %.4f px\n", r.train_epe, r.heldout_epe);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Off-nadir building footprint toolkit"};
    app.require_subcommand(1);

    auto* validate_cmd = app.add_subcommand("validate", "Check dataset consistency rules");
    std::string validate_dataset;
    double validate_tol = 1e-6;
    validate_cmd->add_option("--dataset", validate_dataset, "Dataset JSON path")->required();
    validate_cmd->add_option("--tol", validate_tol, "Consistency tolerance");

    auto* derive_cmd = app.add_subcommand("derive", "Fill missing footprints and bboxes");
    std::string derive_dataset, derive_out;
    derive_cmd->add_option("--dataset", derive_dataset, "Dataset JSON path")->required();
    derive_cmd->add_option("--out", derive_out, "Output dataset JSON path")->required();

    auto* eval_cmd = app.add_subcommand("evaluate", "Score predictions against ground truth");
    std::string eval_gt, eval_pred, eval_out, eval_csv;
    double eval_iou = 0.5;
    double eval_boundary_d = -1.0;
    int eval_jobs = 1;
    eval_cmd->add_option("--gt", eval_gt, "Ground-truth dataset JSON")->required();
    eval_cmd->add_option("--pred", eval_pred, "Predictions JSON")->required();
    eval_cmd->add_option("--out", eval_out, "Metrics report JSON path")->required();
    eval_cmd->add_option("--csv", eval_csv, "Optional metrics CSV path");
    eval_cmd->add_option("--iou", eval_iou, "Mask IoU match threshold");
    eval_cmd->add_option("--boundary-d", eval_boundary_d,
                         "Boundary band half-width in px (default: 2% of image diagonal)");
    eval_cmd->add_option("--jobs", eval_jobs, "Worker threads for per-image evaluation");

    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic off-nadir scene");
    std::string synth_config, synth_out, synth_pred_out, synth_noise;
    std::uint64_t synth_seed = 0;
    synth_cmd->add_option("--config", synth_config, "Scene config JSON")->required();
    synth_cmd->add_option("--seed", synth_seed, "Scene RNG seed (required)")->required();
    synth_cmd->add_option("--out", synth_out, "Output dataset JSON path")->required();
    synth_cmd->add_option("--pred-out", synth_pred_out, "Optional perturbed predictions path");
    synth_cmd->add_option("--noise", synth_noise, "Noise config JSON (with --pred-out)")
        ->needs(synth_cmd->get_option("--pred-out"));

    auto* train_cmd = app.add_subcommand("train-toy", "Train the offset regressor on "
                                                      "synthetic rotation-equivariant features");
    std::string train_angles = "0";
    std::string train_fusion = "max_norm";
    std::string train_out, train_report;
    offnadir::ToyTrainConfig toy_cfg;
    std::uint64_t train_seed = 0;
    train_cmd->add_option("--angles", train_angles, "Branch angles in degrees, e.g. 0,90,180,270");
    train_cmd->add_option("--fusion", train_fusion, "Fusion strategy: max_norm or mean")
        ->check(CLI::IsMember({"max_norm", "mean"}));
    train_cmd->add_option("--steps", toy_cfg.steps, "SGD steps");
    train_cmd->add_option("--seed", train_seed, "Training RNG seed (required)")->required();
    train_cmd->add_option("--out", train_out, "Checkpoint output path")->required();
    train_cmd->add_option("--report", train_report, "EPE report JSON path")->required();
    train_cmd->add_option("--hidden", toy_cfg.hidden_dim, "Hidden layer width");
    train_cmd->add_option("--channels", toy_cfg.channels, "Feature channels");
    train_cmd->add_option("--grid", toy_cfg.grid, "Feature grid size");
    train_cmd->add_option("--proposal-size", toy_cfg.proposal_size, "Proposal box side in px");
    train_cmd->add_option("--offset-max", toy_cfg.offset_max, "Max offset magnitude in px");
    train_cmd->add_option("--n-train", toy_cfg.n_train, "Training sample count");
    train_cmd->add_option("--n-heldout", toy_cfg.n_heldout, "Held-out sample count");
    train_cmd->add_option("--lr", toy_cfg.sgd.lr, "Learning rate");
    train_cmd->add_option("--momentum", toy_cfg.sgd.momentum, "SGD momentum");
    train_cmd->add_option("--weight-decay", toy_cfg.sgd.weight_decay, "Weight decay");
    train_cmd->add_option("--beta", toy_cfg.beta, "Smooth-L1 transition point");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        app.exit(e);
        return 2;
    }

    try {
        if (*validate_cmd) return run_validate(validate_dataset, validate_tol);
        if (*derive_cmd) return run_derive(derive_dataset, derive_out);
        if (*eval_cmd) {
            offnadir::EvalConfig cfg;
            cfg.iou_threshold = eval_iou;
            if (eval_cmd->count("--boundary-d")) cfg.boundary_d = eval_boundary_d;
            cfg.jobs = eval_jobs;
            return run_evaluate(eval_gt, eval_pred, eval_out, eval_csv, cfg);
        }
        if (*synth_cmd) return run_synth(synth_config, synth_seed, synth_out, synth_pred_out,
                                         synth_noise);
        if (*train_cmd) {
            toy_cfg.angles = parse_angles_degrees(train_angles);
            toy_cfg.fusion = train_fusion == "mean" ? offnadir::FusionStrategy::mean
                                                    : offnadir::FusionStrategy::max_norm;
            toy_cfg.seed = train_seed;
            return run_train_toy(toy_cfg, train_out, train_report);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
