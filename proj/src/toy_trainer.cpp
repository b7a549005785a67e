#include "offnadir/toy_trainer.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "json_common.hpp"

namespace offnadir {

namespace {

using detail::ordered_json;

std::mt19937_64 make_stream(std::uint64_t seed, std::uint32_t purpose) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32), purpose};
    return std::mt19937_64(seq);
}

enum : std::uint32_t {
    kStreamInit = 21,
    kStreamTrainSet = 22,
    kStreamHeldoutSet = 23,
    kStreamOrder = 24,
};

std::vector<OffsetVector> draw_offsets(std::mt19937_64& rng, int count, double offset_max) {
    std::uniform_real_distribution<double> rho_u(0.0, offset_max);
    std::uniform_real_distribution<double> theta_u(0.0, 2.0 * std::numbers::pi);
    std::vector<OffsetVector> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        const double rho = rho_u(rng);
        const double theta = theta_u(rng);
        out.push_back(from_polar(rho, theta));
    }
    return out;
}

double mean_epe(const RegressorParams& params, const std::vector<FeatureMap>& feats,
                const std::vector<OffsetVector>& offsets, const Proposal& proposal,
                const RotationAngleSet& angles, FusionStrategy fusion) {
    double total = 0.0;
    for (std::size_t i = 0; i < feats.size(); ++i) {
        const OffsetVector pred = foa_predict(params, feats[i], proposal, angles, fusion);
        total += std::hypot(pred.ox - offsets[i].ox, pred.oy - offsets[i].oy);
    }
    return total / feats.size();
}

}  // namespace

ToyTrainResult run_toy_training(const ToyTrainConfig& cfg) {
    RotationAngleSet angles{cfg.angles};
    require_valid(angles);
    if (cfg.steps < 0) throw std::invalid_argument("toy training: steps must be >= 0");
    if (cfg.hidden_dim <= 0 || cfg.channels <= 0 || cfg.grid <= 0)
        throw std::invalid_argument("toy training: model dimensions must be > 0");
    if (!(cfg.proposal_size > 0.0))
        throw std::invalid_argument("toy training: proposal_size must be > 0");
    if (!(cfg.offset_max > 0.0))
        throw std::invalid_argument("toy training: offset_max must be > 0");
    if (cfg.n_train <= 0 || cfg.n_heldout <= 0)
        throw std::invalid_argument("toy training: sample counts must be > 0");
    if (!(cfg.beta > 0.0)) throw std::invalid_argument("toy training: beta must be > 0");

    const int input_dim = cfg.channels * cfg.grid * cfg.grid;
    RegressorParams params =
        RegressorParams::init(input_dim, cfg.hidden_dim, make_stream(cfg.seed, kStreamInit)());

    auto train_rng = make_stream(cfg.seed, kStreamTrainSet);
    auto heldout_rng = make_stream(cfg.seed, kStreamHeldoutSet);
    auto order_rng = make_stream(cfg.seed, kStreamOrder);

    const std::vector<OffsetVector> train_offsets =
        draw_offsets(train_rng, cfg.n_train, cfg.offset_max);
    const std::vector<OffsetVector> heldout_offsets =
        draw_offsets(heldout_rng, cfg.n_heldout, cfg.offset_max);

    std::vector<FeatureMap> train_feats, heldout_feats;
    train_feats.reserve(train_offsets.size());
    for (const OffsetVector& o : train_offsets)
        train_feats.push_back(generate_feature_for_offset(o, cfg.channels, cfg.grid, cfg.grid));
    heldout_feats.reserve(heldout_offsets.size());
    for (const OffsetVector& o : heldout_offsets)
        heldout_feats.push_back(generate_feature_for_offset(o, cfg.channels, cfg.grid, cfg.grid));

    const Proposal proposal{BBox{0.0, 0.0, cfg.proposal_size, cfg.proposal_size}};

    SgdState state;
    std::uniform_int_distribution<int> pick(0, cfg.n_train - 1);
    std::vector<double> last_losses(cfg.angles.size(), 0.0);
    for (int step = 0; step < cfg.steps; ++step) {
        const int idx = pick(order_rng);
        last_losses = foa_training_step(params, state, cfg.sgd, train_feats[idx],
                                        train_offsets[idx], proposal, angles, cfg.beta);
    }

    ToyTrainResult r;
    r.train_epe = mean_epe(params, train_feats, train_offsets, proposal, angles, cfg.fusion);
    r.heldout_epe =
        mean_epe(params, heldout_feats, heldout_offsets, proposal, angles, cfg.fusion);
    r.final_branch_losses = std::move(last_losses);
    r.meta.seed = cfg.seed;
    r.meta.angles = cfg.angles;
    r.meta.sgd = cfg.sgd;
    r.meta.beta = cfg.beta;
    r.meta.feature_channels = cfg.channels;
    r.meta.feature_height = cfg.grid;
    r.meta.feature_width = cfg.grid;
    r.meta.proposal_w = cfg.proposal_size;
    r.meta.proposal_h = cfg.proposal_size;
    r.params = std::move(params);
    return r;
}

void write_epe_report(const ToyTrainResult& r, const ToyTrainConfig& cfg,
                      const std::string& path) {
    ordered_json j;
    ordered_json config;
    config["angles_rad"] = cfg.angles;
    config["fusion"] = cfg.fusion == FusionStrategy::max_norm ? "max_norm" : "mean";
    config["steps"] = cfg.steps;
    config["seed"] = cfg.seed;
    config["hidden_dim"] = cfg.hidden_dim;
    config["channels"] = cfg.channels;
    config["grid"] = cfg.grid;
    config["proposal_size"] = cfg.proposal_size;
    config["offset_max"] = cfg.offset_max;
    config["n_train"] = cfg.n_train;
    config["n_heldout"] = cfg.n_heldout;
    config["sgd"] = {{"learning_rate", cfg.sgd.lr},
                     {"momentum", cfg.sgd.momentum},
                     {"weight_decay", cfg.sgd.weight_decay}};
    config["beta"] = cfg.beta;
    j["config"] = std::move(config);
    j["train_epe"] = r.train_epe;
    j["heldout_epe"] = r.heldout_epe;
    j["final_branch_losses"] = r.final_branch_losses;
    detail::write_json_file(j, path, "EPE report");
}

}  // namespace offnadir
