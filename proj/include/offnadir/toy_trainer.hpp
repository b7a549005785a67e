#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "offnadir/offset_learning.hpp"
#include "offnadir/synth.hpp"

namespace offnadir {

// Desk-scale regression task: learn offsets from synthetic equivariant
// feature maps. Small enough to train in seconds, real enough to show the
// augmented branches matching the single-branch baseline.
struct ToyTrainConfig {
    std::vector<double> angles = {0.0};  // radians; first must be 0
    FusionStrategy fusion = FusionStrategy::max_norm;
    int steps = 3000;
    std::uint64_t seed = 0;
    int hidden_dim = 32;
    int channels = 2;
    int grid = 15;
    double proposal_size = 100.0;  // square proposal, w = h
    double offset_max = 30.0;      // training offsets drawn with |o| below this
    int n_train = 256;
    int n_heldout = 200;
    SgdConfig sgd;
    double beta = 1.0;
};

struct ToyTrainResult {
    RegressorParams params;
    CheckpointMeta meta;
    double train_epe = 0.0;    // mean |pred - gt| over the train set, pixels
    double heldout_epe = 0.0;  // same over fresh samples
    std::vector<double> final_branch_losses;
};

ToyTrainResult run_toy_training(const ToyTrainConfig& cfg);

void write_epe_report(const ToyTrainResult& r, const ToyTrainConfig& cfg,
                      const std::string& path);

}  // namespace offnadir
