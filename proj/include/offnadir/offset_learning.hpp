#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "offnadir/foa.hpp"

namespace offnadir {

// Matched building proposal whose width/height normalize the offset.
struct Proposal {
    BBox bbox;
};

// Dimensionless regression target: phi_x = ox / w_p, phi_y = oy / h_p.
struct EncodedOffset {
    double phi_x = 0.0;
    double phi_y = 0.0;
};

EncodedOffset encode_offset(OffsetVector o, const Proposal& p);
OffsetVector decode_offset(EncodedOffset e, const Proposal& p);

// Summed over the two components: 0.5 x^2 / beta for |x| < beta,
// |x| - 0.5 beta otherwise.
double smooth_l1(EncodedOffset pred, EncodedOffset target, double beta);

// d(smooth_l1)/d(pred), per component: x / beta inside the quadratic
// region, sign(x) outside.
std::array<double, 2> smooth_l1_grad(EncodedOffset pred, EncodedOffset target, double beta);

struct LossWeights {
    double alpha1 = 1.0;
    double alpha2 = 1.0;
    double alpha3 = 2.0;
};

// l_rpn + a1 * l_rcnn + a2 * l_mask + a3 * l_offset. The first three are
// opaque scalars produced elsewhere.
double joint_loss(double l_rpn, double l_rcnn, double l_mask, double l_offset,
                  const LossWeights& w);

// Two-layer perceptron on the flattened feature map, rectifier hidden
// activation, two outputs (phi_x, phi_y). Shared across all FOA branches.
struct RegressorParams {
    int input_dim = 0;
    int hidden_dim = 0;
    std::vector<double> w1;  // hidden_dim x input_dim, row-major
    std::vector<double> b1;  // hidden_dim
    std::vector<double> w2;  // 2 x hidden_dim, row-major
    std::vector<double> b2;  // 2

    // Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases.
    static RegressorParams init(int input_dim, int hidden_dim, std::uint64_t seed);
};

// Same shapes as RegressorParams; doubles as gradient and velocity buffer.
struct RegressorGrads {
    std::vector<double> w1, b1, w2, b2;

    static RegressorGrads zeros_like(const RegressorParams& p);
    void accumulate(const RegressorGrads& other);
};

EncodedOffset forward_regressor(const RegressorParams& params, const FeatureMap& f);

struct FoaLossResult {
    std::vector<double> branch_losses;  // one per angle
    RegressorGrads grad;                // d(sum of branch losses)/d(params)
};

// Per branch: rotate the feature map and the ground-truth offset by the
// branch angle, encode against the proposal, evaluate smooth-L1 against
// the shared regressor, backprop. Gradients are summed over branches.
FoaLossResult foa_loss_and_gradient(const RegressorParams& params, const FeatureMap& f,
                                    OffsetVector gt, const Proposal& p,
                                    const RotationAngleSet& angles, double beta);

struct SgdConfig {
    double lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 1e-4;
};

struct SgdState {
    RegressorGrads velocity;  // zero before the first step
};

// One SGD-with-momentum step on the summed branch losses; returns the
// per-branch losses evaluated at the pre-update parameters.
std::vector<double> foa_training_step(RegressorParams& params, SgdState& state,
                                      const SgdConfig& cfg, const FeatureMap& f,
                                      OffsetVector gt, const Proposal& p,
                                      const RotationAngleSet& angles, double beta);

// Per branch: forward on the rotated feature map, decode with the
// proposal, rotate back by the branch angle; fuse the candidates.
OffsetVector foa_predict(const RegressorParams& params, const FeatureMap& f,
                         const Proposal& p, const RotationAngleSet& angles,
                         FusionStrategy s);

struct CheckpointMeta {
    std::uint64_t seed = 0;
    std::vector<double> angles;
    SgdConfig sgd;
    double beta = 1.0;
    int feature_channels = 0;
    int feature_height = 0;
    int feature_width = 0;
    double proposal_w = 0;
    double proposal_h = 0;
};

void save_checkpoint(const RegressorParams& params, const CheckpointMeta& meta,
                     const std::string& path);
std::pair<RegressorParams, CheckpointMeta> load_checkpoint(const std::string& path);

}  // namespace offnadir
