#include "offnadir/offset_learning.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "json.hpp"

namespace offnadir {

namespace {

using ordered_json = nlohmann::ordered_json;

void require_proposal(const Proposal& p, const char* who) {
    if (!(p.bbox.w > 0.0) || !(p.bbox.h > 0.0))
        throw GeometryError(std::string(who) + ": proposal width/height must be > 0");
}

double smooth_l1_component(double x, double beta) {
    const double ax = std::abs(x);
    return ax < beta ? 0.5 * x * x / beta : ax - 0.5 * beta;
}

double smooth_l1_grad_component(double x, double beta) {
    if (std::abs(x) < beta) return x / beta;
    return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
}

struct ForwardCache {
    std::vector<double> z;  // hidden pre-activation
    std::vector<double> h;  // rectified hidden
    double y[2];            // output (phi_x, phi_y)
};

ForwardCache forward_cached(const RegressorParams& p, const std::vector<double>& x) {
    ForwardCache c;
    c.z.assign(p.hidden_dim, 0.0);
    c.h.assign(p.hidden_dim, 0.0);
    for (int i = 0; i < p.hidden_dim; ++i) {
        double acc = p.b1[i];
        const double* row = &p.w1[static_cast<std::size_t>(i) * p.input_dim];
        for (int k = 0; k < p.input_dim; ++k) acc += row[k] * x[k];
        c.z[i] = acc;
        c.h[i] = acc > 0.0 ? acc : 0.0;
    }
    for (int o = 0; o < 2; ++o) {
        double acc = p.b2[o];
        const double* row = &p.w2[static_cast<std::size_t>(o) * p.hidden_dim];
        for (int i = 0; i < p.hidden_dim; ++i) acc += row[i] * c.h[i];
        c.y[o] = acc;
    }
    return c;
}

// d(loss)/d(y) -> parameter gradients for one branch, accumulated in place.
void backprop_branch(const RegressorParams& p, const std::vector<double>& x,
                     const ForwardCache& c, const double gy[2], RegressorGrads& g) {
    std::vector<double> dh(p.hidden_dim, 0.0);
    for (int o = 0; o < 2; ++o) {
        g.b2[o] += gy[o];
        double* grow = &g.w2[static_cast<std::size_t>(o) * p.hidden_dim];
        const double* wrow = &p.w2[static_cast<std::size_t>(o) * p.hidden_dim];
        for (int i = 0; i < p.hidden_dim; ++i) {
            grow[i] += gy[o] * c.h[i];
            dh[i] += wrow[i] * gy[o];
        }
    }
    for (int i = 0; i < p.hidden_dim; ++i) {
        if (c.z[i] <= 0.0) continue;  // rectifier gate (subgradient 0 at the kink)
        const double dz = dh[i];
        g.b1[i] += dz;
        double* grow = &g.w1[static_cast<std::size_t>(i) * p.input_dim];
        for (int k = 0; k < p.input_dim; ++k) grow[k] += dz * x[k];
    }
}

ordered_json layer_json(const char* name, std::initializer_list<int> shape,
                        const std::vector<double>& values) {
    ordered_json j;
    j["name"] = name;
    j["shape"] = shape;
    j["values"] = values;
    return j;
}

std::vector<double> layer_values(const ordered_json& j, const char* name, std::size_t want) {
    if (j.value("name", std::string{}) != name)
        throw ParseError(std::string("checkpoint: expected layer '") + name + "'");
    std::vector<double> v = j.at("values").get<std::vector<double>>();
    if (v.size() != want)
        throw ParseError(std::string("checkpoint: layer '") + name + "' has " +
                         std::to_string(v.size()) + " values, expected " + std::to_string(want));
    return v;
}

}  // namespace

EncodedOffset encode_offset(OffsetVector o, const Proposal& p) {
    require_proposal(p, "encode_offset");
    return {o.ox / p.bbox.w, o.oy / p.bbox.h};
}

OffsetVector decode_offset(EncodedOffset e, const Proposal& p) {
    require_proposal(p, "decode_offset");
    return {e.phi_x * p.bbox.w, e.phi_y * p.bbox.h};
}

double smooth_l1(EncodedOffset pred, EncodedOffset target, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("smooth_l1: beta must be > 0");
    return smooth_l1_component(pred.phi_x - target.phi_x, beta) +
           smooth_l1_component(pred.phi_y - target.phi_y, beta);
}

std::array<double, 2> smooth_l1_grad(EncodedOffset pred, EncodedOffset target, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("smooth_l1_grad: beta must be > 0");
    return {smooth_l1_grad_component(pred.phi_x - target.phi_x, beta),
            smooth_l1_grad_component(pred.phi_y - target.phi_y, beta)};
}

double joint_loss(double l_rpn, double l_rcnn, double l_mask, double l_offset,
                  const LossWeights& w) {
    return l_rpn + w.alpha1 * l_rcnn + w.alpha2 * l_mask + w.alpha3 * l_offset;
}

RegressorParams RegressorParams::init(int input_dim, int hidden_dim, std::uint64_t seed) {
    if (input_dim <= 0 || hidden_dim <= 0)
        throw DimensionError("RegressorParams::init: dimensions must be > 0");
    RegressorParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    p.w1.resize(static_cast<std::size_t>(hidden_dim) * input_dim);
    p.b1.assign(hidden_dim, 0.0);
    p.w2.resize(static_cast<std::size_t>(2) * hidden_dim);
    p.b2.assign(2, 0.0);

    std::mt19937_64 rng(seed);
    const double bound1 = std::sqrt(6.0 / (input_dim + hidden_dim));
    std::uniform_real_distribution<double> u1(-bound1, bound1);
    for (double& w : p.w1) w = u1(rng);
    const double bound2 = std::sqrt(6.0 / (hidden_dim + 2));
    std::uniform_real_distribution<double> u2(-bound2, bound2);
    for (double& w : p.w2) w = u2(rng);
    return p;
}

RegressorGrads RegressorGrads::zeros_like(const RegressorParams& p) {
    RegressorGrads g;
    g.w1.assign(p.w1.size(), 0.0);
    g.b1.assign(p.b1.size(), 0.0);
    g.w2.assign(p.w2.size(), 0.0);
    g.b2.assign(p.b2.size(), 0.0);
    return g;
}

void RegressorGrads::accumulate(const RegressorGrads& other) {
    auto add = [](std::vector<double>& a, const std::vector<double>& b) {
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    };
    add(w1, other.w1);
    add(b1, other.b1);
    add(w2, other.w2);
    add(b2, other.b2);
}

EncodedOffset forward_regressor(const RegressorParams& params, const FeatureMap& f) {
    if (static_cast<std::size_t>(params.input_dim) != f.size())
        throw DimensionError("forward_regressor: feature map size " + std::to_string(f.size()) +
                             " does not match input dim " + std::to_string(params.input_dim));
    ForwardCache c = forward_cached(params, f.values);
    return {c.y[0], c.y[1]};
}

FoaLossResult foa_loss_and_gradient(const RegressorParams& params, const FeatureMap& f,
                                    OffsetVector gt, const Proposal& p,
                                    const RotationAngleSet& angles, double beta) {
    require_valid(angles);
    if (static_cast<std::size_t>(params.input_dim) != f.size())
        throw DimensionError("foa_loss_and_gradient: feature map does not match input dim");

    FoaLossResult r;
    r.grad = RegressorGrads::zeros_like(params);
    r.branch_losses.reserve(angles.size());
    for (double theta : angles.angles) {
        // The identity branch skips the resampler so a {0} angle set is a
        // plain single-head step, bit for bit.
        const FeatureMap& fr = (theta == 0.0) ? f : rotate_feature_map(f, theta);
        const EncodedOffset target = encode_offset(rotate_offset(gt, theta), p);
        ForwardCache c = forward_cached(params, fr.values);
        const EncodedOffset pred = {c.y[0], c.y[1]};
        r.branch_losses.push_back(smooth_l1(pred, target, beta));
        const std::array<double, 2> gy = smooth_l1_grad(pred, target, beta);
        backprop_branch(params, fr.values, c, gy.data(), r.grad);
    }
    return r;
}

std::vector<double> foa_training_step(RegressorParams& params, SgdState& state,
                                      const SgdConfig& cfg, const FeatureMap& f,
                                      OffsetVector gt, const Proposal& p,
                                      const RotationAngleSet& angles, double beta) {
    FoaLossResult r = foa_loss_and_gradient(params, f, gt, p, angles, beta);
    if (state.velocity.w1.empty()) state.velocity = RegressorGrads::zeros_like(params);

    auto update = [&](std::vector<double>& w, const std::vector<double>& g,
                      std::vector<double>& v) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double total = g[i] + cfg.weight_decay * w[i];
            v[i] = cfg.momentum * v[i] + total;
            w[i] -= cfg.lr * v[i];
        }
    };
    update(params.w1, r.grad.w1, state.velocity.w1);
    update(params.b1, r.grad.b1, state.velocity.b1);
    update(params.w2, r.grad.w2, state.velocity.w2);
    update(params.b2, r.grad.b2, state.velocity.b2);
    return r.branch_losses;
}

OffsetVector foa_predict(const RegressorParams& params, const FeatureMap& f,
                         const Proposal& p, const RotationAngleSet& angles,
                         FusionStrategy s) {
    require_valid(angles);
    std::vector<OffsetVector> candidates;
    candidates.reserve(angles.size());
    for (double theta : angles.angles) {
        const FeatureMap& fr = (theta == 0.0) ? f : rotate_feature_map(f, theta);
        const EncodedOffset e = forward_regressor(params, fr);
        candidates.push_back(inverse_rotate_offset(decode_offset(e, p), theta));
    }
    return fuse_offsets(candidates, s);
}

void save_checkpoint(const RegressorParams& params, const CheckpointMeta& meta,
                     const std::string& path) {
    ordered_json j;
    j["format"] = "offset-regressor-checkpoint-v1";
    j["seed"] = meta.seed;
    j["angles_rad"] = meta.angles;
    j["beta"] = meta.beta;
    j["sgd"] = {{"lr", meta.sgd.lr},
                {"momentum", meta.sgd.momentum},
                {"weight_decay", meta.sgd.weight_decay}};
    j["feature"] = {{"channels", meta.feature_channels},
                    {"height", meta.feature_height},
                    {"width", meta.feature_width}};
    j["proposal"] = {{"w", meta.proposal_w}, {"h", meta.proposal_h}};
    j["layers"] = ordered_json::array();
    j["layers"].push_back(layer_json("w1", {params.hidden_dim, params.input_dim}, params.w1));
    j["layers"].push_back(layer_json("b1", {params.hidden_dim}, params.b1));
    j["layers"].push_back(layer_json("w2", {2, params.hidden_dim}, params.w2));
    j["layers"].push_back(layer_json("b2", {2}, params.b2));

    std::ofstream out(path);
    if (!out) throw IoError("cannot open checkpoint output: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing checkpoint: " + path);
}

std::pair<RegressorParams, CheckpointMeta> load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint file: " + path);
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed checkpoint JSON (") + path + "): " + e.what());
    }
    if (j.value("format", std::string{}) != "offset-regressor-checkpoint-v1")
        throw ParseError("unrecognized checkpoint format in " + path);

    CheckpointMeta meta;
    meta.seed = j.at("seed").get<std::uint64_t>();
    meta.angles = j.at("angles_rad").get<std::vector<double>>();
    meta.beta = j.at("beta").get<double>();
    meta.sgd.lr = j.at("sgd").at("lr").get<double>();
    meta.sgd.momentum = j.at("sgd").at("momentum").get<double>();
    meta.sgd.weight_decay = j.at("sgd").at("weight_decay").get<double>();
    meta.feature_channels = j.at("feature").at("channels").get<int>();
    meta.feature_height = j.at("feature").at("height").get<int>();
    meta.feature_width = j.at("feature").at("width").get<int>();
    meta.proposal_w = j.at("proposal").at("w").get<double>();
    meta.proposal_h = j.at("proposal").at("h").get<double>();

    const auto& layers = j.at("layers");
    if (!layers.is_array() || layers.size() != 4)
        throw ParseError("checkpoint must carry exactly 4 layers");
    RegressorParams p;
    p.hidden_dim = layers[0].at("shape")[0].get<int>();
    p.input_dim = layers[0].at("shape")[1].get<int>();
    if (p.input_dim <= 0 || p.hidden_dim <= 0)
        throw ParseError("checkpoint layer shapes must be positive");
    p.w1 = layer_values(layers[0], "w1", static_cast<std::size_t>(p.hidden_dim) * p.input_dim);
    p.b1 = layer_values(layers[1], "b1", p.hidden_dim);
    p.w2 = layer_values(layers[2], "w2", static_cast<std::size_t>(2) * p.hidden_dim);
    p.b2 = layer_values(layers[3], "b2", 2);
    return {std::move(p), std::move(meta)};
}

}  // namespace offnadir
