#pragma once

#include <vector>

#include "offnadir/data_model.hpp"

namespace offnadir {

// Pooled per-instance feature tensor, C x H x W, row-major per channel.
struct FeatureMap {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> values;

    FeatureMap() = default;
    FeatureMap(int c, int h, int w)
        : channels(c), height(h), width(w),
          values(static_cast<std::size_t>(c) * h * w, 0.0) {}

    double at(int c, int y, int x) const {
        return values[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double& at(int c, int y, int x) {
        return values[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    std::size_t size() const { return values.size(); }
};

struct Mat2 {
    double m00 = 1, m01 = 0;
    double m10 = 0, m11 = 1;
};

// A_theta = [[cos, -sin], [sin, cos]].
Mat2 rotation_matrix(double theta);

OffsetVector rotate_offset(OffsetVector o, double theta);
OffsetVector inverse_rotate_offset(OffsetVector o_star, double theta);

// Ordered rotation angles; the identity branch (angle 0) must come first.
struct RotationAngleSet {
    std::vector<double> angles;

    static RotationAngleSet identity_only() { return {{0.0}}; }
    static RotationAngleSet quarter_turns();  // {0, pi/2, pi, 3pi/2}
    std::size_t size() const { return angles.size(); }
};

void require_valid(const RotationAngleSet& s);

enum class FusionStrategy { max_norm, mean };

// Point-wise feature rotation: for each target grid point t in
// center-origin normalized coordinates ([-1,1] spans the outermost grid
// points), the source is s = A_theta * t, sampled bilinearly with zero
// padding outside the grid. Source coordinates within 1e-9 of a grid
// point are snapped so quarter-turn rotations are exact permutations.
FeatureMap rotate_feature_map(const FeatureMap& f, double theta);

// max_norm: candidate with the largest Euclidean norm, ties resolved by
// the lowest branch index. mean: component-wise average.
OffsetVector fuse_offsets(const std::vector<OffsetVector>& candidates, FusionStrategy s);

struct PolarOffset {
    double rho = 0.0;    // >= 0
    double theta = 0.0;  // [0, 2pi)
};

PolarOffset to_polar(OffsetVector o);  // (0,0) -> (0, 0)
OffsetVector from_polar(double rho, double theta);

}  // namespace offnadir
