#include "offnadir/foa.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace offnadir {

Mat2 rotation_matrix(double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    return {c, -s, s, c};
}

OffsetVector rotate_offset(OffsetVector o, double theta) {
    const Mat2 a = rotation_matrix(theta);
    return {a.m00 * o.ox + a.m01 * o.oy, a.m10 * o.ox + a.m11 * o.oy};
}

OffsetVector inverse_rotate_offset(OffsetVector o_star, double theta) {
    return rotate_offset(o_star, -theta);
}

RotationAngleSet RotationAngleSet::quarter_turns() {
    constexpr double pi = std::numbers::pi;
    return {{0.0, pi / 2, pi, 3 * pi / 2}};
}

void require_valid(const RotationAngleSet& s) {
    if (s.angles.empty())
        throw std::invalid_argument("rotation angle set must be nonempty");
    if (s.angles.front() != 0.0)
        throw std::invalid_argument("rotation angle set must start with the identity angle 0");
    for (double a : s.angles)
        if (!std::isfinite(a)) throw std::invalid_argument("rotation angle must be finite");
}

FeatureMap rotate_feature_map(const FeatureMap& f, double theta) {
    if (f.height != f.width)
        throw DimensionError("rotate_feature_map: feature map must be square");
    const int n = f.height;
    FeatureMap out(f.channels, n, n);
    if (n == 0) return out;

    const double c = std::cos(theta), s = std::sin(theta);
    const double half = (n - 1) / 2.0;

    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            // Target grid point in center-origin normalized coordinates
            // ([-1,1] spans the outermost grid points), source = A_theta * t.
            const double tx = (n == 1) ? 0.0 : x / half - 1.0;
            const double ty = (n == 1) ? 0.0 : y / half - 1.0;
            const double sx = c * tx - s * ty;
            const double sy = s * tx + c * ty;
            double u = (sx + 1.0) * half;
            double v = (sy + 1.0) * half;
            // Snap near-integer source coordinates so quarter turns are
            // exact value permutations instead of leaking fp dust into the
            // interpolation weights.
            if (std::abs(u - std::round(u)) < 1e-9) u = std::round(u);
            if (std::abs(v - std::round(v)) < 1e-9) v = std::round(v);

            const int x0 = static_cast<int>(std::floor(u));
            const int y0 = static_cast<int>(std::floor(v));
            const double fx = u - x0, fy = v - y0;
            for (int ch = 0; ch < f.channels; ++ch) {
                auto sample = [&](int xx, int yy) -> double {
                    if (xx < 0 || xx >= n || yy < 0 || yy >= n) return 0.0;  // zero padding
                    return f.at(ch, yy, xx);
                };
                double val = (1 - fx) * (1 - fy) * sample(x0, y0) +
                             fx * (1 - fy) * sample(x0 + 1, y0) +
                             (1 - fx) * fy * sample(x0, y0 + 1) +
                             fx * fy * sample(x0 + 1, y0 + 1);
                out.at(ch, y, x) = val;
            }
        }
    }
    return out;
}

OffsetVector fuse_offsets(const std::vector<OffsetVector>& candidates, FusionStrategy s) {
    if (candidates.empty())
        throw std::invalid_argument("fuse_offsets: candidate list must be nonempty");
    if (s == FusionStrategy::mean) {
        double sx = 0.0, sy = 0.0;
        for (const OffsetVector& o : candidates) {
            sx += o.ox;
            sy += o.oy;
        }
        const double inv = 1.0 / static_cast<double>(candidates.size());
        return {sx * inv, sy * inv};
    }
    std::size_t best = 0;
    double best_norm = norm(candidates[0]);
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        double ni = norm(candidates[i]);
        if (ni > best_norm) {  // ties keep the lowest branch index
            best_norm = ni;
            best = i;
        }
    }
    return candidates[best];
}

PolarOffset to_polar(OffsetVector o) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double rho = norm(o);
    if (rho == 0.0) return {0.0, 0.0};
    double theta = std::atan2(o.oy, o.ox);
    if (theta < 0.0) theta += two_pi;
    if (theta >= two_pi) theta = 0.0;  // rounding of tiny negative angles
    return {rho, theta};
}

OffsetVector from_polar(double rho, double theta) {
    if (rho < 0.0) throw std::invalid_argument("from_polar: rho must be >= 0");
    return {rho * std::cos(theta), rho * std::sin(theta)};
}

}  // namespace offnadir
