#include "offnadir/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <utility>

namespace offnadir {

namespace {

constexpr double kInf = 1e20;

// One-dimensional squared-distance transform (lower envelope of
// parabolas); d[q] = min_p (q - p)^2 + f[p]. Exact for integer-valued f.
void dt1d(const double* f, int n, double* d, int* v, double* z) {
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = +kInf;
    for (int q = 1; q < n; ++q) {
        double s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) /
                   (2.0 * q - 2.0 * v[k]);
        while (s <= z[k]) {
            --k;
            s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) /
                (2.0 * q - 2.0 * v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = +kInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        double dq = double(q) - v[k];
        d[q] = dq * dq + f[v[k]];
    }
}

}  // namespace

std::size_t BitMask::count() const {
    std::size_t n = 0;
    for (std::uint8_t b : bits) n += b != 0;
    return n;
}

BitMask rasterize(const Polygon& p, int width, int height) {
    if (width <= 0 || height <= 0) throw DimensionError("rasterize: grid dimensions must be > 0");
    BitMask m(width, height);
    const auto& v = p.vertices;
    const std::size_t n = v.size();
    if (n < 3) return m;

    std::vector<std::pair<double, int>> crossings;  // (x, winding)
    for (int j = 0; j < height; ++j) {
        const double y = j + 0.5;
        crossings.clear();
        for (std::size_t i = 0; i < n; ++i) {
            const Point2& a = v[i];
            const Point2& b = v[(i + 1) % n];
            // Half-open span in y so shared vertices count once; horizontal
            // edges never cross a pixel-center row.
            if (a.y <= y && y < b.y)
                crossings.push_back({a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y), +1});
            else if (b.y <= y && y < a.y)
                crossings.push_back({a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y), -1});
        }
        if (crossings.empty()) continue;
        std::sort(crossings.begin(), crossings.end());
        std::size_t c = 0;
        int winding = 0;
        for (int i = 0; i < width; ++i) {
            const double x = i + 0.5;
            while (c < crossings.size() && crossings[c].first <= x) winding += crossings[c++].second;
            if (winding != 0) m.set(i, j, true);
        }
    }
    return m;
}

std::vector<Polygon> mask_to_polygons(const BitMask& m) {
    const int w = m.width, h = m.height;
    std::vector<Polygon> out;
    if (w <= 0 || h <= 0) return out;

    std::vector<int> label(static_cast<std::size_t>(w) * h, -1);
    auto lab = [&](int x, int y) -> int& { return label[static_cast<std::size_t>(y) * w + x]; };

    // 8-connected component labels in scan order; the first pixel met is
    // the component's topmost-then-leftmost pixel.
    int n_components = 0;
    std::vector<std::pair<int, int>> starts;
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!m.at(x, y) || lab(x, y) >= 0) continue;
            const int cur = n_components++;
            starts.push_back({x, y});
            lab(x, y) = cur;
            stack.push_back({x, y});
            while (!stack.empty()) {
                auto [px, py] = stack.back();
                stack.pop_back();
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        int nx = px + dx, ny = py + dy;
                        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                        if (!m.at(nx, ny) || lab(nx, ny) >= 0) continue;
                        lab(nx, ny) = cur;
                        stack.push_back({nx, ny});
                    }
                }
            }
        }
    }

    // Walk the outer boundary of each component along pixel edges (corner
    // lattice). Directions: 0 = +x, 1 = +y, 2 = -x, 3 = -y. At each corner
    // the two pixels ahead decide the turn; preferring the left turn pinches
    // through diagonal links, so one closed walk covers an 8-connected
    // component. Vertices are emitted at direction changes only.
    static const int kStep[4][2] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    static const int kLeft[4][2] = {{0, -1}, {0, 0}, {-1, 0}, {-1, -1}};
    static const int kRight[4][2] = {{0, 0}, {-1, 0}, {-1, -1}, {0, -1}};

    for (int comp = 0; comp < n_components; ++comp) {
        auto in_comp = [&](int x, int y) {
            return x >= 0 && x < w && y >= 0 && y < h && lab(x, y) == comp;
        };
        const int sx = starts[comp].first, sy = starts[comp].second;
        Polygon poly;
        int cx = sx, cy = sy, dir = 0;
        const long max_steps = 4l * w * h + 8;
        long steps = 0;
        do {
            cx += kStep[dir][0];
            cy += kStep[dir][1];
            int ndir;
            if (in_comp(cx + kLeft[dir][0], cy + kLeft[dir][1]))
                ndir = (dir + 3) % 4;
            else if (in_comp(cx + kRight[dir][0], cy + kRight[dir][1]))
                ndir = dir;
            else
                ndir = (dir + 1) % 4;
            if (ndir != dir)
                poly.vertices.push_back({static_cast<double>(cx), static_cast<double>(cy)});
            dir = ndir;
            if (++steps > max_steps)
                throw GeometryError("mask_to_polygons: contour walk failed to close");
        } while (!(cx == sx && cy == sy && dir == 0));
        out.push_back(std::move(poly));
    }
    return out;
}

double mask_iou(const BitMask& a, const BitMask& b) {
    if (a.width != b.width || a.height != b.height)
        throw DimensionError("mask_iou: mask dimensions differ");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        bool ba = a.bits[i] != 0, bb = b.bits[i] != 0;
        inter += ba && bb;
        uni += ba || bb;
    }
    if (uni == 0) return 1.0;  // both empty: a correct "nothing" matches
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<double> squared_distance_to_background(const BitMask& m) {
    const int w = m.width, h = m.height;
    // One padding ring of background stands in for the whole out-of-image
    // plane: the nearest exterior pixel center is always axis-aligned on
    // the first ring.
    const int W = w + 2, H = h + 2;
    std::vector<double> g(static_cast<std::size_t>(W) * H, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (m.at(x, y)) g[static_cast<std::size_t>(y + 1) * W + (x + 1)] = kInf;

    const int n_max = std::max(W, H);
    std::vector<double> f(n_max), dcol(n_max), z(n_max + 1);
    std::vector<int> vv(n_max);

    for (int x = 0; x < W; ++x) {
        for (int y = 0; y < H; ++y) f[y] = g[static_cast<std::size_t>(y) * W + x];
        dt1d(f.data(), H, dcol.data(), vv.data(), z.data());
        for (int y = 0; y < H; ++y) g[static_cast<std::size_t>(y) * W + x] = dcol[y];
    }
    for (int y = 0; y < H; ++y) {
        double* row = &g[static_cast<std::size_t>(y) * W];
        for (int x = 0; x < W; ++x) f[x] = row[x];
        dt1d(f.data(), W, dcol.data(), vv.data(), z.data());
        for (int x = 0; x < W; ++x) row[x] = dcol[x];
    }

    std::vector<double> out(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out[static_cast<std::size_t>(y) * w + x] =
                g[static_cast<std::size_t>(y + 1) * W + (x + 1)];
    return out;
}

BitMask boundary_band(const BitMask& m, double d) {
    if (d < 0.0) throw std::invalid_argument("boundary_band: d must be >= 0");
    // A foreground pixel 4-adjacent to background sits at center distance 1
    // from the complement, so "within d of the complement" reads as
    // dist <= d + 1; d = 0 then keeps exactly the inner contour.
    const double limit = (d + 1.0) * (d + 1.0) + 1e-9;
    std::vector<double> dist2 = squared_distance_to_background(m);
    BitMask band(m.width, m.height);
    for (std::size_t i = 0; i < m.bits.size(); ++i)
        if (m.bits[i] != 0 && dist2[i] <= limit) band.bits[i] = 1;
    return band;
}

double boundary_iou(const BitMask& a, const BitMask& b, double d) {
    if (a.width != b.width || a.height != b.height)
        throw DimensionError("boundary_iou: mask dimensions differ");
    return mask_iou(boundary_band(a, d), boundary_band(b, d));
}

double polygon_area(const Polygon& p) { return std::abs(signed_area(p)); }

void write_pbm(const BitMask& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open PBM output: " + path);
    char header[64];
    int n = std::snprintf(header, sizeof header, "P4\n%d %d\n", m.width, m.height);
    out.write(header, n);
    const int row_bytes = (m.width + 7) / 8;
    std::vector<char> row(row_bytes);
    for (int y = 0; y < m.height; ++y) {
        std::fill(row.begin(), row.end(), 0);
        for (int x = 0; x < m.width; ++x)
            if (m.at(x, y)) row[x / 8] |= static_cast<char>(0x80 >> (x % 8));
        out.write(row.data(), row_bytes);
    }
    if (!out) throw IoError("failed writing PBM: " + path);
}

}  // namespace offnadir
