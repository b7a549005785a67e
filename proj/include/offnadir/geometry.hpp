#pragma once

#include <cstdint>
#include <vector>

#include "offnadir/data_model.hpp"

namespace offnadir {

// Row-major binary raster; bits[y * width + x] != 0 means foreground.
struct BitMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BitMask() = default;
    BitMask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

    bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
    std::size_t count() const;
    bool empty_mask() const { return count() == 0; }
};

// Scanline fill, nonzero winding rule, pixel-center sampling: (x, y) is
// set iff the point (x + 0.5, y + 0.5) lies inside the polygon. Parts of
// the polygon outside the grid are clipped; degenerate polygons give an
// all-false mask.
BitMask rasterize(const Polygon& p, int width, int height);

// Outer contour of every 8-connected foreground component, traced along
// pixel boundaries (integer lattice vertices), holes dropped. Output
// polygons are in normalized winding; each contour rasterizes back to
// exactly the pixels of its component (with any holes filled).
std::vector<Polygon> mask_to_polygons(const BitMask& m);

// |a AND b| / |a OR b|; 1.0 when both masks are empty.
double mask_iou(const BitMask& a, const BitMask& b);

// Exact squared Euclidean distance from every pixel center to the nearest
// background pixel center, where everything outside the grid counts as
// background. Background pixels get 0.
std::vector<double> squared_distance_to_background(const BitMask& m);

// Foreground pixels within distance d of the complement (image border is
// background). d = 0 keeps exactly the 4-connected inner contour.
BitMask boundary_band(const BitMask& m, double d);

// mask_iou of the two boundary bands; 1.0 when both are empty.
double boundary_iou(const BitMask& a, const BitMask& b, double d);

// Absolute shoelace area.
double polygon_area(const Polygon& p);

// Debug dump, binary PBM (P4).
void write_pbm(const BitMask& m, const std::string& path);

}  // namespace offnadir
