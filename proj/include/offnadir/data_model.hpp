#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "offnadir/errors.hpp"

namespace offnadir {

// Image-frame convention used throughout: x grows rightward, y grows
// downward, origin at the top-left corner of the image, coordinates are
// sub-pixel continuous. Pixel (i, j) covers [i, i+1) x [j, j+1) and has
// its center at (i + 0.5, j + 0.5).

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }

// Roof-to-footprint translation in pixels.
struct OffsetVector {
    double ox = 0.0;
    double oy = 0.0;
};

inline OffsetVector operator-(OffsetVector o) { return {-o.ox, -o.oy}; }
double norm(OffsetVector o);

// Closed polygon boundary. Normalized winding means positive signed
// shoelace area in the image frame above; load_dataset and the geometry
// routines keep every polygon in that orientation.
struct Polygon {
    std::vector<Point2> vertices;
};

double signed_area(const Polygon& p);
Polygon normalized_winding(Polygon p);
Polygon translate(const Polygon& p, double dx, double dy);

// O(M^2) segment-pair test; shared endpoints of adjacent edges are not
// counted as intersections. Returns the number of offending pairs.
int count_self_intersections(const Polygon& p);

// Throws GeometryError unless M >= 3, all coordinates finite and
// |shoelace area| > 0.
void require_valid(const Polygon& p, const std::string& what);

// Axis-aligned box, (x, y) = top-left corner.
struct BBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;
};

struct BuildingAnnotation {
    std::int64_t id = 0;
    std::int64_t image_id = 0;
    Polygon roof;
    Polygon footprint;
    OffsetVector offset;
    BBox building_bbox;
};

struct ImageRecord {
    std::int64_t id = 0;
    std::string file_name;
    int width = 0;
    int height = 0;
};

enum class Split { train, val, test, unsplit };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct Dataset {
    std::vector<ImageRecord> images;
    std::vector<BuildingAnnotation> annotations;
    Split split = Split::unsplit;

    // nullptr when the id is unknown.
    const ImageRecord* find_image(std::int64_t image_id) const;
};

// Footprint = roof translated vertex-wise by the offset; vertex count and
// winding are preserved.
Polygon derive_footprint(const Polygon& roof, const OffsetVector& offset);

// Tight axis-aligned box over the union of both vertex sets.
BBox derive_building_bbox(const Polygon& roof, const Polygon& footprint);

// Builds a full annotation from roof + offset; footprint and bbox derived.
BuildingAnnotation annotate_from_roof(const Polygon& roof, const OffsetVector& offset,
                                      std::int64_t image_id, std::int64_t id);

struct Violation {
    std::int64_t annotation_id = 0;
    std::string rule;      // "footprint-consistency", "bbox-tightness", ...
    double magnitude = 0;  // pixels, rule-dependent
};

// Reports invariant violations instead of throwing; sorted by annotation
// id, then rule name.
std::vector<Violation> validate(const Dataset& d, double tol);

// Annotation JSON (see README for the schema). Winding is normalized on
// load; missing footprints and building bboxes are derived.
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& d, const std::string& path);

}  // namespace offnadir
