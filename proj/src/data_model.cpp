#include "offnadir/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>
#include <unordered_set>

#include "json_common.hpp"

namespace offnadir {

namespace {

using detail::ordered_json;
using detail::polygon_from_json;
using detail::polygon_to_json;

double shoelace_twice(const Polygon& p) {
    const auto& v = p.vertices;
    const std::size_t m = v.size();
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const Point2& a = v[i];
        const Point2& b = v[(i + 1) % m];
        s += a.x * b.y - b.x * a.y;
    }
    return s;
}

bool finite_point(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

int orientation(Point2 a, Point2 b, Point2 c) {
    double d = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    return (d > 0) - (d < 0);
}

bool on_segment(Point2 a, Point2 b, Point2 q) {
    return std::min(a.x, b.x) <= q.x && q.x <= std::max(a.x, b.x) &&
           std::min(a.y, b.y) <= q.y && q.y <= std::max(a.y, b.y);
}

// Closed-segment intersection, collinear overlap included.
bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d) {
    int o1 = orientation(a, b, c);
    int o2 = orientation(a, b, d);
    int o3 = orientation(c, d, a);
    int o4 = orientation(c, d, b);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(a, b, c)) return true;
    if (o2 == 0 && on_segment(a, b, d)) return true;
    if (o3 == 0 && on_segment(c, d, a)) return true;
    if (o4 == 0 && on_segment(c, d, b)) return true;
    return false;
}

}  // namespace

double norm(OffsetVector o) { return std::hypot(o.ox, o.oy); }

double signed_area(const Polygon& p) { return 0.5 * shoelace_twice(p); }

Polygon normalized_winding(Polygon p) {
    if (signed_area(p) < 0.0 && p.vertices.size() > 1)
        std::reverse(p.vertices.begin() + 1, p.vertices.end());  // keep the first vertex
    return p;
}

Polygon translate(const Polygon& p, double dx, double dy) {
    Polygon q = p;
    for (Point2& v : q.vertices) {
        v.x += dx;
        v.y += dy;
    }
    return q;
}

int count_self_intersections(const Polygon& p) {
    const auto& v = p.vertices;
    const std::size_t m = v.size();
    if (m < 4) return 0;  // a triangle cannot self-intersect
    int n = 0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            if (j == i + 1 || (i == 0 && j == m - 1)) continue;  // adjacent edges
            if (segments_intersect(v[i], v[(i + 1) % m], v[j], v[(j + 1) % m])) ++n;
        }
    }
    return n;
}

void require_valid(const Polygon& p, const std::string& what) {
    if (p.vertices.size() < 3)
        throw GeometryError(what + ": degenerate polygon with " +
                            std::to_string(p.vertices.size()) + " vertices (need >= 3)");
    for (const Point2& v : p.vertices)
        if (!finite_point(v)) throw GeometryError(what + ": non-finite vertex coordinate");
    if (!(std::abs(signed_area(p)) > 0.0))
        throw GeometryError(what + ": zero-area polygon");
}

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
        case Split::unsplit: return "unsplit";
    }
    return "unsplit";
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    if (s == "unsplit") return Split::unsplit;
    throw ParseError("unknown split '" + s + "' (expected train/val/test/unsplit)");
}

const ImageRecord* Dataset::find_image(std::int64_t image_id) const {
    for (const ImageRecord& im : images)
        if (im.id == image_id) return &im;
    return nullptr;
}

Polygon derive_footprint(const Polygon& roof, const OffsetVector& offset) {
    return translate(roof, offset.ox, offset.oy);
}

BBox derive_building_bbox(const Polygon& roof, const Polygon& footprint) {
    double minx = std::numeric_limits<double>::infinity(), maxx = -minx;
    double miny = minx, maxy = -minx;
    for (const auto* poly : {&roof, &footprint}) {
        for (const Point2& v : poly->vertices) {
            minx = std::min(minx, v.x);
            maxx = std::max(maxx, v.x);
            miny = std::min(miny, v.y);
            maxy = std::max(maxy, v.y);
        }
    }
    return {minx, miny, maxx - minx, maxy - miny};
}

BuildingAnnotation annotate_from_roof(const Polygon& roof, const OffsetVector& offset,
                                      std::int64_t image_id, std::int64_t id) {
    require_valid(roof, "roof");
    BuildingAnnotation a;
    a.id = id;
    a.image_id = image_id;
    a.roof = roof;
    a.offset = offset;
    a.footprint = derive_footprint(roof, offset);
    a.building_bbox = derive_building_bbox(a.roof, a.footprint);
    return a;
}

std::vector<Violation> validate(const Dataset& d, double tol) {
    std::vector<Violation> out;
    auto flag = [&](std::int64_t id, const char* rule, double mag) {
        out.push_back({id, rule, mag});
    };

    std::unordered_set<std::int64_t> image_ids;
    for (const ImageRecord& im : d.images) image_ids.insert(im.id);

    std::unordered_set<std::int64_t> seen;
    for (const BuildingAnnotation& a : d.annotations) {
        if (!seen.insert(a.id).second) flag(a.id, "duplicate-id", 0.0);
        if (image_ids.find(a.image_id) == image_ids.end()) flag(a.id, "image-ref", 0.0);

        auto check_polygon = [&](const Polygon& p, const char* deg, const char* wind,
                                 const char* self) {
            double area2 = shoelace_twice(p);
            if (p.vertices.size() < 3 || !(std::abs(area2) > 0.0)) {
                flag(a.id, deg, 0.0);
                return;
            }
            if (area2 < 0.0) flag(a.id, wind, std::abs(0.5 * area2));
            int k = count_self_intersections(p);
            if (k > 0) flag(a.id, self, static_cast<double>(k));
        };
        check_polygon(a.roof, "roof-degenerate", "roof-winding", "roof-self-intersection");
        check_polygon(a.footprint, "footprint-degenerate", "footprint-winding",
                      "footprint-self-intersection");

        if (a.roof.vertices.size() != a.footprint.vertices.size()) {
            double diff = std::abs(static_cast<double>(a.roof.vertices.size()) -
                                   static_cast<double>(a.footprint.vertices.size()));
            flag(a.id, "footprint-vertex-count", diff);
        } else {
            double worst = 0.0;
            for (std::size_t k = 0; k < a.roof.vertices.size(); ++k) {
                Point2 want = {a.roof.vertices[k].x + a.offset.ox,
                               a.roof.vertices[k].y + a.offset.oy};
                Point2 got = a.footprint.vertices[k];
                worst = std::max(worst, std::hypot(got.x - want.x, got.y - want.y));
            }
            if (worst > tol) flag(a.id, "footprint-consistency", worst);
        }

        if (!(a.building_bbox.w > 0.0) || !(a.building_bbox.h > 0.0)) {
            flag(a.id, "bbox-nonpositive", 0.0);
        } else {
            BBox want = derive_building_bbox(a.roof, a.footprint);
            double worst = std::max({std::abs(a.building_bbox.x - want.x),
                                     std::abs(a.building_bbox.y - want.y),
                                     std::abs(a.building_bbox.w - want.w),
                                     std::abs(a.building_bbox.h - want.h)});
            if (worst > tol) flag(a.id, "bbox-tightness", worst);
        }
    }

    std::sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) {
        return std::tie(a.annotation_id, a.rule) < std::tie(b.annotation_id, b.rule);
    });
    return out;
}

Dataset load_dataset(const std::string& path) {
    ordered_json j = detail::parse_json_file(path, "dataset");
    if (!j.is_object()) throw ParseError("dataset root must be a JSON object: " + path);

    Dataset d;
    if (j.contains("split")) d.split = split_from_string(j["split"].get<std::string>());

    std::unordered_set<std::int64_t> image_ids;
    for (const auto& ji : j.value("images", ordered_json::array())) {
        ImageRecord im;
        if (!ji.contains("id")) throw ParseError("image record missing 'id'");
        im.id = ji["id"].get<std::int64_t>();
        im.file_name = ji.value("file_name", std::string{});
        im.width = ji.value("width", 0);
        im.height = ji.value("height", 0);
        if (im.width <= 0 || im.height <= 0)
            throw ParseError("image " + std::to_string(im.id) + ": width/height must be > 0");
        if (!image_ids.insert(im.id).second)
            throw IntegrityError("duplicate image id " + std::to_string(im.id));
        d.images.push_back(std::move(im));
    }

    std::unordered_set<std::int64_t> ann_ids;
    for (const auto& ja : j.value("annotations", ordered_json::array())) {
        BuildingAnnotation a;
        if (!ja.contains("id")) throw ParseError("annotation missing 'id'");
        a.id = ja["id"].get<std::int64_t>();
        if (!ann_ids.insert(a.id).second)
            throw IntegrityError("duplicate annotation id " + std::to_string(a.id));
        if (!ja.contains("image_id")) throw ParseError("annotation missing 'image_id'");
        a.image_id = ja["image_id"].get<std::int64_t>();
        if (image_ids.find(a.image_id) == image_ids.end())
            throw IntegrityError("annotation " + std::to_string(a.id) +
                                 " references unknown image id " + std::to_string(a.image_id));
        if (!ja.contains("roof")) throw ParseError("annotation missing 'roof'");
        a.roof = normalized_winding(
            polygon_from_json(ja["roof"], "annotation " + std::to_string(a.id) + " roof"));
        if (!ja.contains("offset"))
            throw ParseError("annotation " + std::to_string(a.id) + " missing 'offset'");
        a.offset = detail::offset_from_json(ja["offset"], "annotation " + std::to_string(a.id));
        if (ja.contains("footprint"))
            a.footprint = normalized_winding(polygon_from_json(
                ja["footprint"], "annotation " + std::to_string(a.id) + " footprint"));
        else
            a.footprint = derive_footprint(a.roof, a.offset);
        if (ja.contains("building_bbox")) {
            const auto& jb = ja["building_bbox"];
            if (!jb.is_array() || jb.size() != 4)
                throw ParseError("annotation " + std::to_string(a.id) +
                                 ": 'building_bbox' must be [x,y,w,h]");
            a.building_bbox = {jb[0].get<double>(), jb[1].get<double>(), jb[2].get<double>(),
                               jb[3].get<double>()};
        } else {
            a.building_bbox = derive_building_bbox(a.roof, a.footprint);
        }
        d.annotations.push_back(std::move(a));
    }
    return d;
}

void save_dataset(const Dataset& d, const std::string& path) {
    ordered_json j;
    j["split"] = to_string(d.split);
    j["images"] = ordered_json::array();
    for (const ImageRecord& im : d.images)
        j["images"].push_back({{"id", im.id},
                               {"file_name", im.file_name},
                               {"width", im.width},
                               {"height", im.height}});
    j["annotations"] = ordered_json::array();
    for (const BuildingAnnotation& a : d.annotations) {
        ordered_json ja;
        ja["id"] = a.id;
        ja["image_id"] = a.image_id;
        ja["roof"] = polygon_to_json(a.roof);
        ja["offset"] = {a.offset.ox, a.offset.oy};
        ja["footprint"] = polygon_to_json(a.footprint);
        ja["building_bbox"] = {a.building_bbox.x, a.building_bbox.y, a.building_bbox.w,
                               a.building_bbox.h};
        j["annotations"].push_back(std::move(ja));
    }
    detail::write_json_file(j, path, "dataset");
}

}  // namespace offnadir
