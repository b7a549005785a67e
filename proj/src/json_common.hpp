#pragma once

// Internal JSON helpers shared by the serialization code paths.

#include <fstream>
#include <string>

#include "json.hpp"
#include "offnadir/data_model.hpp"

namespace offnadir::detail {

using ordered_json = nlohmann::ordered_json;

inline ordered_json parse_json_file(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw IoError(std::string("cannot open ") + what + " file: " + path);
    try {
        return ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed ") + what + " JSON (" + path + "): " + e.what());
    }
}

inline void write_json_file(const ordered_json& j, const std::string& path, const char* what) {
    std::ofstream out(path);
    if (!out) throw IoError(std::string("cannot open ") + what + " output: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError(std::string("failed writing ") + what + ": " + path);
}

inline Polygon polygon_from_json(const ordered_json& j, const std::string& what) {
    if (!j.is_array()) throw ParseError(what + ": expected an array of [x,y] pairs");
    Polygon p;
    p.vertices.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw ParseError(what + ": vertex must be a numeric [x,y] pair");
        p.vertices.push_back({v[0].get<double>(), v[1].get<double>()});
    }
    if (p.vertices.size() < 3)
        throw GeometryError(what + ": degenerate polygon with " +
                            std::to_string(p.vertices.size()) + " vertices (need >= 3)");
    return p;
}

inline ordered_json polygon_to_json(const Polygon& p) {
    ordered_json j = ordered_json::array();
    for (const Point2& v : p.vertices) j.push_back({v.x, v.y});
    return j;
}

inline OffsetVector offset_from_json(const ordered_json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ParseError(what + ": 'offset' must be a numeric [ox,oy] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

// Shortest round-trip decimal form, identical to the JSON serialization.
inline std::string double_to_string(double v) { return ordered_json(v).dump(); }

}  // namespace offnadir::detail
