#pragma once

#include <array>

#include <nlohmann/json.hpp>

#include "gazepet/bbox.hpp"

namespace gazepet {

using Vec3 = std::array<double, 3>;

// Screen placement in the tracker's user coordinate system: screen centre at
// the origin, screen plane z = 0, +x right, +y up, +z toward the reader.
struct ViewingGeometry {
    double screen_width_mm = 596.7;  // 27" 16:9
    double screen_height_mm = 335.7;
    int monitor_width_px = 2560;
    int monitor_height_px = 1440;

    void validate() const;
    Vec3 screen_point_mm(const Point2& px) const;
    friend bool operator==(const ViewingGeometry&, const ViewingGeometry&) = default;
};

void to_json(nlohmann::json& j, const ViewingGeometry& g);
void from_json(const nlohmann::json& j, ViewingGeometry& g);

// Angle in degrees between the rays from `origin` to two screen points
// (monitor pixels). Throws DegenerateGeometryError for a zero-length ray.
double angle_between(const Vec3& origin_mm, const Point2& p1_px, const Point2& p2_px,
                     const ViewingGeometry& geom);

// Angle in degrees between two direction vectors.
double angle_between_vectors(const Vec3& a, const Vec3& b);

}  // namespace gazepet
