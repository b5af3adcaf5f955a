#include "gazepet/geometry.hpp"

#include <cmath>
#include <numbers>

#include "gazepet/error.hpp"

namespace gazepet {

void ViewingGeometry::validate() const {
    if (!(screen_width_mm > 0) || !(screen_height_mm > 0) || monitor_width_px <= 0 ||
        monitor_height_px <= 0) {
        throw InvalidArgument("viewing geometry needs positive screen and monitor sizes");
    }
}

Vec3 ViewingGeometry::screen_point_mm(const Point2& px) const {
    return {(px.x - monitor_width_px / 2.0) * screen_width_mm / monitor_width_px,
            (monitor_height_px / 2.0 - px.y) * screen_height_mm / monitor_height_px, 0.0};
}

void to_json(nlohmann::json& j, const ViewingGeometry& g) {
    j = {{"screen_width_mm", g.screen_width_mm},
         {"screen_height_mm", g.screen_height_mm},
         {"monitor_width_px", g.monitor_width_px},
         {"monitor_height_px", g.monitor_height_px}};
}

void from_json(const nlohmann::json& j, ViewingGeometry& g) {
    ViewingGeometry d;
    g.screen_width_mm = j.value("screen_width_mm", d.screen_width_mm);
    g.screen_height_mm = j.value("screen_height_mm", d.screen_height_mm);
    g.monitor_width_px = j.value("monitor_width_px", d.monitor_width_px);
    g.monitor_height_px = j.value("monitor_height_px", d.monitor_height_px);
    g.validate();
}

double angle_between_vectors(const Vec3& a, const Vec3& b) {
    const double na = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
    const double nb = std::sqrt(b[0] * b[0] + b[1] * b[1] + b[2] * b[2]);
    if (na == 0.0 || nb == 0.0) throw DegenerateGeometryError("zero-length gaze vector");
    // atan2 of |a x b| and a.b stays accurate for tiny angles, unlike acos.
    const Vec3 c{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
    const double cross = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
    const double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    return std::atan2(cross, dot) * 180.0 / std::numbers::pi;
}

double angle_between(const Vec3& origin, const Point2& p1, const Point2& p2,
                     const ViewingGeometry& geom) {
    const Vec3 s1 = geom.screen_point_mm(p1);
    const Vec3 s2 = geom.screen_point_mm(p2);
    const Vec3 a{s1[0] - origin[0], s1[1] - origin[1], s1[2] - origin[2]};
    const Vec3 b{s2[0] - origin[0], s2[1] - origin[1], s2[2] - origin[2]};
    return angle_between_vectors(a, b);
}

}  // namespace gazepet
