#include "gazepet/pointer_sim.hpp"

#include <cmath>
#include <limits>

namespace gazepet {

GazeSample pointer_gaze(const std::optional<Point2>& monitor_px, std::int64_t ts,
                        const PointerSimOptions& o) {
    GazeSample g;
    g.system_time_stamp = ts;
    g.device_time_stamp = ts;
    const auto& geom = o.geometry;
    const bool on_screen = monitor_px && monitor_px->x >= 0 && monitor_px->y >= 0 &&
                           monitor_px->x < geom.monitor_width_px &&
                           monitor_px->y < geom.monitor_height_px;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const int side : {-1, 1}) {
        EyeSample e;
        if (on_screen) {
            const Vec3 s = geom.screen_point_mm(*monitor_px);
            e.gaze_point_on_display_area = {monitor_px->x / geom.monitor_width_px,
                                            monitor_px->y / geom.monitor_height_px};
            e.gaze_point_in_user_coordinate_system = s;
            e.gaze_point_validity = 1;
            e.pupil_diameter = o.pupil_mm;
            e.pupil_validity = 1;
            e.gaze_origin_in_user_coordinate_system = {side * o.half_ipd_mm, 0.0,
                                                       o.eye_distance_mm};
            e.gaze_origin_in_trackbox_coordinate_system = {0.5 - side * 0.1, 0.5, 0.5};
        } else {
            e.gaze_point_on_display_area = {nan, nan};
            e.gaze_point_in_user_coordinate_system = {nan, nan, nan};
            e.pupil_diameter = nan;
            e.gaze_origin_in_user_coordinate_system = {nan, nan, nan};
            e.gaze_origin_in_trackbox_coordinate_system = {nan, nan, nan};
        }
        (side < 0 ? g.left : g.right) = e;
    }
    return g;
}

GazeSample image_gaze(const std::optional<Point2>& image_point, const DisplaySample& display,
                      std::int64_t ts, const PointerSimOptions& o) {
    if (!image_point) return pointer_gaze(std::nullopt, ts, o);
    return pointer_gaze(image_to_monitor(*image_point, display), ts, o);
}

}  // namespace gazepet
