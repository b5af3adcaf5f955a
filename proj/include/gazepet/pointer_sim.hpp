#pragma once

#include <cstdint>
#include <optional>

#include "gazepet/bbox.hpp"
#include "gazepet/geometry.hpp"
#include "gazepet/session.hpp"

namespace gazepet {

struct PointerSimOptions {
    ViewingGeometry geometry;
    double eye_distance_mm = 600.0;
    double half_ipd_mm = 32.0;
    double pupil_mm = 3.5;
};

// A full tracker sample for a pointer at monitor pixel `monitor_px`. Both
// eyes valid and fixed in front of the screen centre; an empty pointer (or
// one off the monitor) yields an all-invalid sample.
GazeSample pointer_gaze(const std::optional<Point2>& monitor_px, std::int64_t system_time_stamp,
                        const PointerSimOptions& options = {});

// Same, for a point in the 512-px image space of `display`.
GazeSample image_gaze(const std::optional<Point2>& image_point, const DisplaySample& display,
                      std::int64_t system_time_stamp, const PointerSimOptions& options = {});

// Timestamp of the i-th tick of a 60 Hz stream starting at t0 (microseconds).
inline std::int64_t tick_time(std::int64_t t0, std::int64_t i) {
    return t0 + (i * 1000000 + 30) / 60;
}

}  // namespace gazepet
