#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>

namespace gazepet {

// Image-space point in the canonical 512-px grid. Pixel (i, j) has its centre
// at (i, j).
struct Point2 {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point2&, const Point2&) = default;
};

// Axis-aligned box covering pixels x..x+w-1, y..y+h-1 ("xywh").
struct Bbox {
    int x = 0;
    int y = 0;
    int w = 1;
    int h = 1;

    int x_end() const { return x + w; }  // exclusive
    int y_end() const { return y + h; }
    std::int64_t area() const { return static_cast<std::int64_t>(w) * h; }
    bool contains(int px, int py) const {
        return px >= x && px < x_end() && py >= y && py < y_end();
    }
    Point2 center() const { return {x + (w - 1) / 2.0, y + (h - 1) / 2.0}; }

    friend bool operator==(const Bbox&, const Bbox&) = default;
    friend auto operator<=>(const Bbox&, const Bbox&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const Bbox& b) {
    return os << '[' << b.x << ',' << b.y << ',' << b.w << ',' << b.h << ']';
}

inline std::int64_t intersection_area(const Bbox& a, const Bbox& b) {
    const int w = std::min(a.x_end(), b.x_end()) - std::max(a.x, b.x);
    const int h = std::min(a.y_end(), b.y_end()) - std::max(a.y, b.y);
    return (w > 0 && h > 0) ? static_cast<std::int64_t>(w) * h : 0;
}

inline double iou(const Bbox& a, const Bbox& b) {
    const auto inter = intersection_area(a, b);
    if (inter == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(a.area() + b.area() - inter);
}

// Zero when the point lies inside the box's pixel extent, else the Euclidean
// distance to the nearest box edge. Pixel centres span [x, x+w-1].
inline double point_box_distance(const Point2& p, const Bbox& b) {
    const double lx = b.x, hx = b.x + b.w - 1, ly = b.y, hy = b.y + b.h - 1;
    const double dx = p.x < lx ? lx - p.x : (p.x > hx ? p.x - hx : 0.0);
    const double dy = p.y < ly ? ly - p.y : (p.y > hy ? p.y - hy : 0.0);
    return std::hypot(dx, dy);
}

inline Bbox dilate(const Bbox& b, int px) {
    return Bbox{b.x - px, b.y - px, b.w + 2 * px, b.h + 2 * px};
}

}  // namespace gazepet
