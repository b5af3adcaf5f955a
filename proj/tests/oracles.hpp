#pragma once

// Brute-force reference implementations. None of these call into the code
// they are used to check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

struct Blob {
    int x0, y0, x1, y1;  // inclusive bounds
    std::vector<std::pair<int, int>> pixels;  // sorted (y, x)
};

// 8-connected flood fill over a row-major 0/1 mask.
inline std::vector<Blob> flood_fill(const std::vector<std::uint8_t>& mask, int w, int h) {
    std::vector<int> seen(mask.size(), 0);
    std::vector<Blob> out;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask[y * w + x] || seen[y * w + x]) continue;
            Blob b{x, y, x, y, {}};
            std::deque<std::pair<int, int>> q{{x, y}};
            seen[y * w + x] = 1;
            while (!q.empty()) {
                auto [cx, cy] = q.front();
                q.pop_front();
                b.pixels.push_back({cy, cx});
                b.x0 = std::min(b.x0, cx);
                b.x1 = std::max(b.x1, cx);
                b.y0 = std::min(b.y0, cy);
                b.y1 = std::max(b.y1, cy);
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = cx + dx, ny = cy + dy;
                        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                        if (mask[ny * w + nx] && !seen[ny * w + nx]) {
                            seen[ny * w + nx] = 1;
                            q.push_back({nx, ny});
                        }
                    }
                }
            }
            std::sort(b.pixels.begin(), b.pixels.end());
            out.push_back(std::move(b));
        }
    }
    return out;
}

// Bilinear value of a row-major w x h grid at (x, y), edges clamped.
inline double bilinear(const std::vector<float>& g, int w, int h, double x, double y) {
    const int x0 = std::clamp(static_cast<int>(std::floor(x)), 0, w - 1);
    const int y0 = std::clamp(static_cast<int>(std::floor(y)), 0, h - 1);
    const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
    const double fx = x - x0, fy = y - y0;
    const double a = g[y0 * w + x0], b = g[y0 * w + x1], c = g[y1 * w + x0], d = g[y1 * w + x1];
    return (1 - fy) * ((1 - fx) * a + fx * b) + fy * ((1 - fx) * c + fx * d);
}

// Voxel (x, y, z) of an x-fastest volume.
struct Vol {
    int nx, ny, nz;
    std::vector<float> v;
    float at(int x, int y, int z) const { return v[(static_cast<std::size_t>(z) * ny + y) * nx + x]; }
};

// Right-angle MIP by axis permutation; rows are z with the top slice first.
// Rotation by q quarter turns, maximum along the (rotated) y axis.
inline std::vector<float> mip_quarter(const Vol& vol, int q) {
    const int n = vol.nx;  // square in-plane
    std::vector<float> out(static_cast<std::size_t>(n) * vol.nz, 0.0f);
    for (int z = 0; z < vol.nz; ++z) {
        const int row = vol.nz - 1 - z;
        for (int c = 0; c < n; ++c) {
            float m = 0.0f;
            bool any = false;
            for (int k = 0; k < n; ++k) {
                float v = 0;
                switch (q) {
                    case 0: v = vol.at(c, k, z); break;
                    case 1: v = vol.at(k, n - 1 - c, z); break;
                    case 2: v = vol.at(n - 1 - c, k, z); break;
                    default: v = vol.at(k, c, z); break;
                }
                if (!any || v > m) m = v;
                any = true;
            }
            out[static_cast<std::size_t>(row) * n + c] = m;
        }
    }
    return out;
}

// Two-way ANOVA ICC(3,k) straight from the textbook sums of squares.
struct Anova {
    double msr, mse, icc;
};
inline Anova icc3k(const std::vector<std::vector<double>>& m) {
    const std::size_t n = m.size(), k = m[0].size();
    long double grand = 0;
    for (const auto& r : m) {
        for (double v : r) grand += v;
    }
    grand /= static_cast<long double>(n * k);
    long double sst = 0, ssr = 0, ssc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        long double rm = 0;
        for (std::size_t j = 0; j < k; ++j) {
            rm += m[i][j];
            sst += (m[i][j] - grand) * (m[i][j] - grand);
        }
        rm /= k;
        ssr += (rm - grand) * (rm - grand) * k;
    }
    for (std::size_t j = 0; j < k; ++j) {
        long double cm = 0;
        for (std::size_t i = 0; i < n; ++i) cm += m[i][j];
        cm /= n;
        ssc += (cm - grand) * (cm - grand) * n;
    }
    const long double sse = sst - ssr - ssc;
    const long double msr = ssr / (n - 1), mse = sse / ((n - 1) * (k - 1));
    return {static_cast<double>(msr), static_cast<double>(mse),
            static_cast<double>((msr - mse) / msr)};
}

// Angle in degrees between two rays, via acos in long double.
inline double ray_angle_deg(const std::array<double, 3>& o, const std::array<double, 3>& p,
                            const std::array<double, 3>& q) {
    long double a[3], b[3];
    for (int i = 0; i < 3; ++i) {
        a[i] = static_cast<long double>(p[i]) - o[i];
        b[i] = static_cast<long double>(q[i]) - o[i];
    }
    const long double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    const long double na = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
    const long double nb = std::sqrt(b[0] * b[0] + b[1] * b[1] + b[2] * b[2]);
    long double c = dot / (na * nb);
    c = std::clamp(c, -1.0L, 1.0L);
    return static_cast<double>(std::acos(c) * 180.0L / 3.14159265358979323846264338327950288L);
}

}  // namespace oracle
