#include "gazepet/mip.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gazepet/error.hpp"

namespace gazepet {
namespace {

// Exact values at multiples of 90 degrees so the right-angle projections are
// pure axis permutations.
void rotation_terms(double theta_deg, double& c, double& s) {
    const double turns = theta_deg / 90.0;
    if (std::abs(turns - std::round(turns)) < 1e-12) {
        const long q = ((std::lround(turns) % 4) + 4) % 4;
        static constexpr double kCos[4] = {1, 0, -1, 0};
        static constexpr double kSin[4] = {0, 1, 0, -1};
        c = kCos[q];
        s = kSin[q];
        return;
    }
    const double rad = theta_deg * std::numbers::pi / 180.0;
    c = std::cos(rad);
    s = std::sin(rad);
}

}  // namespace

float Projection::max_value() const {
    return values.empty() ? 0.0f : *std::max_element(values.begin(), values.end());
}

Projection project_rotated(const ScalarVolume& vol, double theta_deg) {
    const Dims& d = vol.dims();
    double c, s;
    rotation_terms(theta_deg, c, s);
    const double cx = (d.nx - 1) / 2.0;
    const double cy = (d.ny - 1) / 2.0;

    Projection out{d.nx, d.nz, std::vector<float>(static_cast<std::size_t>(d.nx) * d.nz, 0.0f)};

    auto voxel = [&](int x, int y, int z) -> float {
        return (x >= 0 && y >= 0 && x < d.nx && y < d.ny) ? vol.at(x, y, z) : 0.0f;
    };

    for (int z = 0; z < d.nz; ++z) {
        const int row = d.nz - 1 - z;
        for (int xp = 0; xp < d.nx; ++xp) {
            const double dx = xp - cx;
            float best = 0.0f;
            bool any = false;
            for (int yp = 0; yp < d.ny; ++yp) {
                const double dy = yp - cy;
                const double sx = cx + c * dx + s * dy;
                const double sy = cy - s * dx + c * dy;
                const double fx = std::floor(sx), fy = std::floor(sy);
                const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
                if (x0 < -1 || y0 < -1 || x0 >= d.nx || y0 >= d.ny) continue;
                const double wx = sx - fx, wy = sy - fy;
                float v;
                if (wx == 0.0 && wy == 0.0) {
                    v = voxel(x0, y0, z);
                } else {
                    const float a = voxel(x0, y0, z), b = voxel(x0 + 1, y0, z);
                    const float e = voxel(x0, y0 + 1, z), f = voxel(x0 + 1, y0 + 1, z);
                    const double interp =
                        (1 - wy) * ((1 - wx) * a + wx * b) + wy * ((1 - wx) * e + wx * f);
                    const float lo = std::min({a, b, e, f}), hi = std::max({a, b, e, f});
                    v = std::clamp(static_cast<float>(interp), lo, hi);
                }
                if (!any || v > best) {
                    best = v;
                    any = true;
                }
            }
            out.values[static_cast<std::size_t>(row) * d.nx + xp] = best;
        }
    }
    return out;
}

Projection correct_aspect(const Projection& raw, double sz_over_sx) {
    if (!(sz_over_sx > 0)) throw InvalidArgument("aspect ratio must be positive");
    const int rows = std::max(1, static_cast<int>(std::lround(raw.height * sz_over_sx)));
    if (rows == raw.height) return raw;
    Projection out{raw.width, rows, std::vector<float>(static_cast<std::size_t>(raw.width) * rows)};
    if (rows > raw.height) {
        for (int r = 0; r < rows; ++r) {
            const int src = std::min(raw.height - 1,
                                     static_cast<int>(std::floor((r + 0.5) * raw.height / rows)));
            std::copy_n(raw.values.begin() + static_cast<long>(src) * raw.width, raw.width,
                        out.values.begin() + static_cast<long>(r) * raw.width);
        }
        return out;
    }
    // Fewer rows than slices: each output row takes the max of the rows it
    // covers so no slice's peak is dropped.
    for (int r = 0; r < rows; ++r) {
        const int first = static_cast<int>(static_cast<long>(r) * raw.height / rows);
        const int last = std::max(first + 1, static_cast<int>((static_cast<long>(r + 1) * raw.height + rows - 1) / rows));
        for (int col = 0; col < raw.width; ++col) {
            float m = raw.at(col, first);
            for (int src = first + 1; src < last && src < raw.height; ++src) {
                m = std::max(m, raw.at(col, src));
            }
            out.values[static_cast<std::size_t>(r) * raw.width + col] = m;
        }
    }
    return out;
}

MipStack mip_stack(const ScalarVolume& vol) {
    if (vol.kind() != ModalityKind::PET_SUV) {
        throw InvalidArgument("MIP stacks are built from PET (non-negative) volumes");
    }
    MipStack stack;
    const double aspect = vol.spacing().sz / vol.spacing().sx;
    for (int i = 0; i < kMipAngles; ++i) {
        stack.angles_deg[static_cast<std::size_t>(i)] = 30.0 * i;
        stack.projections.push_back(correct_aspect(project_rotated(vol, 30.0 * i), aspect));
    }
    return stack;
}

ScalarVolume mip_stack_to_volume(const MipStack& stack, const Spacing& source_spacing) {
    if (stack.projections.empty()) throw InvalidArgument("empty MIP stack");
    const int w = stack.projections.front().width;
    const int h = stack.projections.front().height;
    std::vector<float> data;
    data.reserve(static_cast<std::size_t>(w) * h * stack.projections.size());
    for (const auto& p : stack.projections) {
        data.insert(data.end(), p.values.begin(), p.values.end());
    }
    return ScalarVolume(Dims{w, h, static_cast<int>(stack.projections.size())},
                        Spacing{source_spacing.sx, source_spacing.sx, 1.0}, ModalityKind::PET_SUV,
                        std::move(data));
}

}  // namespace gazepet
