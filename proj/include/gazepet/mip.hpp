#pragma once

#include <array>
#include <vector>

#include "gazepet/volume.hpp"

namespace gazepet {

inline constexpr int kMipAngles = 12;

struct Projection {
    int width = 0;   // columns (patient left-right after rotation)
    int height = 0;  // rows, head at row 0
    std::vector<float> values;

    float at(int col, int row) const {
        return values[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(col)];
    }
    float max_value() const;
};

struct MipStack {
    std::array<double, kMipAngles> angles_deg{};
    std::vector<Projection> projections;  // one per angle
};

// Maximum along the anterior-posterior (y) axis after rotating the volume
// about the z axis by theta degrees (bilinear in-plane resampling, zero
// outside). Rows are z with the head at row 0; no aspect correction.
Projection project_rotated(const ScalarVolume& vol, double theta_deg);

// Nearest-neighbour row resampling so rows have the same physical height as
// columns are wide (sz/sx scaling).
Projection correct_aspect(const Projection& raw, double sz_over_sx);

// Twelve aspect-corrected projections at 0, 30, ..., 330 degrees. Requires a
// PET_SUV (non-negative) volume.
MipStack mip_stack(const ScalarVolume& vol);

// Packs the stack into a volume of dims (width, height, 12) for NIfTI output.
ScalarVolume mip_stack_to_volume(const MipStack& stack, const Spacing& source_spacing);

}  // namespace gazepet
