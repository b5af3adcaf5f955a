#pragma once

#include <cstdint>
#include <string>

#include "gazepet/mip.hpp"
#include "gazepet/session.hpp"
#include "gazepet/volume.hpp"

namespace gazepet {

struct HeatmapReport {
    std::size_t ticks = 0;
    std::size_t contributed = 0;     // counted into the axial volume
    std::size_t no_gaze = 0;         // both eyes invalid or outside the window
    std::size_t mip_ticks = 0;       // valid MIP-view ticks, counted separately
    std::size_t slice_out_of_range = 0;

    friend bool operator==(const HeatmapReport&, const HeatmapReport&) = default;
};

struct GazeHeatmap {
    LabelVolume counts;    // x, y in study pixels, z = axial slice
    LabelVolume mip_view;  // 512 x 512 x 12, gaze on the MIP display per angle
    HeatmapReport report;

    std::int64_t total() const;
};

// Raw per-voxel gaze counts, no smoothing. Image coordinates are scaled to
// the study's in-plane size and rounded half-up, clamped to the grid.
GazeHeatmap build_heatmap(const SessionRecording& rec, const Dims& study_dims,
                          const Spacing& spacing = {});

MipStack heatmap_mip(const GazeHeatmap& heatmap);

// File name stems of the derived volumes, e.g. GAZE_trainee.nii.gz.
std::string derived_volume_name(const std::string& kind, const std::string& role);

}  // namespace gazepet
