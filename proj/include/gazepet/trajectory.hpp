#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "gazepet/bbox.hpp"
#include "gazepet/session.hpp"
#include "gazepet/volume.hpp"

namespace gazepet {

enum class WindowKind { Selection16, Intent };
enum class WindowLabel { Intentional, Unintentional, Accepted, Rejected };

std::string_view to_string(WindowKind k);
std::string_view to_string(WindowLabel l);

struct TrajectorySample {
    std::int64_t system_time_stamp = 0;
    Point2 gaze;  // 512-px image space
    int slice_number = 0;
    ViewModality modality = ViewModality::PET;
    std::size_t tick = 0;
};

struct TrajectoryWindow {
    int lesion_id = 0;  // rejected windows: index into the recording's rejected list
    WindowKind kind = WindowKind::Selection16;
    WindowLabel label = WindowLabel::Accepted;
    int slice_number = 0;
    Bbox target;  // lesion root box, or the hot spot for unintentional windows
    std::vector<TrajectorySample> samples;
};

struct WindowOptions {
    std::size_t selection_max = 16;
    double max_mean_distance_px = 100.0;
    std::size_t intent_min = 60;
    std::size_t intent_max = 120;
    double hot_spot_suv = 2.5;
    int hot_spot_dilation = 2;
    double hot_spot_gaze_radius_px = 100.0;
    std::uint64_t seed = 0;
};

struct WindowTally {
    std::size_t produced = 0;
    std::size_t dropped_empty = 0;
    std::size_t dropped_far = 0;
    std::size_t dropped_short = 0;
    std::size_t hot_spots = 0;  // candidate non-tumour hot spots found
};

struct WindowSet {
    std::vector<TrajectoryWindow> windows;
    WindowTally tally;
};

// Last <= 16 valid gaze samples before each select keystroke, on the slice
// it happened on. Accepted lesions first, then rejected selections.
WindowSet extract_selection_windows(const SessionRecording& rec, const WindowOptions& opt = {});

// Continuous gaze before each accept (intentional) plus the same number of
// windows leading to random non-annotated hot spots (unintentional).
WindowSet extract_intent_windows(const SessionRecording& rec, const ScalarVolume& pet,
                                 const WindowOptions& opt = {});

// The continuous-gaze window ending at tick `end` (inclusive): a single
// invalid tick is bridged, two in a row end the window. Returns up to `max`
// valid samples, oldest first.
std::vector<TrajectorySample> continuous_window(const SessionRecording& rec, std::size_t end,
                                                std::size_t max);

// Non-annotated hot spots: components at SUV >= floor whose box dilated by
// `dilation` does not touch any accepted box on the slice.
struct HotSpot {
    int slice_number = 0;
    Bbox box;
    friend bool operator==(const HotSpot&, const HotSpot&) = default;
};
std::vector<HotSpot> find_hot_spots(const ScalarVolume& pet,
                                    const std::vector<LesionAnnotation>& lesions,
                                    double suv_floor, int dilation);

}  // namespace gazepet
