#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "gazepet/bbox.hpp"
#include "gazepet/display_sample.hpp"
#include "gazepet/geometry.hpp"
#include "gazepet/volume.hpp"

namespace gazepet {

// Nonzero voxels count as foreground. 1.0 when both are empty.
double dice(const LabelVolume& a, const LabelVolume& b);

struct LesionPR {
    double precision = 0.0;
    double recall = 0.0;
    std::size_t matched = 0;
    std::size_t pred_lesions = 0;
    std::size_t truth_lesions = 0;
};

// 26-connected components of each foreground, matched one-to-one by voxel
// overlap (largest overlap first).
LesionPR lesion_pr(const LabelVolume& pred, const LabelVolume& truth);

double mean_point_to_mask(const Point2& p, const std::vector<Point2>& mask_pixels);

struct CorrectionCase {
    Point2 predicted;  // 512-px image space
    Point2 last_gaze;
    std::vector<Point2> mask_pixels;
    DisplaySample display;  // maps image points to monitor pixels
    Vec3 origin_mm{0.0, 0.0, 600.0};
};

struct CorrectionEval {
    double on_mask_pct = 0.0;
    double improved_pct = 0.0;
    double mean_angle_deg = 0.0;
    std::size_t cases = 0;
};

CorrectionEval gaze_correction_eval(const std::vector<CorrectionCase>& cases,
                                    const ViewingGeometry& geom);

}  // namespace gazepet
