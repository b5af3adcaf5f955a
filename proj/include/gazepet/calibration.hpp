#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gazepet/geometry.hpp"
#include "gazepet/session.hpp"

namespace gazepet {

struct CalibrationRecord {
    int lesion_id = 0;
    std::size_t samples = 0;
    double accuracy_deg = 0.0;
    double precision_deg = 0.0;  // RMS of consecutive-sample angles
    double last_gaze_deg = 0.0;
    double closest_gaze_deg = 0.0;
};

struct Aggregate {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation, 0 for one value
    double median = 0.0;
    double min = 0.0;
    double max = 0.0;
};

Aggregate aggregate(std::vector<double> values);

struct CalibrationReport {
    std::vector<CalibrationRecord> records;
    Aggregate accuracy;
    Aggregate precision;
    Aggregate last_gaze;
    Aggregate closest_gaze;
    std::size_t skipped = 0;  // lesions with fewer than two valid samples

    nlohmann::json to_json() const;
    std::string to_csv() const;  // metric rows x mean/std/median/min/max, degrees
};

// Angular accuracy/precision over the valid samples in the window_us before
// each accepted lesion's select keystroke, against the root box centre.
// Throws EmptyReportError when no lesion qualifies.
CalibrationReport calibration_metrics(const SessionRecording& rec, const ViewingGeometry& geom,
                                      std::int64_t window_us = 250000);

// Merges several recordings' records and recomputes aggregates.
CalibrationReport merge_reports(const std::vector<CalibrationReport>& reports);

}  // namespace gazepet
