#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gazepet/bbox.hpp"
#include "gazepet/display_sample.hpp"
#include "gazepet/proposal.hpp"

namespace gazepet {

// One eye of a Tobii-style tracker sample. Coordinates the tracker could not
// produce are NaN (serialised as null).
struct EyeSample {
    std::array<double, 2> gaze_point_on_display_area{};      // normalised [0,1]
    std::array<double, 3> gaze_point_in_user_coordinate_system{};  // mm
    int gaze_point_validity = 0;
    double pupil_diameter = 0.0;  // mm
    int pupil_validity = 0;
    std::array<double, 3> gaze_origin_in_user_coordinate_system{};      // mm
    std::array<double, 3> gaze_origin_in_trackbox_coordinate_system{};  // normalised

    bool valid() const { return gaze_point_validity == 1; }
    friend bool operator==(const EyeSample& a, const EyeSample& b);
};

struct GazeSample {
    std::int64_t device_time_stamp = 0;  // microseconds
    std::int64_t system_time_stamp = 0;  // microseconds
    EyeSample left;
    EyeSample right;

    nlohmann::json extras = nlohmann::json::object();

    friend bool operator==(const GazeSample&, const GazeSample&) = default;
};

struct KeyEvent {
    std::int64_t system_time_stamp = 0;
    int key_code = 0;

    nlohmann::json extras = nlohmann::json::object();
    friend bool operator==(const KeyEvent&, const KeyEvent&) = default;
};

struct SessionHeader {
    int monitor_width = 2560;
    int monitor_height = 1440;
    std::array<int, 2> display_window_dim{1400, 1400};
    int case_difficulty = 0;
    int ui_experience = 0;
    std::string comment;

    friend bool operator==(const SessionHeader&, const SessionHeader&) = default;
};

// Everything recorded for one study read. tobii_cam, common_cam and pauses
// are synced by position.
struct SessionRecording {
    SessionHeader header;
    std::vector<GazeSample> tobii_cam;
    std::vector<DisplaySample> common_cam;
    std::vector<bool> pauses;
    std::vector<KeyEvent> key_events;
    std::vector<LesionAnnotation> lesions;
    std::vector<RejectedBox> rejected;

    // Unknown top-level fields of the three files, preserved on re-emission.
    nlohmann::json gaze_extras = nlohmann::json::object();
    nlohmann::json lesion_extras = nlohmann::json::object();
    nlohmann::json key_extras = nlohmann::json::object();

    // Throws IntegrityError when the synced lists disagree in length or
    // timestamps go backwards.
    void check_integrity() const;

    friend bool operator==(const SessionRecording&, const SessionRecording&) = default;
};

inline constexpr const char* kGazeFile = "gazedots_tobii.json";
inline constexpr const char* kLesionFile = "gaze_lesions.json";
inline constexpr const char* kKeyFile = "key_press_events.json";

// Append-only recorder. Single writer.
class SessionRecorder {
public:
    SessionRecorder() = default;
    explicit SessionRecorder(SessionHeader header) { recording_.header = std::move(header); }

    bool is_open() const { return open_; }
    void close() { open_ = false; }

    // Appends to all three synced lists; throws StateError once closed.
    void ingest_tick(const GazeSample& gaze, const DisplaySample& display, bool paused);
    void record_key(const KeyEvent& key);

    std::size_t ticks() const { return recording_.pauses.size(); }
    const SessionRecording& recording() const { return recording_; }
    SessionRecording& recording() { return recording_; }

private:
    SessionRecording recording_;
    bool open_ = true;
};

// JSON documents of the three files. Stable key order and shortest
// round-trip float text make emission a fixed point of parse.
std::string emit_gaze_json(const SessionRecording& rec);
std::string emit_lesion_json(const SessionRecording& rec);
std::string emit_key_json(const SessionRecording& rec);

void emit_session(const SessionRecording& rec, const std::filesystem::path& out_dir);

SessionRecording parse_session_documents(const std::string& gaze_json,
                                         const std::string& lesion_json,
                                         const std::string& key_json);
// Throws IoError for a missing file and IntegrityError for desynced lists.
SessionRecording parse_session(const std::filesystem::path& dir);

// One tracker_sample record as it appears in the gaze file.
nlohmann::json tracker_sample_to_json(const GazeSample& g);
GazeSample tracker_sample_from_json(const nlohmann::json& j);

// Mean of the valid eyes' display-area points mapped into the 512-px image
// space of the annotation window. Empty when no eye is valid or the point is
// outside the window.
std::optional<Point2> map_gaze_to_image(const GazeSample& gaze, const DisplaySample& display);

// Monitor-pixel position of a gaze sample (mean of valid eyes).
std::optional<Point2> gaze_monitor_point(const GazeSample& gaze, const DisplaySample& display);

// Mean of the valid eyes' gaze origins in the user coordinate system (mm).
std::optional<std::array<double, 3>> gaze_origin(const GazeSample& gaze);

// Inverse of the window transform: image point -> monitor pixels.
Point2 image_to_monitor(const Point2& image_point, const DisplaySample& display);

// Display-pixel conversion of canonical boxes ("xywh" in the annotation
// window's pixel size).
Bbox box_to_display(const Bbox& b, const DisplaySample& display);
Bbox box_from_display(const Bbox& b, const DisplaySample& display);

}  // namespace gazepet
