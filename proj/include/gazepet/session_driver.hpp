#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "gazepet/key_codes.hpp"
#include "gazepet/proposal.hpp"
#include "gazepet/session.hpp"
#include "gazepet/volume.hpp"

namespace gazepet {

// What the reader currently sees. The server owns this; every tick records
// a snapshot of it as a DisplaySample.
struct ViewState {
    int slice_number = 0;  // axial index, kept while in MIP mode
    int mip_angle = 0;     // 0..11
    ViewModality modality = ViewModality::PET;
    double norm_min = 0.0;  // PET SUV window
    double norm_max = 6.0;
    int ct_window = 2;      // CT preset 1..9
    int window_x = 580;
    int window_y = 20;
    int window_width = 1400;
    int window_height = 1400;
    int monitor_width = 2560;
    int monitor_height = 1440;
    bool overlay_visible = true;

    // slice_number carries the MIP angle index in MIP mode.
    DisplaySample sample() const;
    friend bool operator==(const ViewState&, const ViewState&) = default;
};

struct DriverOptions {
    ProposalPolicy policy;
    KeyTable keys = KeyTable::defaults();
    double contrast_factor = 0.9;  // '+' multiplies norm_max, '-' divides
    double liver_max = 6.0;
    double brain_max = 25.0;
    bool start_paused = false;
};

enum class SaveState { None, YesPending, NoPending, Saved, Discarded };

struct KeyOutcome {
    std::optional<KeyBinding> binding;  // empty for unmapped codes
    bool applied = false;
    std::string warning;
    bool annotation_changed = false;
    bool view_changed = false;
};

// The command context of one study read: owns the annotation engine, the
// view and the recorder. Live sessions and replays both go through it, so
// both see the same key semantics.
class SessionDriver {
public:
    SessionDriver(const ScalarVolume& pet, SessionHeader header, ViewState view = {},
                  DriverOptions options = {});

    // Records the tick with the current view (live).
    void ingest(const GazeSample& gaze);
    // Records the tick with a given display snapshot (replay).
    void ingest(const GazeSample& gaze, const DisplaySample& display);

    // Applies a key against the display of the last ingested tick and the
    // last valid axial gaze. Records the key when `record` is set.
    KeyOutcome press(const KeyEvent& key, bool record = true);

    // view.set from the UI (scroll, mouse contrast, window placement).
    void set_view(const ViewState& view);

    bool paused_now() const;
    bool user_paused() const { return user_paused_; }
    SaveState save_state() const { return save_state_; }
    bool quit_requested() const { return quit_; }

    const ViewState& view() const { return view_; }
    const AnnotationEngine& engine() const { return engine_; }
    const SessionRecorder& recorder() const { return recorder_; }
    const std::optional<Point2>& last_gaze() const { return last_gaze_; }
    const ScalarVolume& pet() const { return *pet_; }

    // Snapshot with lesions/rejections copied from the engine.
    SessionRecording snapshot() const;
    // Closes the recorder and returns the finished recording.
    SessionRecording finish();

private:
    KeyOutcome apply(const KeyBinding& b, const KeyEvent& key);
    void clamp_view();

    const ScalarVolume* pet_;
    DriverOptions options_;
    AnnotationEngine engine_;
    SessionRecorder recorder_;
    ViewState view_;
    std::optional<DisplaySample> last_display_;
    std::optional<Point2> last_gaze_;
    bool user_paused_ = false;
    bool quit_ = false;
    SaveState save_state_ = SaveState::None;
};

struct ReplayOptions {
    DriverOptions driver;
    bool check_pauses = true;
};

// Feeds the recording's ticks and keys through a fresh driver in timestamp
// order: keys stamped before a tick are applied before it, the rest after
// the last tick. Throws ReplayMismatchError naming the first difference
// against the recorded lesions, rejections or pause flags.
AnnotationState replay(const SessionRecording& rec, const ScalarVolume& pet,
                       const ReplayOptions& options = {});

// Same walk without verification.
AnnotationState replay_unchecked(const SessionRecording& rec, const ScalarVolume& pet,
                                 const DriverOptions& options = {});

// Describes the first difference between two lesion lists, or empty.
std::string first_lesion_difference(const std::vector<LesionAnnotation>& expected,
                                    const std::vector<LesionAnnotation>& actual);
std::string first_rejection_difference(const std::vector<RejectedBox>& expected,
                                       const std::vector<RejectedBox>& actual);

}  // namespace gazepet
