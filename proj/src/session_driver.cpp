#include "gazepet/session_driver.hpp"

#include <sstream>

#include "gazepet/error.hpp"
#include "gazepet/mip.hpp"

namespace gazepet {

DisplaySample ViewState::sample() const {
    DisplaySample d;
    d.slice_number = modality == ViewModality::MIP ? mip_angle : slice_number;
    d.modality = modality;
    d.norm_min = norm_min;
    d.norm_max = norm_max;
    d.window_x = window_x;
    d.window_y = window_y;
    d.window_width = window_width;
    d.window_height = window_height;
    d.monitor_width = monitor_width;
    d.monitor_height = monitor_height;
    d.ct_window = ct_window;
    return d;
}

SessionDriver::SessionDriver(const ScalarVolume& pet, SessionHeader header, ViewState view,
                             DriverOptions options)
    : pet_(&pet),
      options_(std::move(options)),
      engine_(options_.policy),
      recorder_(std::move(header)),
      view_(view),
      user_paused_(options_.start_paused) {
    clamp_view();
    view_.sample().validate();
}

void SessionDriver::clamp_view() {
    view_.slice_number = std::clamp(view_.slice_number, 0, pet_->dims().nz - 1);
    view_.mip_angle = ((view_.mip_angle % kMipAngles) + kMipAngles) % kMipAngles;
}

void SessionDriver::set_view(const ViewState& view) {
    ViewState next = view;
    next.slice_number = std::clamp(next.slice_number, 0, pet_->dims().nz - 1);
    next.sample().validate();
    view_ = next;
    clamp_view();
}

bool SessionDriver::paused_now() const {
    return user_paused_ || engine_.state().mode == Mode::Confirmation;
}

void SessionDriver::ingest(const GazeSample& gaze) { ingest(gaze, view_.sample()); }

void SessionDriver::ingest(const GazeSample& gaze, const DisplaySample& display) {
    recorder_.ingest_tick(gaze, display, paused_now());
    last_display_ = display;
    if (is_axial(display.modality)) {
        if (const auto p = map_gaze_to_image(gaze, display)) last_gaze_ = *p;
    }
}

KeyOutcome SessionDriver::press(const KeyEvent& key, bool record) {
    if (record) recorder_.record_key(key);
    const auto binding = options_.keys.lookup(key.key_code);
    if (!binding) {
        KeyOutcome out;
        out.warning = "unmapped key code " + std::to_string(key.key_code);
        return out;
    }
    KeyOutcome out = apply(*binding, key);
    out.binding = binding;
    return out;
}

KeyOutcome SessionDriver::apply(const KeyBinding& b, const KeyEvent& key) {
    KeyOutcome out;
    const auto warn = [&](std::string why) {
        out.applied = false;
        out.warning = std::move(why);
        return out;
    };
    const auto view_done = [&]() {
        out.applied = true;
        out.view_changed = true;
        return out;
    };
    const auto annotation_done = [&](const CommandOutcome& c) {
        out.applied = c.applied;
        out.warning = c.warning;
        out.annotation_changed = c.applied;
        return out;
    };

    switch (b.action) {
        case KeyAction::TogglePause:
            user_paused_ = !user_paused_;
            return view_done();
        case KeyAction::Quit:
            quit_ = true;
            out.applied = true;
            return out;
        case KeyAction::SaveYes:
            save_state_ = SaveState::YesPending;
            out.applied = true;
            return out;
        case KeyAction::SaveNo:
            save_state_ = SaveState::NoPending;
            out.applied = true;
            return out;
        case KeyAction::Enter:
            if (save_state_ == SaveState::YesPending) {
                save_state_ = SaveState::Saved;
            } else if (save_state_ == SaveState::NoPending) {
                save_state_ = SaveState::Discarded;
            } else {
                return warn("Enter without a preceding y/n");
            }
            out.applied = true;
            return out;
        case KeyAction::ShowPet: view_.modality = ViewModality::PET; return view_done();
        case KeyAction::ShowCt: view_.modality = ViewModality::CT; return view_done();
        case KeyAction::ShowFused: view_.modality = ViewModality::Fused; return view_done();
        case KeyAction::ShowMip: view_.modality = ViewModality::MIP; return view_done();
        case KeyAction::LiverContrast:
            view_.norm_min = 0.0;
            view_.norm_max = options_.liver_max;
            return view_done();
        case KeyAction::BrainContrast:
            view_.norm_min = 0.0;
            view_.norm_max = options_.brain_max;
            return view_done();
        case KeyAction::ContrastUp: {
            const double next = view_.norm_max * options_.contrast_factor;
            if (!(next > view_.norm_min)) return warn("PET window is at its narrowest");
            view_.norm_max = next;
            return view_done();
        }
        case KeyAction::ContrastDown:
            view_.norm_max /= options_.contrast_factor;
            return view_done();
        case KeyAction::NextSlice:
        case KeyAction::PrevSlice: {
            const int step = b.action == KeyAction::NextSlice ? 1 : -1;
            if (view_.modality == ViewModality::MIP) {
                view_.mip_angle = (view_.mip_angle + step + kMipAngles) % kMipAngles;
                return view_done();
            }
            const int next = view_.slice_number + step;
            if (next < 0 || next >= pet_->dims().nz) return warn("already at the last slice");
            view_.slice_number = next;
            return view_done();
        }
        case KeyAction::ToggleOverlay:
            view_.overlay_visible = !view_.overlay_visible;
            return view_done();
        case KeyAction::CtPreset:
            view_.ct_window = b.preset;
            return view_done();
        default:
            break;
    }

    // Annotation commands work on what the reader saw at the last tick.
    const bool pending = engine_.state().pending.has_value();
    const bool needs_context = b.action == KeyAction::SelectCertain ||
                               b.action == KeyAction::SelectUncertain ||
                               b.action == KeyAction::Undo ||
                               b.action == KeyAction::ClearRejections ||
                               (b.action == KeyAction::RejectAll && !pending);
    if (needs_context) {
        if (!last_display_) return warn("no gaze tick received yet");
        if (!is_axial(last_display_->modality)) return warn("not available in MIP view");
        if (last_display_->slice_number < 0 || last_display_->slice_number >= pet_->dims().nz) {
            return warn("slice out of range");
        }
    }
    const bool needs_gaze = needs_context && b.action != KeyAction::ClearRejections;
    if (needs_gaze && !last_gaze_) return warn("no valid gaze on the image yet");

    try {
        switch (b.action) {
            case KeyAction::SelectCertain:
            case KeyAction::SelectUncertain: {
                if (pending) return warn("a candidate is already waiting for accept/reject");
                const Certainty c = b.action == KeyAction::SelectCertain ? Certainty::Certain
                                                                          : Certainty::Uncertain;
                engine_.propose(*pet_, last_display_->slice_number, last_display_->norm_max, c,
                                SelectionContext{*last_gaze_, key.system_time_stamp,
                                                 *last_display_});
                return annotation_done({});
            }
            case KeyAction::Accept:
                if (!pending) return warn("nothing to accept");
                engine_.accept(*pet_, key.system_time_stamp);
                return annotation_done({});
            case KeyAction::Reject:
            case KeyAction::RejectAll: {
                const RejectScope scope = b.action == KeyAction::Reject ? RejectScope::CurrentSlice
                                                                        : RejectScope::AllAdjacent;
                const int z = last_display_ ? last_display_->slice_number : 0;
                const Point2 g = last_gaze_.value_or(Point2{});
                return annotation_done(
                    engine_.reject(*pet_, scope, z, g, key.system_time_stamp));
            }
            case KeyAction::Grow:
            case KeyAction::Shrink: {
                if (!pending) return warn("nothing to resize");
                const auto r = engine_.resize(*pet_, b.action == KeyAction::Grow
                                                         ? ResizeDirection::Grow
                                                         : ResizeDirection::Shrink);
                if (r.at_limit) return warn("candidate size is at its limit");
                return annotation_done({});
            }
            case KeyAction::Undo:
                if (pending) return warn("accept or reject the pending candidate first");
                return annotation_done(engine_.undo(last_display_->slice_number, *last_gaze_));
            case KeyAction::ClearRejections:
                return annotation_done(engine_.clear_rejections(last_display_->slice_number));
            default:
                break;
        }
    } catch (const NoCandidateError& e) {
        return warn(e.what());
    }
    return warn("unhandled key action");
}

SessionRecording SessionDriver::snapshot() const {
    SessionRecording rec = recorder_.recording();
    rec.lesions = engine_.state().accepted;
    rec.rejected = engine_.state().rejected_boxes;
    return rec;
}

SessionRecording SessionDriver::finish() {
    recorder_.close();
    return snapshot();
}

namespace {

template <typename T>
std::string show(const T& v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string describe_lesion_diff(const LesionAnnotation& e, const LesionAnnotation& a) {
    const std::string who = "lesion " + std::to_string(e.lesion_id);
    if (e.lesion_id != a.lesion_id) {
        return who + ": replay produced id " + std::to_string(a.lesion_id);
    }
    if (e.certainty != a.certainty) return who + ": certainty differs";
    if (e.root_slice != a.root_slice) {
        return who + ": root slice " + std::to_string(e.root_slice) + " vs " +
               std::to_string(a.root_slice);
    }
    if (e.suv_threshold != a.suv_threshold) {
        return who + ": threshold " + show(e.suv_threshold) + " vs " + show(a.suv_threshold);
    }
    for (const auto& [z, sb] : e.slice_boxes) {
        const auto it = a.slice_boxes.find(z);
        if (it == a.slice_boxes.end()) return who + ", slice " + std::to_string(z) + ": missing";
        if (!(it->second == sb)) {
            return who + ", slice " + std::to_string(z) + ": box " + show(sb.box) + " vs " +
                   show(it->second.box);
        }
    }
    for (const auto& [z, sb] : a.slice_boxes) {
        if (!e.slice_boxes.count(z)) {
            return who + ", slice " + std::to_string(z) + ": unexpected box " + show(sb.box);
        }
    }
    if (!(e.selection == a.selection)) return who + ": selection context differs";
    if (e.accept_time_stamp != a.accept_time_stamp) return who + ": accept time differs";
    return {};
}

}  // namespace

std::string first_lesion_difference(const std::vector<LesionAnnotation>& expected,
                                    const std::vector<LesionAnnotation>& actual) {
    const std::size_t n = std::min(expected.size(), actual.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (auto d = describe_lesion_diff(expected[i], actual[i]); !d.empty()) return d;
    }
    if (expected.size() > n) {
        return "lesion " + std::to_string(expected[n].lesion_id) + ": missing from replay";
    }
    if (actual.size() > n) {
        return "lesion " + std::to_string(actual[n].lesion_id) + ": not in the recording";
    }
    return {};
}

std::string first_rejection_difference(const std::vector<RejectedBox>& expected,
                                       const std::vector<RejectedBox>& actual) {
    const std::size_t n = std::min(expected.size(), actual.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto& e = expected[i];
        const auto& a = actual[i];
        if (e.slice_number != a.slice_number || !(e.box == a.box) ||
            e.threshold != a.threshold || e.certainty != a.certainty ||
            e.root_slice != a.root_slice || !(e.selection == a.selection) ||
            e.reject_time_stamp != a.reject_time_stamp) {
            return "rejection " + std::to_string(i) + " (slice " +
                   std::to_string(e.slice_number) + ", box " + show(e.box) + ") differs";
        }
    }
    if (expected.size() != actual.size()) {
        return "rejection count " + std::to_string(expected.size()) + " vs " +
               std::to_string(actual.size());
    }
    return {};
}

namespace {

AnnotationState walk(const SessionRecording& rec, const ScalarVolume& pet,
                     const DriverOptions& options, bool check_pauses) {
    rec.check_integrity();
    SessionDriver driver(pet, rec.header, ViewState{}, options);
    std::size_t k = 0;
    for (std::size_t i = 0; i < rec.tobii_cam.size(); ++i) {
        const auto& tick = rec.tobii_cam[i];
        while (k < rec.key_events.size() &&
               rec.key_events[k].system_time_stamp < tick.system_time_stamp) {
            driver.press(rec.key_events[k++], false);
        }
        driver.ingest(tick, rec.common_cam[i]);
        if (check_pauses && driver.recorder().recording().pauses.back() != rec.pauses[i]) {
            throw ReplayMismatchError("pause flag differs at tick " + std::to_string(i) +
                                      " (t=" + std::to_string(tick.system_time_stamp) + ")");
        }
    }
    while (k < rec.key_events.size()) driver.press(rec.key_events[k++], false);
    return driver.engine().state();
}

}  // namespace

AnnotationState replay_unchecked(const SessionRecording& rec, const ScalarVolume& pet,
                                 const DriverOptions& options) {
    return walk(rec, pet, options, false);
}

AnnotationState replay(const SessionRecording& rec, const ScalarVolume& pet,
                       const ReplayOptions& options) {
    AnnotationState state = walk(rec, pet, options.driver, options.check_pauses);
    if (auto d = first_lesion_difference(rec.lesions, state.accepted); !d.empty()) {
        throw ReplayMismatchError(d);
    }
    if (auto d = first_rejection_difference(rec.rejected, state.rejected_boxes); !d.empty()) {
        throw ReplayMismatchError(d);
    }
    return state;
}

}  // namespace gazepet
