#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gazepet/bbox.hpp"
#include "gazepet/components.hpp"
#include "gazepet/display_sample.hpp"
#include "gazepet/volume.hpp"

namespace gazepet {

enum class Certainty { Certain, Uncertain };
enum class BoxStatus { Validated, Extrapolated };
enum class Mode { Browsing, Confirmation };
enum class ResizeDirection { Grow, Shrink };
enum class RejectScope { CurrentSlice, AllAdjacent };

std::string_view to_string(Certainty c);
std::string_view to_string(BoxStatus s);
Certainty certainty_from_string(std::string_view s);
BoxStatus box_status_from_string(std::string_view s);

// The rules the source platform left open, in one place so alternatives can
// be swapped in and tested.
struct ProposalPolicy {
    double filter_iou = 0.5;       // a component is "already handled" above this IoU
    double resize_factor = 0.9;    // grow: t *= f, shrink: t /= f
    double min_threshold = 0.1;    // lower clamp for the SUV threshold
    int max_propagation = 200;     // slices per direction
};

struct CandidateBox {
    Bbox box;
    int slice_number = 0;
    double suv_threshold = 0.0;
    int component_pixel_count = 0;
    Point2 centroid;  // mean pixel position of the generating component

    friend bool operator==(const CandidateBox&, const CandidateBox&) = default;
};

struct SliceBox {
    Bbox box;
    BoxStatus status = BoxStatus::Extrapolated;
    double threshold = 0.0;
    friend bool operator==(const SliceBox&, const SliceBox&) = default;
};

// What the reader was doing when a selection key fired.
struct SelectionContext {
    Point2 gaze;                      // last valid gaze, 512-px image space
    std::int64_t time_stamp = 0;      // system_time_stamp of the key
    DisplaySample display;
    friend bool operator==(const SelectionContext&, const SelectionContext&) = default;
};

struct LesionAnnotation {
    int lesion_id = 0;
    Certainty certainty = Certainty::Certain;
    int root_slice = 0;
    double suv_threshold = 0.0;
    std::map<int, SliceBox> slice_boxes;
    SelectionContext selection;
    std::int64_t accept_time_stamp = 0;

    nlohmann::json extras = nlohmann::json::object();

    const SliceBox& root_box() const { return slice_boxes.at(root_slice); }
    friend bool operator==(const LesionAnnotation&, const LesionAnnotation&) = default;
};

struct RejectedBox {
    int slice_number = 0;
    Bbox box;
    double threshold = 0.0;
    Certainty certainty = Certainty::Certain;
    int root_slice = 0;  // slice the selection happened on
    SelectionContext selection;
    std::int64_t reject_time_stamp = 0;

    nlohmann::json extras = nlohmann::json::object();

    friend bool operator==(const RejectedBox&, const RejectedBox&) = default;
};

struct PendingCandidate {
    CandidateBox candidate;
    Certainty certainty = Certainty::Certain;
    SelectionContext selection;
    friend bool operator==(const PendingCandidate&, const PendingCandidate&) = default;
};

struct AnnotationState {
    std::vector<LesionAnnotation> accepted;
    std::vector<RejectedBox> rejected_boxes;
    std::optional<PendingCandidate> pending;
    Mode mode = Mode::Browsing;
    int next_lesion_id = 1;

    friend bool operator==(const AnnotationState&, const AnnotationState&) = default;
};

// Throws StateError describing the first violated invariant.
void check_invariants(const AnnotationState& state);

// Component nearest to the gaze point: distance zero inside the box, else to
// the nearest edge; ties -> smaller area -> list order. Returns an index into
// `candidates` or nullopt when empty.
std::optional<std::size_t> nearest_component(const std::vector<Component>& candidates,
                                             const Point2& gaze);

// Grows per slice from the root box in both z directions at the root
// threshold. On each slice the component with the highest IoU (> 0) against
// the previous slice's box continues the chain; the first slice without one
// ends that direction. `stop` may veto a slice (its box ends the chain).
using PropagationVeto = std::function<bool(int slice, const Bbox& box)>;
std::map<int, SliceBox> propagate(const CandidateBox& root, const ScalarVolume& pet,
                                  const ProposalPolicy& policy = {},
                                  const PropagationVeto& stop = nullptr);

struct ResizeResult {
    CandidateBox candidate;
    bool at_limit = false;
};

struct CommandOutcome {
    bool applied = true;
    std::string warning;  // set when the command was a no-op

    static CommandOutcome noop(std::string why) { return {false, std::move(why)}; }
};

// The select / resize / accept / reject / undo state machine. All mutation
// goes through this class; one instance per study read.
class AnnotationEngine {
public:
    explicit AnnotationEngine(ProposalPolicy policy = {});

    const AnnotationState& state() const { return state_; }
    const ProposalPolicy& policy() const { return policy_; }

    // Requires browsing mode (StateError otherwise). Throws NoCandidateError
    // when every component on the slice was filtered or none exists.
    const CandidateBox& propose(const ScalarVolume& pet, int slice_number, double threshold,
                                Certainty certainty, const SelectionContext& context);

    ResizeResult resize(const ScalarVolume& pet, ResizeDirection direction);

    const LesionAnnotation& accept(const ScalarVolume& pet, std::int64_t time_stamp);

    // In confirmation mode rejects the pending candidate (and with AllAdjacent
    // its propagated boxes). Outside confirmation AllAdjacent targets the
    // accepted lesion nearest to `gaze` on `slice_number` and turns all of its
    // boxes into rejections; CurrentSlice is then a warning no-op.
    CommandOutcome reject(const ScalarVolume& pet, RejectScope scope, int slice_number,
                          const Point2& gaze, std::int64_t time_stamp);

    CommandOutcome undo(int slice_number, const Point2& gaze);

    CommandOutcome clear_rejections(int slice_number);

    // For replay / restore.
    void restore(AnnotationState state) { state_ = std::move(state); }

private:
    bool is_filtered(int slice_number, const Bbox& box) const;
    std::optional<std::size_t> lesion_nearest(int slice_number, const Point2& gaze) const;

    ProposalPolicy policy_;
    AnnotationState state_;
};

}  // namespace gazepet
