#include "gazepet/proposal.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "gazepet/error.hpp"

namespace gazepet {

std::string_view to_string(Certainty c) {
    return c == Certainty::Certain ? "certain" : "uncertain";
}

std::string_view to_string(BoxStatus s) {
    return s == BoxStatus::Validated ? "validated" : "extrapolated";
}

Certainty certainty_from_string(std::string_view s) {
    if (s == "certain") return Certainty::Certain;
    if (s == "uncertain") return Certainty::Uncertain;
    throw FormatError("unknown certainty '" + std::string(s) + "'");
}

BoxStatus box_status_from_string(std::string_view s) {
    if (s == "validated") return BoxStatus::Validated;
    if (s == "extrapolated") return BoxStatus::Extrapolated;
    throw FormatError("unknown box status '" + std::string(s) + "'");
}

void check_invariants(const AnnotationState& state) {
    if (state.pending.has_value() != (state.mode == Mode::Confirmation)) {
        throw StateError("pending candidate and confirmation mode disagree");
    }
    std::set<int> ids;
    for (const auto& lesion : state.accepted) {
        if (!ids.insert(lesion.lesion_id).second) {
            throw StateError("duplicate lesion id " + std::to_string(lesion.lesion_id));
        }
        const auto root = lesion.slice_boxes.find(lesion.root_slice);
        if (root == lesion.slice_boxes.end() || root->second.status != BoxStatus::Validated) {
            throw StateError("lesion " + std::to_string(lesion.lesion_id) +
                             " has no validated root slice");
        }
        int expected = lesion.slice_boxes.begin()->first;
        for (const auto& [z, box] : lesion.slice_boxes) {
            if (z != expected++) {
                throw StateError("lesion " + std::to_string(lesion.lesion_id) +
                                 " slices are not contiguous");
            }
        }
        for (const auto& r : state.rejected_boxes) {
            const auto it = lesion.slice_boxes.find(r.slice_number);
            if (it != lesion.slice_boxes.end() && it->second.box == r.box) {
                throw StateError("box on slice " + std::to_string(r.slice_number) +
                                 " is both accepted and rejected");
            }
        }
    }
    if (state.next_lesion_id <= (ids.empty() ? 0 : *ids.rbegin())) {
        throw StateError("next lesion id would collide");
    }
}

std::optional<std::size_t> nearest_component(const std::vector<Component>& candidates,
                                             const Point2& gaze) {
    std::optional<std::size_t> best;
    double best_dist = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double d = point_box_distance(gaze, candidates[i].box);
        if (!best || d < best_dist ||
            (d == best_dist && candidates[i].box.area() < candidates[*best].box.area())) {
            best = i;
            best_dist = d;
        }
    }
    return best;
}

namespace {

Point2 component_centroid(const ComponentLabeling& labeling, const Component& c) {
    double sx = 0, sy = 0;
    for (int y = c.box.y; y < c.box.y_end(); ++y) {
        for (int x = c.box.x; x < c.box.x_end(); ++x) {
            if (labeling.at(x, y) == c.label) {
                sx += x;
                sy += y;
            }
        }
    }
    return {sx / c.pixel_count, sy / c.pixel_count};
}

CandidateBox make_candidate(const ComponentLabeling& labeling, const Component& c, int slice,
                            double threshold) {
    return CandidateBox{c.box, slice, threshold, c.pixel_count, component_centroid(labeling, c)};
}

}  // namespace

std::map<int, SliceBox> propagate(const CandidateBox& root, const ScalarVolume& pet,
                                  const ProposalPolicy& policy, const PropagationVeto& stop) {
    std::map<int, SliceBox> out;
    for (const int dir : {+1, -1}) {
        Bbox prev = root.box;
        for (int step = 1; step <= policy.max_propagation; ++step) {
            const int z = root.slice_number + dir * step;
            if (z < 0 || z >= pet.dims().nz) break;
            const auto comps = threshold_components(pet.slice(z), root.suv_threshold);
            const Component* best = nullptr;
            double best_iou = 0.0;
            for (const auto& c : comps) {
                const double v = iou(c.box, prev);
                if (v > best_iou) {
                    best_iou = v;
                    best = &c;
                }
            }
            if (!best) break;
            if (stop && stop(z, best->box)) break;
            out[z] = SliceBox{best->box, BoxStatus::Extrapolated, root.suv_threshold};
            prev = best->box;
        }
    }
    return out;
}

AnnotationEngine::AnnotationEngine(ProposalPolicy policy) : policy_(policy) {}

bool AnnotationEngine::is_filtered(int slice_number, const Bbox& box) const {
    for (const auto& lesion : state_.accepted) {
        const auto it = lesion.slice_boxes.find(slice_number);
        if (it != lesion.slice_boxes.end() && iou(it->second.box, box) > policy_.filter_iou) {
            return true;
        }
    }
    for (const auto& r : state_.rejected_boxes) {
        if (r.slice_number == slice_number && iou(r.box, box) > policy_.filter_iou) return true;
    }
    return false;
}

std::optional<std::size_t> AnnotationEngine::lesion_nearest(int slice_number,
                                                            const Point2& gaze) const {
    std::optional<std::size_t> best;
    double best_dist = 0.0;
    std::int64_t best_area = 0;
    for (std::size_t i = 0; i < state_.accepted.size(); ++i) {
        const auto& boxes = state_.accepted[i].slice_boxes;
        const auto it = boxes.find(slice_number);
        if (it == boxes.end()) continue;
        const double d = point_box_distance(gaze, it->second.box);
        const auto area = it->second.box.area();
        if (!best || d < best_dist || (d == best_dist && area < best_area)) {
            best = i;
            best_dist = d;
            best_area = area;
        }
    }
    return best;
}

const CandidateBox& AnnotationEngine::propose(const ScalarVolume& pet, int slice_number,
                                              double threshold, Certainty certainty,
                                              const SelectionContext& context) {
    if (state_.mode != Mode::Browsing) {
        throw StateError("a candidate is already waiting for accept/reject");
    }
    const auto labeling = label_components(pet.slice(slice_number), threshold);
    std::vector<Component> survivors;
    for (const auto& c : labeling.components) {
        if (!is_filtered(slice_number, c.box)) survivors.push_back(c);
    }
    const auto pick = nearest_component(survivors, context.gaze);
    if (!pick) {
        throw NoCandidateError("no candidate lesion on slice " + std::to_string(slice_number) +
                               " at SUV threshold " + std::to_string(threshold) +
                               "; try increasing PET contrast");
    }
    state_.pending = PendingCandidate{
        make_candidate(labeling, survivors[*pick], slice_number, threshold), certainty, context};
    state_.mode = Mode::Confirmation;
    return state_.pending->candidate;
}

ResizeResult AnnotationEngine::resize(const ScalarVolume& pet, ResizeDirection direction) {
    if (!state_.pending) throw StateError("resize needs a pending candidate");
    const CandidateBox current = state_.pending->candidate;
    const SliceView slice = pet.slice(current.slice_number);
    const double slice_max = *std::max_element(slice.values.begin(), slice.values.end());

    double t = direction == ResizeDirection::Grow ? current.suv_threshold * policy_.resize_factor
                                                  : current.suv_threshold / policy_.resize_factor;
    t = std::min(std::max(t, policy_.min_threshold), slice_max);
    if (t == current.suv_threshold || !(t > 0)) return {current, true};

    const auto labeling = label_components(slice, t);
    const int ax = std::clamp(static_cast<int>(std::floor(current.centroid.x + 0.5)), 0,
                              slice.width - 1);
    const int ay = std::clamp(static_cast<int>(std::floor(current.centroid.y + 0.5)), 0,
                              slice.height - 1);
    const Component* chosen = nullptr;
    if (const int l = labeling.at(ax, ay); l > 0) {
        chosen = &labeling.components[static_cast<std::size_t>(l - 1)];
    } else {
        std::vector<Component> touching;
        for (const auto& c : labeling.components) {
            if (intersection_area(c.box, current.box) > 0) touching.push_back(c);
        }
        if (const auto pick = nearest_component(touching, current.centroid)) {
            chosen = &labeling.components[static_cast<std::size_t>(touching[*pick].label - 1)];
        }
    }
    if (!chosen) return {current, true};

    state_.pending->candidate = make_candidate(labeling, *chosen, current.slice_number, t);
    return {state_.pending->candidate, false};
}

const LesionAnnotation& AnnotationEngine::accept(const ScalarVolume& pet,
                                                 std::int64_t time_stamp) {
    if (!state_.pending) throw StateError("accept needs a pending candidate");
    const PendingCandidate p = *state_.pending;

    LesionAnnotation lesion;
    lesion.lesion_id = state_.next_lesion_id++;
    lesion.certainty = p.certainty;
    lesion.root_slice = p.candidate.slice_number;
    lesion.suv_threshold = p.candidate.suv_threshold;
    lesion.selection = p.selection;
    lesion.accept_time_stamp = time_stamp;
    lesion.slice_boxes = propagate(p.candidate, pet, policy_, [this](int z, const Bbox& b) {
        return is_filtered(z, b);
    });
    lesion.slice_boxes[lesion.root_slice] =
        SliceBox{p.candidate.box, BoxStatus::Validated, p.candidate.suv_threshold};

    state_.accepted.push_back(std::move(lesion));
    state_.pending.reset();
    state_.mode = Mode::Browsing;
    return state_.accepted.back();
}

CommandOutcome AnnotationEngine::reject(const ScalarVolume& pet, RejectScope scope,
                                        int slice_number, const Point2& gaze,
                                        std::int64_t time_stamp) {
    const auto accepted_equal = [this](int z, const Bbox& b) {
        for (const auto& lesion : state_.accepted) {
            const auto it = lesion.slice_boxes.find(z);
            if (it != lesion.slice_boxes.end() && it->second.box == b) return true;
        }
        return false;
    };

    if (state_.pending) {
        const PendingCandidate p = *state_.pending;
        std::map<int, Bbox> boxes{{p.candidate.slice_number, p.candidate.box}};
        if (scope == RejectScope::AllAdjacent) {
            for (const auto& [z, sb] : propagate(p.candidate, pet, policy_)) boxes[z] = sb.box;
        }
        for (const auto& [z, b] : boxes) {
            if (accepted_equal(z, b)) continue;
            state_.rejected_boxes.push_back(RejectedBox{z, b, p.candidate.suv_threshold,
                                                        p.certainty, p.candidate.slice_number,
                                                        p.selection, time_stamp});
        }
        state_.pending.reset();
        state_.mode = Mode::Browsing;
        return {};
    }

    if (scope == RejectScope::CurrentSlice) {
        return CommandOutcome::noop("nothing pending to reject");
    }
    const auto target = lesion_nearest(slice_number, gaze);
    if (!target) {
        return CommandOutcome::noop("no accepted lesion on slice " + std::to_string(slice_number));
    }
    const LesionAnnotation lesion = state_.accepted[*target];
    state_.accepted.erase(state_.accepted.begin() + static_cast<long>(*target));
    for (const auto& [z, sb] : lesion.slice_boxes) {
        state_.rejected_boxes.push_back(RejectedBox{z, sb.box, sb.threshold, lesion.certainty,
                                                    lesion.root_slice, lesion.selection,
                                                    time_stamp});
    }
    return {};
}

CommandOutcome AnnotationEngine::undo(int slice_number, const Point2& gaze) {
    const auto target = lesion_nearest(slice_number, gaze);
    if (!target) {
        return CommandOutcome::noop("no accepted lesion on slice " + std::to_string(slice_number));
    }
    state_.accepted.erase(state_.accepted.begin() + static_cast<long>(*target));
    return {};
}

CommandOutcome AnnotationEngine::clear_rejections(int slice_number) {
    const auto before = state_.rejected_boxes.size();
    std::erase_if(state_.rejected_boxes,
                  [slice_number](const RejectedBox& r) { return r.slice_number == slice_number; });
    if (state_.rejected_boxes.size() == before) {
        return CommandOutcome::noop("no rejected boxes on slice " + std::to_string(slice_number));
    }
    return {};
}

}  // namespace gazepet
