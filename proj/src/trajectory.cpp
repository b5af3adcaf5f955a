#include "gazepet/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "gazepet/components.hpp"

namespace gazepet {

std::string_view to_string(WindowKind k) {
    return k == WindowKind::Selection16 ? "selection16" : "intent1to2s";
}

std::string_view to_string(WindowLabel l) {
    switch (l) {
        case WindowLabel::Intentional: return "intentional";
        case WindowLabel::Unintentional: return "unintentional";
        case WindowLabel::Accepted: return "accepted";
        case WindowLabel::Rejected: return "rejected";
    }
    return "accepted";
}

namespace {

std::optional<TrajectorySample> sample_at(const SessionRecording& rec, std::size_t i) {
    const DisplaySample& d = rec.common_cam[i];
    if (!is_axial(d.modality)) return std::nullopt;
    const auto p = map_gaze_to_image(rec.tobii_cam[i], d);
    if (!p) return std::nullopt;
    return TrajectorySample{rec.tobii_cam[i].system_time_stamp, *p, d.slice_number, d.modality, i};
}

// Index of the last tick stamped strictly before t, if any.
std::optional<std::size_t> last_tick_before(const SessionRecording& rec, std::int64_t t) {
    const auto it = std::lower_bound(
        rec.tobii_cam.begin(), rec.tobii_cam.end(), t,
        [](const GazeSample& g, std::int64_t v) { return g.system_time_stamp < v; });
    if (it == rec.tobii_cam.begin()) return std::nullopt;
    return static_cast<std::size_t>(it - rec.tobii_cam.begin()) - 1;
}

void add_selection_window(const SessionRecording& rec, const WindowOptions& opt, WindowSet& out,
                          int id, WindowLabel label, std::int64_t select_ts, int slice,
                          const Bbox& box) {
    TrajectoryWindow w;
    w.lesion_id = id;
    w.kind = WindowKind::Selection16;
    w.label = label;
    w.slice_number = slice;
    w.target = box;
    if (const auto last = last_tick_before(rec, select_ts)) {
        for (std::size_t i = *last + 1; i-- > 0 && w.samples.size() < opt.selection_max;) {
            const auto s = sample_at(rec, i);
            if (s && s->slice_number == slice) w.samples.push_back(*s);
        }
    }
    if (w.samples.empty()) {
        ++out.tally.dropped_empty;
        return;
    }
    std::reverse(w.samples.begin(), w.samples.end());
    const Point2 c = box.center();
    double sum = 0;
    for (const auto& s : w.samples) sum += std::hypot(s.gaze.x - c.x, s.gaze.y - c.y);
    if (sum / static_cast<double>(w.samples.size()) > opt.max_mean_distance_px) {
        ++out.tally.dropped_far;
        return;
    }
    ++out.tally.produced;
    out.windows.push_back(std::move(w));
}

}  // namespace

std::vector<TrajectorySample> continuous_window(const SessionRecording& rec, std::size_t end,
                                                std::size_t max) {
    std::vector<TrajectorySample> out;
    int gap = 0;
    for (std::size_t i = end + 1; i-- > 0 && out.size() < max;) {
        if (const auto s = sample_at(rec, i)) {
            out.push_back(*s);
            gap = 0;
        } else if (++gap >= 2) {
            break;
        }
    }
    std::reverse(out.begin(), out.end());
    return out;
}

WindowSet extract_selection_windows(const SessionRecording& rec, const WindowOptions& opt) {
    rec.check_integrity();
    WindowSet out;
    for (const auto& l : rec.lesions) {
        add_selection_window(rec, opt, out, l.lesion_id, WindowLabel::Accepted,
                             l.selection.time_stamp, l.root_slice, l.root_box().box);
    }
    std::set<std::pair<std::int64_t, int>> seen;
    for (std::size_t i = 0; i < rec.rejected.size(); ++i) {
        const auto& r = rec.rejected[i];
        if (r.slice_number != r.root_slice) continue;
        if (!seen.insert({r.selection.time_stamp, r.root_slice}).second) continue;
        add_selection_window(rec, opt, out, static_cast<int>(i), WindowLabel::Rejected,
                             r.selection.time_stamp, r.root_slice, r.box);
    }
    return out;
}

std::vector<HotSpot> find_hot_spots(const ScalarVolume& pet,
                                    const std::vector<LesionAnnotation>& lesions,
                                    double suv_floor, int dilation) {
    std::vector<HotSpot> out;
    for (int z = 0; z < pet.dims().nz; ++z) {
        std::vector<Bbox> annotated;
        for (const auto& l : lesions) {
            if (const auto it = l.slice_boxes.find(z); it != l.slice_boxes.end()) {
                annotated.push_back(it->second.box);
            }
        }
        for (const auto& c : threshold_components(pet.slice(z), suv_floor)) {
            const Bbox grown = dilate(c.box, dilation);
            const bool touches = std::any_of(annotated.begin(), annotated.end(), [&](const Bbox& b) {
                return intersection_area(grown, b) > 0;
            });
            if (!touches) out.push_back(HotSpot{z, c.box});
        }
    }
    return out;
}

WindowSet extract_intent_windows(const SessionRecording& rec, const ScalarVolume& pet,
                                 const WindowOptions& opt) {
    rec.check_integrity();
    WindowSet out;
    for (const auto& l : rec.lesions) {
        const auto end = last_tick_before(rec, l.accept_time_stamp);
        if (!end) {
            ++out.tally.dropped_empty;
            continue;
        }
        TrajectoryWindow w;
        w.lesion_id = l.lesion_id;
        w.kind = WindowKind::Intent;
        w.label = WindowLabel::Intentional;
        w.slice_number = l.root_slice;
        w.target = l.root_box().box;
        w.samples = continuous_window(rec, *end, opt.intent_max);
        if (w.samples.size() < opt.intent_min) {
            ++out.tally.dropped_short;
            continue;
        }
        ++out.tally.produced;
        out.windows.push_back(std::move(w));
    }

    const std::size_t wanted = out.windows.size();
    const auto spots = find_hot_spots(pet, rec.lesions, opt.hot_spot_suv, opt.hot_spot_dilation);
    out.tally.hot_spots = spots.size();

    // Ticks whose gaze is near each spot on its slice.
    std::vector<std::pair<std::size_t, std::vector<std::size_t>>> reachable;
    for (std::size_t s = 0; s < spots.size(); ++s) {
        std::vector<std::size_t> ticks;
        for (std::size_t i = 0; i < rec.tobii_cam.size(); ++i) {
            const auto smp = sample_at(rec, i);
            if (smp && smp->slice_number == spots[s].slice_number &&
                point_box_distance(smp->gaze, spots[s].box) <= opt.hot_spot_gaze_radius_px) {
                ticks.push_back(i);
            }
        }
        if (!ticks.empty()) reachable.emplace_back(s, std::move(ticks));
    }

    std::mt19937_64 rng(opt.seed);
    std::set<std::size_t> used_ends;
    std::size_t made = 0;
    for (std::size_t attempt = 0; made < wanted && !reachable.empty() && attempt < 50 * wanted;
         ++attempt) {
        const auto& [spot, ticks] = reachable[rng() % reachable.size()];
        const std::size_t end = ticks[rng() % ticks.size()];
        if (used_ends.count(end)) continue;
        auto samples = continuous_window(rec, end, opt.intent_max);
        if (samples.size() < opt.intent_min) continue;
        used_ends.insert(end);
        TrajectoryWindow w;
        w.lesion_id = static_cast<int>(spot);
        w.kind = WindowKind::Intent;
        w.label = WindowLabel::Unintentional;
        w.slice_number = spots[spot].slice_number;
        w.target = spots[spot].box;
        w.samples = std::move(samples);
        out.windows.push_back(std::move(w));
        ++made;
    }
    out.tally.produced += made;
    return out;
}

}  // namespace gazepet
