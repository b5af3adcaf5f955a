#include "gazepet/seg_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "gazepet/components.hpp"
#include "gazepet/error.hpp"
#include "gazepet/session.hpp"

namespace gazepet {

double dice(const LabelVolume& a, const LabelVolume& b) {
    if (!(a.dims == b.dims)) throw InvalidArgument("dice: mask shapes differ");
    std::int64_t na = 0, nb = 0, both = 0;
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        const bool x = a.labels[i] != 0, y = b.labels[i] != 0;
        na += x;
        nb += y;
        both += x && y;
    }
    if (na + nb == 0) return 1.0;
    return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

LesionPR lesion_pr(const LabelVolume& pred, const LabelVolume& truth) {
    if (!(pred.dims == truth.dims)) throw InvalidArgument("lesion_pr: mask shapes differ");
    const auto p = connected_components_3d(pred);
    const auto t = connected_components_3d(truth);
    std::map<std::pair<int, int>, std::int64_t> overlap;
    for (std::size_t i = 0; i < p.ids.size(); ++i) {
        if (p.ids[i] && t.ids[i]) ++overlap[{p.ids[i], t.ids[i]}];
    }
    std::vector<std::pair<std::int64_t, std::pair<int, int>>> pairs;
    for (const auto& [k, n] : overlap) pairs.push_back({n, k});
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const auto& x, const auto& y) { return x.first > y.first; });
    std::set<int> used_p, used_t;
    LesionPR out;
    for (const auto& [n, k] : pairs) {
        if (used_p.count(k.first) || used_t.count(k.second)) continue;
        used_p.insert(k.first);
        used_t.insert(k.second);
        ++out.matched;
    }
    out.pred_lesions = static_cast<std::size_t>(p.count);
    out.truth_lesions = static_cast<std::size_t>(t.count);
    const auto frac = [](std::size_t num, std::size_t den, bool other_empty) {
        if (den == 0) return other_empty ? 1.0 : 0.0;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    out.precision = frac(out.matched, out.pred_lesions, out.truth_lesions == 0);
    out.recall = frac(out.matched, out.truth_lesions, out.pred_lesions == 0);
    return out;
}

double mean_point_to_mask(const Point2& p, const std::vector<Point2>& mask) {
    if (mask.empty()) throw InvalidArgument("mean_point_to_mask: empty mask");
    double sum = 0;
    for (const auto& q : mask) sum += std::hypot(q.x - p.x, q.y - p.y);
    return sum / static_cast<double>(mask.size());
}

namespace {

double nearest_angle(const Point2& image_point, const CorrectionCase& c,
                     const ViewingGeometry& geom) {
    const Point2 from = image_to_monitor(image_point, c.display);
    double best = INFINITY;
    for (const auto& m : c.mask_pixels) {
        best = std::min(best, angle_between(c.origin_mm, from, image_to_monitor(m, c.display), geom));
    }
    return best;
}

}  // namespace

CorrectionEval gaze_correction_eval(const std::vector<CorrectionCase>& cases,
                                    const ViewingGeometry& geom) {
    CorrectionEval out;
    out.cases = cases.size();
    if (cases.empty()) return out;
    std::size_t on = 0, improved = 0;
    double angle_sum = 0;
    for (const auto& c : cases) {
        if (c.mask_pixels.empty()) throw InvalidArgument("gaze_correction_eval: empty mask");
        const double px = std::floor(c.predicted.x + 0.5), py = std::floor(c.predicted.y + 0.5);
        if (std::any_of(c.mask_pixels.begin(), c.mask_pixels.end(),
                        [&](const Point2& m) { return m.x == px && m.y == py; })) {
            ++on;
        }
        const double a_pred = nearest_angle(c.predicted, c, geom);
        const double a_last = nearest_angle(c.last_gaze, c, geom);
        if (a_pred < a_last) ++improved;
        angle_sum += a_pred;
    }
    const double n = static_cast<double>(cases.size());
    out.on_mask_pct = 100.0 * static_cast<double>(on) / n;
    out.improved_pct = 100.0 * static_cast<double>(improved) / n;
    out.mean_angle_deg = angle_sum / n;
    return out;
}

}  // namespace gazepet
