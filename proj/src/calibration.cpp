#include "gazepet/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gazepet/error.hpp"

namespace gazepet {

Aggregate aggregate(std::vector<double> v) {
    Aggregate a;
    if (v.empty()) return a;
    const double n = static_cast<double>(v.size());
    a.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    if (v.size() > 1) {
        double ss = 0;
        for (double x : v) ss += (x - a.mean) * (x - a.mean);
        a.std = std::sqrt(ss / (n - 1));
    }
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    a.median = v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2;
    a.min = v.front();
    a.max = v.back();
    return a;
}

namespace {

struct WindowSample {
    Point2 gaze_px;
    Vec3 origin;
};

void fill_aggregates(CalibrationReport& r) {
    std::vector<double> acc, prec, last, closest;
    for (const auto& c : r.records) {
        acc.push_back(c.accuracy_deg);
        prec.push_back(c.precision_deg);
        last.push_back(c.last_gaze_deg);
        closest.push_back(c.closest_gaze_deg);
    }
    r.accuracy = aggregate(acc);
    r.precision = aggregate(prec);
    r.last_gaze = aggregate(last);
    r.closest_gaze = aggregate(closest);
}

nlohmann::json agg_json(const Aggregate& a) {
    return {{"mean", a.mean}, {"std", a.std}, {"median", a.median}, {"min", a.min}, {"max", a.max}};
}

}  // namespace

CalibrationReport calibration_metrics(const SessionRecording& rec, const ViewingGeometry& geom,
                                      std::int64_t window_us) {
    rec.check_integrity();
    geom.validate();
    CalibrationReport report;
    for (const auto& lesion : rec.lesions) {
        const std::int64_t t1 = lesion.selection.time_stamp;
        const std::int64_t t0 = t1 - window_us;
        std::vector<WindowSample> w;
        for (std::size_t i = 0; i < rec.tobii_cam.size(); ++i) {
            const auto& g = rec.tobii_cam[i];
            if (g.system_time_stamp <= t0 || g.system_time_stamp > t1) continue;
            const auto p = gaze_monitor_point(g, rec.common_cam[i]);
            const auto o = gaze_origin(g);
            if (p && o) w.push_back({*p, *o});
        }
        if (w.size() < 2) {
            ++report.skipped;
            continue;
        }
        const Point2 target =
            image_to_monitor(lesion.root_box().box.center(), lesion.selection.display);

        CalibrationRecord c;
        c.lesion_id = lesion.lesion_id;
        c.samples = w.size();
        double sum = 0, closest = INFINITY;
        for (const auto& s : w) {
            const double a = angle_between(s.origin, s.gaze_px, target, geom);
            sum += a;
            closest = std::min(closest, a);
        }
        c.accuracy_deg = sum / static_cast<double>(w.size());
        c.closest_gaze_deg = closest;
        c.last_gaze_deg = angle_between(w.back().origin, w.back().gaze_px, target, geom);
        double sq = 0;
        for (std::size_t i = 1; i < w.size(); ++i) {
            const Vec3 mid{(w[i - 1].origin[0] + w[i].origin[0]) / 2,
                           (w[i - 1].origin[1] + w[i].origin[1]) / 2,
                           (w[i - 1].origin[2] + w[i].origin[2]) / 2};
            const double a = angle_between(mid, w[i - 1].gaze_px, w[i].gaze_px, geom);
            sq += a * a;
        }
        c.precision_deg = std::sqrt(sq / static_cast<double>(w.size() - 1));
        report.records.push_back(c);
    }
    if (report.records.empty()) {
        throw EmptyReportError("no accepted lesion has two valid gaze samples before selection");
    }
    fill_aggregates(report);
    return report;
}

CalibrationReport merge_reports(const std::vector<CalibrationReport>& reports) {
    CalibrationReport out;
    for (const auto& r : reports) {
        out.records.insert(out.records.end(), r.records.begin(), r.records.end());
        out.skipped += r.skipped;
    }
    if (out.records.empty()) throw EmptyReportError("no calibration records");
    fill_aggregates(out);
    return out;
}

nlohmann::json CalibrationReport::to_json() const {
    nlohmann::json out;
    out["unit"] = "deg";
    out["records"] = nlohmann::json::array();
    for (const auto& c : records) {
        out["records"].push_back({{"lesion_id", c.lesion_id},
                                  {"samples", c.samples},
                                  {"accuracy_deg", c.accuracy_deg},
                                  {"precision_deg", c.precision_deg},
                                  {"last_gaze_deg", c.last_gaze_deg},
                                  {"closest_gaze_deg", c.closest_gaze_deg}});
    }
    out["accuracy"] = agg_json(accuracy);
    out["precision"] = agg_json(precision);
    out["last_gaze"] = agg_json(last_gaze);
    out["closest_gaze"] = agg_json(closest_gaze);
    out["skipped"] = skipped;
    return out;
}

std::string CalibrationReport::to_csv() const {
    std::ostringstream os;
    os.precision(6);
    os << std::fixed;
    os << "metric,unit,mean,std,median,min,max\n";
    const auto row = [&](const char* name, const Aggregate& a) {
        os << name << ",deg," << a.mean << ',' << a.std << ',' << a.median << ',' << a.min << ','
           << a.max << '\n';
    };
    row("accuracy", accuracy);
    row("precision", precision);
    row("last_gaze", last_gaze);
    row("closest_gaze", closest_gaze);
    return os.str();
}

}  // namespace gazepet
